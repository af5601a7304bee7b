"""Truncated Fock-space simulation of multimode bosonic pure states.

Quadrature convention: x = (a + a^dag)/sqrt(2), p = -i(a - a^dag)/sqrt(2),
so the vacuum X-wavefunction is pi**(-1/4) * exp(-x**2/2) and the vacuum
X-variance is 1/2.  All other modules inherit this convention.

States are immutable value objects holding a complex amplitude tensor with
one axis per mode.  Axes may carry different cutoffs; the constructors below
always produce uniform cutoffs.  Operations are pure functions; none of them
mutates its input, so states can be shared freely between threads.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

VACUUM_X_VARIANCE = 0.5
DEFAULT_LEAK_TOL = 1e-10
#: spacing of the quadrature grid used for inverse-CDF homodyne sampling
SAMPLING_GRID_STEP = 1e-3


class InsufficientCutoffError(ValueError):
    """Raised when a requested cutoff cannot hold the state without leakage."""


def required_cutoff(alpha: complex) -> int:
    """Smallest cutoff considered safe for a coherent amplitude ``alpha``."""
    a = abs(alpha)
    return math.ceil(a * a + 6.0 * a + 10.0)


@dataclass(frozen=True)
class PureState:
    """A (possibly sub-normalized) pure state on ``nmodes`` bosonic modes.

    ``amps[n1, ..., nk]`` is the amplitude on the Fock state |n1,...,nk>.
    The norm may be < 1 for conditional branches produced by homodyne
    projections.
    """

    amps: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=np.complex128)
        object.__setattr__(self, "amps", a)

    @property
    def nmodes(self) -> int:
        return self.amps.ndim

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return tuple(d - 1 for d in self.amps.shape)

    @property
    def cutoff(self) -> int:
        """Uniform cutoff accessor; raises if modes disagree."""
        cs = set(self.cutoffs)
        if len(cs) != 1:
            raise ValueError(f"state has non-uniform cutoffs {self.cutoffs}")
        return cs.pop()

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def normalized(self) -> "PureState":
        n2 = self.norm_sq()
        if n2 <= 0.0:
            raise ValueError("cannot normalize a zero-norm state")
        return PureState(self.amps / math.sqrt(n2))

    def mode_marginal(self, i: int) -> np.ndarray:
        """Photon-number distribution of mode ``i`` (marginal probabilities)."""
        axes = tuple(k for k in range(self.nmodes) if k != i)
        return np.sum(np.abs(self.amps) ** 2, axis=axes)

    def top_level_weight(self, i: int) -> float:
        """Probability weight sitting at the top Fock level of mode ``i``."""
        return float(self.mode_marginal(i)[-1])

    def max_top_level_weight(self) -> float:
        return max(self.top_level_weight(i) for i in range(self.nmodes))


@dataclass(frozen=True)
class BranchEnsemble:
    """Incoherent mixture as an explicit list of (weight, normalized state)."""

    branches: list = field(default_factory=list)

    def __post_init__(self):
        total = 0.0
        for w, st in self.branches:
            if w < 0:
                raise ValueError(f"negative branch weight {w}")
            if not isinstance(st, PureState):
                raise TypeError("branches must hold PureState values")
            total += w
        if total > 1.0 + 1e-12:
            raise ValueError(f"branch weights sum to {total} > 1")

    @property
    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.branches))

    def renormalized(self) -> "BranchEnsemble":
        t = self.total_weight
        if t <= 0:
            raise ValueError("cannot renormalize an empty ensemble")
        return BranchEnsemble([(w / t, st) for w, st in self.branches])


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def vacuum(nmodes: int, cutoff: int) -> PureState:
    amps = np.zeros((cutoff + 1,) * nmodes, dtype=np.complex128)
    amps[(0,) * nmodes] = 1.0
    return PureState(amps)


def number_state(ns, cutoff: int) -> PureState:
    ns = tuple(int(n) for n in np.atleast_1d(ns))
    if any(n > cutoff for n in ns):
        raise InsufficientCutoffError(f"photon numbers {ns} exceed cutoff {cutoff}")
    amps = np.zeros((cutoff + 1,) * len(ns), dtype=np.complex128)
    amps[ns] = 1.0
    return PureState(amps)


def coherent_vector(alpha: complex, cutoff: int) -> np.ndarray:
    """Fock coefficients of |alpha> up to ``cutoff`` (normalized analytically)."""
    v = np.zeros(cutoff + 1, dtype=np.complex128)
    v[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(cutoff):
        v[n + 1] = v[n] * alpha / math.sqrt(n + 1)
    return v


def coherent(alpha: complex, cutoff: int) -> PureState:
    need = required_cutoff(alpha)
    if cutoff < need:
        raise InsufficientCutoffError(
            f"insufficient cutoff {cutoff} for |alpha|={abs(alpha):.3f}; need >= {need}"
        )
    return PureState(coherent_vector(alpha, cutoff))


def cat_single(alpha: float, cutoff: int) -> PureState:
    """Normalized single-mode even cat, |alpha> + |-alpha| up to normalization."""
    need = required_cutoff(alpha)
    if cutoff < need:
        raise InsufficientCutoffError(
            f"insufficient cutoff {cutoff} for |alpha|={abs(alpha):.3f}; need >= {need}"
        )
    v = coherent_vector(alpha, cutoff) + coherent_vector(-alpha, cutoff)
    n2 = float(np.vdot(v, v).real)
    return PureState(v / math.sqrt(n2))


def cat_two(alpha: float, theta: float, cutoff: int) -> PureState:
    """Normalized two-mode cat e^{i theta}|a,a> + e^{-i theta}|-a,-a>."""
    need = required_cutoff(alpha)
    if cutoff < need:
        raise InsufficientCutoffError(
            f"insufficient cutoff {cutoff} for |alpha|={abs(alpha):.3f}; need >= {need}"
        )
    vp = coherent_vector(alpha, cutoff)
    vm = coherent_vector(-alpha, cutoff)
    amps = np.exp(1j * theta) * np.outer(vp, vp) + np.exp(-1j * theta) * np.outer(vm, vm)
    n2 = float(np.vdot(amps, amps).real)
    if n2 < 1e-12:
        raise ValueError("degenerate two-mode cat (norm ~ 0)")
    return PureState(amps / math.sqrt(n2))


def tensor(a: PureState, b: PureState) -> PureState:
    joint = np.tensordot(a.amps, b.amps, axes=0)
    return PureState(joint)


# ---------------------------------------------------------------------------
# shape utilities
# ---------------------------------------------------------------------------

def pad(state: PureState, cutoffs) -> PureState:
    """Zero-pad each mode up to the requested cutoffs (never shrinks)."""
    cutoffs = tuple(int(c) for c in cutoffs)
    if len(cutoffs) != state.nmodes:
        raise ValueError("cutoff list must match mode count")
    widths = []
    for c, old in zip(cutoffs, state.cutoffs):
        if c < old:
            raise ValueError(f"pad cannot shrink cutoff {old} -> {c}; use trim")
        widths.append((0, c - old))
    return PureState(np.pad(state.amps, widths))


def trim(state: PureState, leak_tol: float = 1e-12, min_cutoff: int = 2) -> PureState:
    """Shrink each mode cutoff so the discarded per-mode tail is < leak_tol."""
    slices = []
    for i in range(state.nmodes):
        marg = state.mode_marginal(i)
        tail = np.cumsum(marg[::-1])[::-1]
        keep = state.cutoffs[i]
        for c in range(min_cutoff, keep + 1):
            if c + 1 > len(marg) - 1 or tail[c + 1] < leak_tol:
                keep = c
                break
        slices.append(slice(0, keep + 1))
    return PureState(state.amps[tuple(slices)])


# ---------------------------------------------------------------------------
# linear optics
# ---------------------------------------------------------------------------

_BS_BLOCKS: dict[int, np.ndarray] = {}


def _bs_block(total: int) -> np.ndarray:
    """Matrix of the balanced beam splitter on the total-photon-N subspace.

    Basis within the block: |n, N-n> for n = 0..N.  Convention: amplitudes map
    (a, b) -> ((a+b)/sqrt2, (a-b)/sqrt2), realized as a sign flip on mode b
    followed by a mode rotation; the block is real orthogonal.
    """
    blk = _BS_BLOCKS.get(total)
    if blk is not None:
        return blk
    n = np.arange(total)
    k = np.zeros((total + 1, total + 1))
    up = np.sqrt((n + 1.0) * (total - n))      # |n,N-n> -> |n+1,N-n-1>
    k[n + 1, n] = up
    k[n, n + 1] = -up
    rot = expm(-(math.pi / 4.0) * k)
    signs = np.where((total - np.arange(total + 1)) % 2, -1.0, 1.0)
    blk = rot * signs[np.newaxis, :]
    _BS_BLOCKS[total] = blk
    return blk


def _front_pair(amps: np.ndarray, i: int, j: int) -> np.ndarray:
    moved = np.moveaxis(amps, (i, j), (0, 1))
    return moved.reshape(moved.shape[0], moved.shape[1], -1)


def _unfront_pair(work: np.ndarray, shape_moved, i: int, j: int) -> np.ndarray:
    out = work.reshape(shape_moved)
    return np.moveaxis(out, (0, 1), (i, j))


def apply_beamsplitter(state: PureState, i: int, j: int) -> PureState:
    """Balanced beam splitter on modes (i, j): (a,b) -> ((a+b), (a-b))/sqrt2.

    Unitary within the truncation; amplitude that would land above either
    cutoff is dropped (cutoff leakage).
    """
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    nm = state.nmodes
    if not (0 <= i < nm and 0 <= j < nm):
        raise ValueError(f"mode index out of range for {nm}-mode state")
    ci, cj = state.cutoffs[i], state.cutoffs[j]
    work = _front_pair(state.amps, i, j)
    out = np.zeros_like(work)
    for total in range(ci + cj + 1):
        lo = max(0, total - cj)
        hi = min(ci, total)
        rng = np.arange(lo, hi + 1)
        vec = work[rng, total - rng, :]
        blk = _bs_block(total)[np.ix_(rng, rng)]
        out[rng, total - rng, :] = blk @ vec
    moved_shape = np.moveaxis(state.amps, (i, j), (0, 1)).shape
    return PureState(_unfront_pair(out, moved_shape, i, j))


_SQUEEZE_CACHE: dict[tuple[int, float], np.ndarray] = {}


def _squeeze_matrix(cutoff: int, s: float) -> np.ndarray:
    key = (cutoff, float(s))
    mat = _SQUEEZE_CACHE.get(key)
    if mat is not None:
        return mat
    r = 0.5 * math.log(s)
    n = np.arange(cutoff - 1)
    a2 = np.zeros((cutoff + 1, cutoff + 1))
    a2[n, n + 2] = np.sqrt((n + 1.0) * (n + 2.0))
    gen = 0.5 * r * (a2 - a2.T)
    mat = expm(gen)
    _SQUEEZE_CACHE[key] = mat
    return mat


def apply_squeeze(state: PureState, i: int, s: float, leak_tol: float = DEFAULT_LEAK_TOL) -> PureState:
    """Reduce the X-variance of mode ``i`` by the factor ``s``.

    Acts on wavefunctions as psi(x) -> s**(1/4) psi(sqrt(s) x).  Implemented
    through the ladder-operator generator; the truncated generator is
    skew-symmetric, so the map is exactly norm-preserving, and the top-level
    weight is checked afterwards.
    """
    if s <= 0:
        raise ValueError(f"squeeze factor must be positive, got {s}")
    nm = state.nmodes
    if not (0 <= i < nm):
        raise ValueError(f"mode index out of range for {nm}-mode state")
    mat = _squeeze_matrix(state.cutoffs[i], s)
    moved = np.moveaxis(state.amps, i, 0)
    work = mat @ moved.reshape(moved.shape[0], -1)
    out = PureState(np.moveaxis(work.reshape(moved.shape), 0, i))
    top = out.top_level_weight(i)
    if top > leak_tol:
        warnings.warn(
            f"squeeze left weight {top:.2e} at the cutoff of mode {i}",
            RuntimeWarning,
            stacklevel=2,
        )
    return out


def apply_number_phase(state: PureState, i: int, theta: float) -> PureState:
    """Phase rotation exp(i theta n) on mode ``i`` (theta=pi flips parity)."""
    d = state.cutoffs[i] + 1
    phases = np.exp(1j * theta * np.arange(d))
    shape = [1] * state.nmodes
    shape[i] = d
    return PureState(state.amps * phases.reshape(shape))


_X_EIG_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _x_eig(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    got = _X_EIG_CACHE.get(cutoff)
    if got is not None:
        return got
    n = np.arange(cutoff)
    x = np.zeros((cutoff + 1, cutoff + 1))
    x[n, n + 1] = np.sqrt((n + 1.0) / 2.0)
    x[n + 1, n] = x[n, n + 1]
    w, v = np.linalg.eigh(x)
    _X_EIG_CACHE[cutoff] = (w, v)
    return w, v


def x_operator(cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    x = np.zeros((cutoff + 1, cutoff + 1))
    x[n, n + 1] = np.sqrt((n + 1.0) / 2.0)
    x[n + 1, n] = x[n, n + 1]
    return x


def p_operator(cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    p = np.zeros((cutoff + 1, cutoff + 1), dtype=np.complex128)
    p[n, n + 1] = -1j * np.sqrt((n + 1.0) / 2.0)
    p[n + 1, n] = 1j * np.sqrt((n + 1.0) / 2.0)
    return p


def displace_p(state: PureState, i: int, lam: float) -> PureState:
    """Momentum displacement exp(i lam x) on mode ``i`` (shifts p by lam)."""
    w, v = _x_eig(state.cutoffs[i])
    mat = (v * np.exp(1j * lam * w)) @ v.T
    moved = np.moveaxis(state.amps, i, 0)
    work = mat @ moved.reshape(moved.shape[0], -1)
    return PureState(np.moveaxis(work.reshape(moved.shape), 0, i))


def quad_moments(state: PureState, i: int, quad: str = "x") -> tuple[float, float]:
    """Mean and variance of the chosen quadrature of mode ``i``."""
    op = x_operator(state.cutoffs[i]) if quad == "x" else p_operator(state.cutoffs[i])
    moved = np.moveaxis(state.amps, i, 0)
    flat = moved.reshape(moved.shape[0], -1)
    ofl = op @ flat
    n2 = state.norm_sq()
    m1 = float(np.vdot(flat, ofl).real) / n2
    m2 = float(np.vdot(ofl, ofl).real) / n2
    return m1, m2 - m1 * m1


def mean_photon(state: PureState, i: int) -> float:
    marg = state.mode_marginal(i)
    return float(np.dot(np.arange(len(marg)), marg) / state.norm_sq())


# ---------------------------------------------------------------------------
# homodyne detection
# ---------------------------------------------------------------------------

def hermite_functions(nmax: int, x: np.ndarray) -> np.ndarray:
    """Matrix psi_n(x) of harmonic-oscillator eigenfunctions, shape (nmax+1, len(x)).

    Uses the stable three-term recurrence; psi_0 = pi**(-1/4) exp(-x^2/2).
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((nmax + 1, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, nmax):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


def _quad_bra(cutoff: int, quad: str, value: float) -> np.ndarray:
    """Bra coefficients <value|n> of the quadrature eigenstate."""
    psi = hermite_functions(cutoff, np.array([value]))[:, 0]
    if quad == "x":
        return psi.astype(np.complex128)
    if quad == "p":
        return psi * (-1j) ** np.arange(cutoff + 1)
    raise ValueError(f"quadrature must be 'x' or 'p', got {quad!r}")


def homodyne_project(state: PureState, i: int, quad: str, value: float):
    """Project mode ``i`` onto the quadrature eigenbra at ``value``.

    Returns (unnormalized conditional state on the remaining modes, density),
    where density is the squared norm of the projection; integrating it over
    the outcome recovers the input norm squared.
    """
    nm = state.nmodes
    if not (0 <= i < nm):
        raise ValueError(f"mode index out of range for {nm}-mode state")
    kernel = _quad_bra(state.cutoffs[i], quad, value)
    cond = np.tensordot(kernel, np.moveaxis(state.amps, i, 0), axes=(0, 0))
    out = PureState(cond)
    return out, out.norm_sq()


def homodyne_density(state: PureState, i: int, quad: str, value: float) -> float:
    return homodyne_project(state, i, quad, value)[1]


_GRID_CACHE: dict[tuple[int, float, float], tuple[np.ndarray, np.ndarray]] = {}


def _sampling_grid(cutoff: int, step: float = SAMPLING_GRID_STEP):
    """Quadrature grid spanning the full support of a cutoff-``cutoff`` mode.

    The half-width sqrt(2*cutoff+1) + 8 covers the classically allowed region
    of the top Fock level plus a wide Gaussian tail margin.
    """
    half = math.sqrt(2.0 * cutoff + 1.0) + 8.0
    key = (cutoff, half, step)
    got = _GRID_CACHE.get(key)
    if got is not None:
        return got
    npts = int(round(2 * half / step)) + 1
    grid = np.linspace(-half, half, npts)
    psi = hermite_functions(cutoff, grid)
    _GRID_CACHE[key] = (grid, psi)
    return grid, psi


def _reduced_density(state: PureState, i: int) -> np.ndarray:
    moved = np.moveaxis(state.amps, i, 0)
    flat = moved.reshape(moved.shape[0], -1)
    return flat @ flat.conj().T


def _mixture_components(state: PureState, i: int, quad: str):
    """Eigendecompose the reduced state of mode ``i`` into pure components."""
    rho = _reduced_density(state, i)
    tr = float(np.trace(rho).real)
    if tr <= 0:
        raise ValueError("cannot sample a zero-norm state")
    w, v = np.linalg.eigh(rho / tr)
    keep = w > 1e-14
    w = w[keep]
    v = v[:, keep]
    w = w / w.sum()
    if quad == "p":
        v = v * ((-1j) ** np.arange(v.shape[0]))[:, None]
    elif quad != "x":
        raise ValueError(f"quadrature must be 'x' or 'p', got {quad!r}")
    return w, v


def _cell_masses(dens: np.ndarray, step: float) -> np.ndarray:
    return 0.5 * (dens[:-1] + dens[1:]) * step


def _invert_cdf(grid: np.ndarray, masses: np.ndarray, u: float) -> float:
    cdf = np.cumsum(masses)
    total = cdf[-1]
    c = int(np.searchsorted(cdf, u * total))
    c = min(c, len(masses) - 1)
    prev = cdf[c - 1] if c > 0 else 0.0
    frac = (u * total - prev) / max(masses[c], 1e-300)
    frac = min(max(frac, 0.0), 1.0)
    return float(grid[c] + (grid[c + 1] - grid[c]) * frac)


def homodyne_sample(state: PureState, i: int, quad: str, rng: np.random.Generator,
                    step: float = SAMPLING_GRID_STEP):
    """Sample a homodyne outcome on mode ``i`` and collapse the state.

    The outcome follows the exact marginal density: the reduced state of the
    measured mode is split into pure components, one component is chosen by
    its weight, and the outcome is drawn by inverse-CDF on a dense grid.
    Returns (outcome, normalized conditional state).
    """
    n2 = state.norm_sq()
    if n2 <= 0:
        raise ValueError("cannot sample a zero-norm state")
    if abs(n2 - 1.0) > 1e-8:
        state = state.normalized()
    w, v = _mixture_components(state, i, quad)
    k = int(rng.choice(len(w), p=w))
    grid, psi = _sampling_grid(state.cutoffs[i], step)
    f = v[:, k] @ psi
    dens = np.abs(f) ** 2
    masses = _cell_masses(dens, step)
    outcome = _invert_cdf(grid, masses, float(rng.random()))
    cond, dens_out = homodyne_project(state, i, quad, outcome)
    if dens_out <= 0:
        raise ValueError("zero-norm conditional state at the sampled outcome")
    return outcome, cond.normalized()


def _window_masses(grid: np.ndarray, dens: np.ndarray, lo: float, hi: float,
                   step: float):
    """Trapezoid masses of [lo, hi] for row-wise densities on the grid.

    Returns (node span (a, b), per-cell masses inside the node span, total
    mass per row including the fractional edge cells).
    """
    lo = max(lo, float(grid[0]))
    hi = min(hi, float(grid[-1]))
    a = int(np.searchsorted(grid, lo))            # first node >= lo
    b = int(np.searchsorted(grid, hi, side="right")) - 1   # last node <= hi
    if b <= a:
        raise ValueError("acceptance window narrower than the sampling grid step")
    cells = 0.5 * (dens[:, a:b] + dens[:, a + 1:b + 1]) * step
    total = cells.sum(axis=1)
    if a > 0 and grid[a] > lo:
        t = (grid[a] - lo)
        frac = t / step
        d_lo = dens[:, a] * (1 - frac) + dens[:, a - 1] * frac
        total = total + 0.5 * t * (d_lo + dens[:, a])
    if b < len(grid) - 1 and grid[b] < hi:
        t = (hi - grid[b])
        frac = t / step
        d_hi = dens[:, b] * (1 - frac) + dens[:, b + 1] * frac
        total = total + 0.5 * t * (dens[:, b] + d_hi)
    return (a, b), cells, total


def homodyne_sample_in_window(state: PureState, i: int, quad: str,
                              rng: np.random.Generator, lo: float, hi: float,
                              step: float = SAMPLING_GRID_STEP):
    """Sample an outcome conditioned on landing inside [lo, hi].

    Returns (outcome, normalized conditional state, window probability).
    The window probability is the marginal mass of [lo, hi], so callers can
    account for rejected attempts without simulating them.
    """
    n2 = state.norm_sq()
    if n2 <= 0:
        raise ValueError("cannot sample a zero-norm state")
    if abs(n2 - 1.0) > 1e-8:
        state = state.normalized()
    w, v = _mixture_components(state, i, quad)
    grid, psi = _sampling_grid(state.cutoffs[i], step)
    a0 = max(int(np.searchsorted(grid, lo)) - 1, 0)
    b0 = min(int(np.searchsorted(grid, hi, side="right")) + 1, len(grid))
    sub = grid[a0:b0]
    dens = np.abs(v.T @ psi[:, a0:b0]) ** 2
    (a, b), cells, totals = _window_masses(sub, dens, lo, hi, step)
    p_window = float(np.dot(w, totals))
    if p_window <= 0:
        raise ValueError("acceptance window has zero probability mass")
    pick = w * totals
    k = int(rng.choice(len(pick), p=pick / pick.sum()))
    outcome = _invert_cdf(sub[a:b + 1], cells[k], float(rng.random()))
    cond, dens_out = homodyne_project(state, i, quad, outcome)
    if dens_out <= 0:
        raise ValueError("zero-norm conditional state at the sampled outcome")
    return outcome, cond.normalized(), p_window


def window_probability(state: PureState, i: int, quad: str, lo: float, hi: float,
                       step: float = SAMPLING_GRID_STEP) -> float:
    """Probability that a homodyne outcome on mode ``i`` lands in [lo, hi]."""
    st = state if abs(state.norm_sq() - 1.0) <= 1e-8 else state.normalized()
    w, v = _mixture_components(st, i, quad)
    grid, psi = _sampling_grid(st.cutoffs[i], step)
    a0 = max(int(np.searchsorted(grid, lo)) - 1, 0)
    b0 = min(int(np.searchsorted(grid, hi, side="right")) + 1, len(grid))
    dens = np.abs(v.T @ psi[:, a0:b0]) ** 2
    try:
        _, _, totals = _window_masses(grid[a0:b0], dens, lo, hi, step)
    except ValueError:
        return 0.0
    return float(np.dot(w, totals))


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

def inner(a: PureState, b: PureState) -> complex:
    if a.amps.shape != b.amps.shape:
        raise ValueError(f"shape mismatch {a.amps.shape} vs {b.amps.shape}")
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a, b: PureState) -> float:
    """|<a|b>|^2 for pure ``a``; the weighted branch average for ensembles."""
    if isinstance(a, BranchEnsemble):
        return float(sum(w * abs(inner(st, b)) ** 2 for w, st in a.branches))
    return abs(inner(a, b)) ** 2


# ---------------------------------------------------------------------------
# debug serialization
# ---------------------------------------------------------------------------

def state_to_json(state: PureState) -> str:
    flat = state.amps.reshape(-1)
    return json.dumps({
        "nmodes": state.nmodes,
        "cutoffs": list(state.cutoffs),
        "amplitudes": [[float(z.real), float(z.imag)] for z in flat],
    })


def state_from_json(text: str) -> PureState:
    doc = json.loads(text)
    shape = tuple(c + 1 for c in doc["cutoffs"])
    flat = np.array([complex(re, im) for re, im in doc["amplitudes"]])
    return PureState(flat.reshape(shape))
