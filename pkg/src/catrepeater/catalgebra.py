"""Exact algebra of finite superpositions of multimode coherent states.

A state is a list of terms c_t * |a_t1> ... |a_tk|.  Overlaps, balanced
beam splitters and homodyne projections are all closed-form on such sums,
so this engine has no truncation error; it is the analytic counterpart used
to cross-check the Fock engine and to evaluate swapping success bands.

Kernels (same quadrature convention as :mod:`catrepeater.fock`):
    <x|a> = pi**(-1/4) exp(-x^2/2 + sqrt2 a x - a^2/2 - |a|^2/2)
    <p|a> = pi**(-1/4) exp(-p^2/2 - i sqrt2 a p + a^2/2 - |a|^2/2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .fock import PureState, InsufficientCutoffError, coherent_vector, required_cutoff

_SQRT2 = math.sqrt(2.0)
_QUARTER_PI = math.pi ** -0.25


@dataclass(frozen=True)
class CoherentSum:
    """Finite superposition of products of coherent states (unnormalized)."""

    coeffs: np.ndarray            # shape (nterms,)
    amps: np.ndarray              # shape (nterms, nmodes)
    pruned_bound: float = 0.0     # running bound on coefficient weight dropped

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128))
        a = np.asarray(self.amps, dtype=np.complex128)
        if a.ndim == 1:
            a = a.reshape(len(c), -1)
        if a.shape[0] != c.shape[0]:
            raise ValueError("coeffs and amps disagree on the number of terms")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "amps", a)

    @property
    def nterms(self) -> int:
        return self.coeffs.shape[0]

    @property
    def nmodes(self) -> int:
        return self.amps.shape[1]

    def norm_sq(self) -> float:
        val = overlap(self, self)
        if val.real < -1e-12 or abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
            raise ArithmeticError(f"Gram norm^2 is not real-nonnegative: {val}")
        return max(val.real, 0.0)

    def normalized(self) -> "CoherentSum":
        n2 = self.norm_sq()
        if n2 <= 0:
            raise ValueError("cannot normalize a zero-norm sum")
        return CoherentSum(self.coeffs / math.sqrt(n2), self.amps, self.pruned_bound)

    def max_abs_amp(self) -> float:
        if self.amps.size == 0:
            return 0.0
        return float(np.max(np.abs(self.amps)))


def from_terms(terms) -> CoherentSum:
    """Build from an iterable of (coefficient, per-mode amplitudes)."""
    coeffs = np.array([c for c, _ in terms], dtype=np.complex128)
    amps = np.array([list(np.atleast_1d(a)) for _, a in terms], dtype=np.complex128)
    return CoherentSum(coeffs, amps)


def cat_sum_single(alpha: float, theta: float = 0.0) -> CoherentSum:
    """Unnormalized single-mode cat e^{i th}|a> + e^{-i th}|-a>."""
    return from_terms([(np.exp(1j * theta), [alpha]), (np.exp(-1j * theta), [-alpha])])


def cat_sum_two(alpha: float, theta: float = 0.0) -> CoherentSum:
    """Unnormalized two-mode cat e^{i th}|a,a> + e^{-i th}|-a,-a>."""
    return from_terms([(np.exp(1j * theta), [alpha, alpha]),
                       (np.exp(-1j * theta), [-alpha, -alpha])])


def tensor(a: CoherentSum, b: CoherentSum) -> CoherentSum:
    coeffs = np.multiply.outer(a.coeffs, b.coeffs).reshape(-1)
    left = np.repeat(a.amps, b.nterms, axis=0)
    right = np.tile(b.amps, (a.nterms, 1))
    return CoherentSum(coeffs, np.hstack([left, right]),
                       a.pruned_bound + b.pruned_bound)


def _gram(a: CoherentSum, b: CoherentSum) -> np.ndarray:
    """G[j, k] = <term_j(a) | term_k(b)> across all modes."""
    ea = -0.5 * np.sum(np.abs(a.amps) ** 2, axis=1)
    eb = -0.5 * np.sum(np.abs(b.amps) ** 2, axis=1)
    cross = np.conj(a.amps) @ b.amps.T
    return np.exp(ea[:, None] + eb[None, :] + cross)


def overlap(a: CoherentSum, b: CoherentSum) -> complex:
    """Exact <a|b> via the coherent-state overlap kernel."""
    if a.nmodes != b.nmodes:
        raise ValueError(f"mode mismatch: {a.nmodes} vs {b.nmodes}")
    g = _gram(a, b)
    return complex(np.conj(a.coeffs) @ g @ b.coeffs)


def bs_map(state: CoherentSum, i: int, j: int) -> CoherentSum:
    """Balanced beam splitter: term amplitudes (ai, aj) -> ((ai+aj), (ai-aj))/sqrt2."""
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    nm = state.nmodes
    if not (0 <= i < nm and 0 <= j < nm):
        raise ValueError(f"mode index out of range for {nm}-mode sum")
    amps = state.amps.copy()
    ai, aj = amps[:, i].copy(), amps[:, j].copy()
    amps[:, i] = (ai + aj) / _SQRT2
    amps[:, j] = (ai - aj) / _SQRT2
    return CoherentSum(state.coeffs, amps, state.pruned_bound)


def _x_kernel(alpha: np.ndarray, x: float) -> np.ndarray:
    return _QUARTER_PI * np.exp(-0.5 * x * x + _SQRT2 * alpha * x
                                - 0.5 * alpha ** 2 - 0.5 * np.abs(alpha) ** 2)


def _p_kernel(alpha: np.ndarray, p: float) -> np.ndarray:
    return _QUARTER_PI * np.exp(-0.5 * p * p - 1j * _SQRT2 * alpha * p
                                + 0.5 * alpha ** 2 - 0.5 * np.abs(alpha) ** 2)


def homodyne_project_exact(state: CoherentSum, i: int, quad: str, value: float):
    """Project mode ``i`` onto the quadrature eigenbra at ``value``.

    Returns (CoherentSum on the remaining modes, density).  The density is the
    squared norm of the projected sum, relative to the input normalization.
    """
    nm = state.nmodes
    if not (0 <= i < nm):
        raise ValueError(f"mode index out of range for {nm}-mode sum")
    col = state.amps[:, i]
    if quad == "x":
        factors = _x_kernel(col, value)
    elif quad == "p":
        factors = _p_kernel(col, value)
    else:
        raise ValueError(f"quadrature must be 'x' or 'p', got {quad!r}")
    rest = np.delete(state.amps, i, axis=1)
    out = CoherentSum(state.coeffs * factors, rest, state.pruned_bound)
    return out, out.norm_sq()


def x_band_mass(state: CoherentSum, i: int, bands) -> list[float]:
    """Exact probability mass of X-outcome bands on mode ``i``.

    ``bands`` is a list of (lo, hi) intervals; masses are relative to the
    input normalization (divide by norm_sq for probabilities).  Uses the
    closed-form Gaussian integral with complex error functions.
    """
    nm = state.nmodes
    if not (0 <= i < nm):
        raise ValueError(f"mode index out of range for {nm}-mode sum")
    rest_a = np.delete(state.amps, i, axis=1)
    rest = CoherentSum(state.coeffs, rest_a)
    g_rest = _gram(rest, rest)
    w = np.outer(np.conj(state.coeffs), state.coeffs) * g_rest
    col = state.amps[:, i]
    beta = _SQRT2 * (np.conj(col)[:, None] + col[None, :])
    cc = (-0.5 * (np.conj(col) ** 2 + np.abs(col) ** 2)[:, None]
          - 0.5 * (col ** 2 + np.abs(col) ** 2)[None, :])
    pref = 0.5 * np.exp(cc + 0.25 * beta * beta)
    masses = []
    for lo, hi in bands:
        band = pref * (erf(hi - 0.5 * beta) - erf(lo - 0.5 * beta))
        masses.append(float(np.sum(w * band).real))
    return masses


def quadrature_density(state: CoherentSum, i: int, quad: str, values: np.ndarray) -> np.ndarray:
    """Exact quadrature density of mode ``i`` at the given outcome values.

    Relative to the input normalization (divide by norm_sq for a probability
    density).
    """
    values = np.atleast_1d(np.asarray(values, dtype=float))
    col = state.amps[:, i][:, None]
    if quad == "x":
        kern = _x_kernel(col, values[None, :])
    elif quad == "p":
        kern = _p_kernel(col, values[None, :])
    else:
        raise ValueError(f"quadrature must be 'x' or 'p', got {quad!r}")
    rest = CoherentSum(state.coeffs, np.delete(state.amps, i, axis=1))
    m = np.outer(np.conj(state.coeffs), state.coeffs) * _gram(rest, rest)
    return np.einsum("jg,jk,kg->g", np.conj(kern), m, kern).real


def sample_quadrature(state: CoherentSum, i: int, quad: str,
                      rng: np.random.Generator, step: float = 1e-3) -> float:
    """Draw one homodyne outcome from the exact marginal density of mode ``i``.

    Inverse-CDF on a grid of the given step spanning +-(sqrt2*a_max + 8).
    """
    half = _SQRT2 * state.max_abs_amp() + 8.0
    npts = int(round(2 * half / step)) + 1
    grid = np.linspace(-half, half, npts)
    dens = quadrature_density(state, i, quad, grid)
    masses = 0.5 * (dens[:-1] + dens[1:]) * step
    cdf = np.cumsum(masses)
    total = cdf[-1]
    if total <= 0:
        raise ValueError("cannot sample a zero-mass density")
    u = float(rng.random()) * total
    c = min(int(np.searchsorted(cdf, u)), len(masses) - 1)
    prev = cdf[c - 1] if c > 0 else 0.0
    frac = min(max((u - prev) / max(masses[c], 1e-300), 0.0), 1.0)
    return float(grid[c] + step * frac)


def merge_terms(state: CoherentSum, amp_tol: float = 1e-12) -> CoherentSum:
    """Sum coefficients of terms whose amplitude vectors coincide within tol."""
    order = np.lexsort(tuple(state.amps[:, m].real for m in range(state.nmodes - 1, -1, -1))
                       + tuple(state.amps[:, m].imag for m in range(state.nmodes - 1, -1, -1)))
    amps = state.amps[order]
    coeffs = state.coeffs[order]
    out_a, out_c = [], []
    for a, c in zip(amps, coeffs):
        if out_a and np.max(np.abs(out_a[-1] - a)) <= amp_tol:
            out_c[-1] = out_c[-1] + c
        else:
            out_a.append(a)
            out_c.append(c)
    return CoherentSum(np.array(out_c), np.array(out_a), state.pruned_bound)


def prune(state: CoherentSum, rel_tol: float = 1e-15) -> CoherentSum:
    """Drop terms with negligible coefficients, tracking the discarded bound."""
    mags = np.abs(state.coeffs)
    top = mags.max() if mags.size else 0.0
    keep = mags > rel_tol * top
    if keep.all():
        return state
    dropped = float(mags[~keep].sum())
    return CoherentSum(state.coeffs[keep], state.amps[keep],
                       state.pruned_bound + dropped)


def to_fock(state: CoherentSum, cutoff) -> PureState:
    """Render the sum as a truncated Fock tensor (cross-engine bridge).

    ``cutoff`` may be a single int or one cutoff per mode; each must satisfy
    the safety rule for the largest amplitude appearing in that mode.
    """
    nm = state.nmodes
    cutoffs = [cutoff] * nm if np.isscalar(cutoff) else list(cutoff)
    if len(cutoffs) != nm:
        raise ValueError("cutoff list must match mode count")
    for m in range(nm):
        amax = float(np.max(np.abs(state.amps[:, m]))) if state.nterms else 0.0
        need = required_cutoff(amax)
        if cutoffs[m] < need:
            raise InsufficientCutoffError(
                f"insufficient cutoff {cutoffs[m]} on mode {m}; need >= {need}"
            )
    shape = tuple(c + 1 for c in cutoffs)
    total = np.zeros(shape, dtype=np.complex128)
    for t in range(state.nterms):
        piece = np.array([state.coeffs[t]])
        for m in range(nm):
            piece = np.multiply.outer(piece, coherent_vector(state.amps[t, m], cutoffs[m]))
        total += piece[0]
    return PureState(total)
