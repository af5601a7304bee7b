"""Entanglement swapping of two-mode cat states with homodyne detection.

The simple variant mixes the two middle modes of neighbouring cat pairs on a
balanced beam splitter, measures P on the sum port (always accepted, phase
recorded) and X on the difference port, accepting outcomes near zero.  The
auxiliary variant injects k single-mode cats of growing amplitude before the
final X-measurement, which turns all but the two extremal X-bands into
successes.  Both are available on the exact coherent-sum engine; the simple
variant also runs on truncated Fock states for cross-checks.

After n swap rounds the surviving state approaches a squeezed nonlocal cat;
``final_target`` builds that reference state from the convergence factor
``k_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import catalgebra as ca
from . import fock
from .breeding import mu_m
from .catalgebra import CoherentSum
from .fock import PureState

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SwapParams:
    alpha: float
    delta_swap: float | None = None   # None selects the midpoint cut
    k: int = 0

    def __post_init__(self):
        if self.delta_swap is not None and self.delta_swap < 0:
            raise ValueError("delta_swap must be >= 0")
        if self.k < 0:
            raise ValueError("k must be >= 0")


@dataclass(frozen=True)
class SwapResult:
    accepted: bool
    out: object | None
    x_outcome: float
    p_outcomes: list = field(default_factory=list)
    theta_phases: list = field(default_factory=list)


def midpoint_cut(alpha: float) -> float:
    """Default acceptance half-width (X units): midpoint between the density
    peaks of the |0> and |+-sqrt2 alpha> outputs.

    A coherent amplitude g peaks at x = sqrt2*g, so the midpoint between the
    0-peak and the sqrt2*alpha-amplitude peaks sits at x = alpha.
    """
    return alpha


def theta_phase(level: int, alpha: float, p_outcome: float) -> float:
    """Cat phase imprinted by the P-measurement at the given beam splitter level."""
    return -(2.0 ** ((level + 2) / 2.0)) * alpha * p_outcome


# ---------------------------------------------------------------------------
# simple swapping (IIIa)
# ---------------------------------------------------------------------------

def _swap_simple_sum(left: CoherentSum, right: CoherentSum, params: SwapParams,
                     rng, forced_p0, forced_x) -> SwapResult:
    delta = params.delta_swap if params.delta_swap is not None else midpoint_cut(params.alpha)
    joint = ca.tensor(left, right)            # modes (A, B, B', C)
    joint = ca.bs_map(joint, 1, 2)            # sum at 1, difference at 2
    if forced_p0 is None:
        p0 = ca.sample_quadrature(joint, 1, "p", rng)
    else:
        p0 = forced_p0
    after_p, dens_p = ca.homodyne_project_exact(joint, 1, "p", p0)
    if dens_p <= 0:
        raise ValueError("zero-norm conditional state after the P-measurement")
    if forced_x is None:
        x = ca.sample_quadrature(after_p, 1, "x", rng)
    else:
        x = forced_x
    theta0 = theta_phase(0, params.alpha, p0)
    if abs(x) > delta:
        return SwapResult(False, None, x, [p0], [theta0])
    out, dens_x = ca.homodyne_project_exact(after_p, 1, "x", x)
    if dens_x <= 0:
        raise ValueError("zero-norm conditional state at the X-outcome")
    return SwapResult(True, out.normalized(), x, [p0], [theta0])


def _swap_simple_fock(left: PureState, right: PureState, params: SwapParams,
                      rng, forced_p0, forced_x) -> SwapResult:
    delta = params.delta_swap if params.delta_swap is not None else midpoint_cut(params.alpha)
    joint = fock.tensor(left, right)
    joint = fock.apply_beamsplitter(joint, 1, 2)
    if forced_p0 is None:
        p0, cond = fock.homodyne_sample(joint, 1, "p", rng)
    else:
        p0 = forced_p0
        cond, dens = fock.homodyne_project(joint, 1, "p", p0)
        if dens <= 0:
            raise ValueError("zero-norm conditional state after the P-measurement")
        cond = cond.normalized()
    if forced_x is None:
        x, out = fock.homodyne_sample(cond, 1, "x", rng)
    else:
        x = forced_x
        out, dens = fock.homodyne_project(cond, 1, "x", x)
        if dens <= 0:
            raise ValueError("zero-norm conditional state at the X-outcome")
        out = out.normalized()
    theta0 = theta_phase(0, params.alpha, p0)
    if abs(x) > delta:
        return SwapResult(False, None, x, [p0], [theta0])
    return SwapResult(True, out, x, [p0], [theta0])


def swap_simple(left, right, params: SwapParams, rng=None,
                forced_p0: float | None = None,
                forced_x: float | None = None) -> SwapResult:
    """Swap two cat pairs sharing a middle station (modes A,B | B',C).

    Mixes (B, B') on a balanced beam splitter, measures P on the sum port
    (outcome always kept, phase theta0 = -2*alpha*p0 recorded) and X on the
    difference port, accepting |x| <= delta.  Dispatches on the state type:
    CoherentSum runs exactly, PureState runs in the Fock engine.
    """
    if isinstance(left, CoherentSum) != isinstance(right, CoherentSum):
        raise TypeError("left and right must use the same engine")
    if rng is None and (forced_p0 is None or forced_x is None):
        raise ValueError("swap_simple needs rng or fully forced outcomes")
    if isinstance(left, CoherentSum):
        return _swap_simple_sum(left, right, params, rng, forced_p0, forced_x)
    return _swap_simple_fock(left, right, params, rng, forced_p0, forced_x)


def swap_simple_acceptance(alpha: float, delta: float | None = None,
                           theta: float = 0.0) -> float:
    """Exact acceptance probability of the simple swap on ideal cat inputs."""
    if delta is None:
        delta = midpoint_cut(alpha)
    joint = ca.tensor(ca.cat_sum_two(alpha, theta), ca.cat_sum_two(alpha, theta))
    joint = ca.bs_map(joint, 1, 2)
    mass = ca.x_band_mass(joint, 2, [(-delta, delta)])[0]
    return mass / joint.norm_sq()


# ---------------------------------------------------------------------------
# auxiliary-cat swapping (IIIb)
# ---------------------------------------------------------------------------

def _aux_chain(alpha: float, k: int, theta: float = 0.0) -> tuple[CoherentSum, int]:
    """State after the beam-splitter chain with unmeasured P ports.

    Returns (sum, index of the X-carrier mode).  Mode order: A, C, then the k+1
    unprojected P-sum ports, with the X-carrier last.
    """
    joint = ca.tensor(ca.cat_sum_two(alpha, theta), ca.cat_sum_two(alpha, theta))
    joint = ca.bs_map(joint, 1, 2)
    # reorder bookkeeping is implicit: carrier starts at mode 2 (difference port)
    carrier = 2
    for j in range(1, k + 1):
        aux = ca.cat_sum_single(2.0 ** (j / 2.0) * alpha)
        joint = ca.tensor(joint, aux)
        new_mode = joint.nmodes - 1
        joint = ca.bs_map(joint, carrier, new_mode)   # sum at carrier, diff at new
        carrier = new_mode
    return joint, carrier


def aux_accept_band(alpha: float, k: int) -> tuple[float, float]:
    """Acceptance interval for the final X-measurement of the k-aux swap.

    All bands except the two extremal peaks are successes; the boundary sits
    at the midpoint between the outermost and second-outermost X peaks.
    """
    chain, carrier = _aux_chain(alpha, k)
    peaks = np.unique(np.round(_SQRT2 * chain.amps[:, carrier].real, 9))
    if len(peaks) < 2:
        return (-math.inf, math.inf)
    cut = 0.5 * (peaks[-1] + peaks[-2])
    return (-cut, cut)


def swap_aux_acceptance(alpha: float, k: int) -> float:
    """Exact acceptance probability of the k-auxiliary swap (analytic only)."""
    chain, carrier = _aux_chain(alpha, k)
    lo, hi = aux_accept_band(alpha, k)
    mass = ca.x_band_mass(chain, carrier, [(lo, hi)])[0]
    return mass / chain.norm_sq()


def swap_aux(left: CoherentSum, right: CoherentSum, k: int, params: SwapParams,
             rng=None, forced_ps=None, forced_x: float | None = None) -> SwapResult:
    """k-auxiliary entanglement swap on the exact engine.

    ``forced_ps`` pins the k+1 P-outcomes (main port first); the final
    X-outcome is classified against the extremal-failure bands.  On success
    the output is the normalized two-mode sum on (A, C) with the accumulated
    cat phases recorded.
    """
    if not isinstance(left, CoherentSum) or not isinstance(right, CoherentSum):
        raise TypeError("swap_aux runs on the coherent-sum engine only")
    if k < 1:
        raise ValueError("swap_aux needs k >= 1; use swap_simple for k = 0")
    if rng is None and (forced_ps is None or forced_x is None):
        raise ValueError("swap_aux needs rng or fully forced outcomes")
    alpha = params.alpha
    joint = ca.tensor(left, right)
    joint = ca.bs_map(joint, 1, 2)
    carrier = 2
    p_outcomes, thetas = [], []
    for j in range(0, k + 1):
        # P port for level j is the current sum port: mode 1 for j = 0, then
        # the carrier slot after each auxiliary beam splitter.
        if j > 0:
            aux = ca.cat_sum_single(2.0 ** (j / 2.0) * alpha)
            joint = ca.tensor(joint, aux)
            new_mode = joint.nmodes - 1
            joint = ca.bs_map(joint, carrier, new_mode)
            p_port, new_carrier = carrier, new_mode
        else:
            p_port, new_carrier = 1, carrier
        if forced_ps is not None:
            pj = forced_ps[j]
        else:
            pj = ca.sample_quadrature(joint, p_port, "p", rng)
        joint, dens = ca.homodyne_project_exact(joint, p_port, "p", pj)
        if dens <= 0:
            raise ValueError("zero-norm conditional state after a P-measurement")
        joint = ca.prune(joint)
        carrier = new_carrier - (1 if p_port < new_carrier else 0)
        p_outcomes.append(pj)
        thetas.append(theta_phase(j, alpha, pj))
    lo, hi = aux_accept_band(alpha, k)
    if forced_x is not None:
        x = forced_x
    else:
        x = ca.sample_quadrature(joint, carrier, "x", rng)
    if not (lo <= x <= hi):
        return SwapResult(False, None, x, p_outcomes, thetas)
    out, dens = ca.homodyne_project_exact(joint, carrier, "x", x)
    if dens <= 0:
        raise ValueError("zero-norm conditional state at the X-outcome")
    return SwapResult(True, ca.prune(out).normalized(), x, p_outcomes, thetas)


# ---------------------------------------------------------------------------
# convergence factor and final reference state
# ---------------------------------------------------------------------------

def k_n(n: int) -> float:
    """Squeezing-balance factor after n swap rounds.

    Evaluated through the real doubling recurrence c_{j+1} = (c_j^2+1)/(2 c_j)
    with c_0 = 1/sqrt2 (the closed form involves arccoth on (0,1), which is
    complex-valued; the recurrence stays real).  Converges fast to 2*sqrt2.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    c = 1.0 / _SQRT2
    for _ in range(n):
        c = (c * c + 1.0) / (2.0 * c)
    return 2.0 * _SQRT2 * c


def final_target(m: int, n: int, phi: float, cutoff: int) -> PureState:
    """Reference state delivered after n ideal swap rounds of m-bred cats.

    Builds the two-mode cat of local-mode amplitude mu_m / sqrt(k_n), then
    applies squeezing by 4/k_n on the symmetric and k_n/2 on the
    antisymmetric combination.  At n = 0 this reduces exactly to the breeding
    target (squeezed cat in the symmetric mode); a saddle-point analysis of
    the zero-conditioned swap output fixes the amplitude normalization.
    """
    kn = k_n(n)
    beta = mu_m(m) / math.sqrt(kn)
    need = fock.required_cutoff(_SQRT2 * beta)
    if cutoff < need:
        raise fock.InsufficientCutoffError(
            f"insufficient cutoff {cutoff} for final target; need >= {need}")
    st = fock.cat_two(beta, phi, cutoff)
    st = fock.apply_beamsplitter(st, 0, 1)        # to +/- basis
    st = fock.apply_squeeze(st, 0, 4.0 / kn)
    st = fock.apply_squeeze(st, 1, kn / 2.0)
    st = fock.apply_beamsplitter(st, 0, 1)        # back to local modes
    return st.normalized()


def final_target_simplified(m: int, phi: float, cutoff: int) -> PureState:
    """Large-n limit of ``final_target``: local sqrt2 squeezers on a smaller cat."""
    beta = mu_m(m) / 2.0 ** 0.75
    st = fock.cat_two(beta, phi, cutoff)
    st = fock.apply_squeeze(st, 0, _SQRT2)
    st = fock.apply_squeeze(st, 1, _SQRT2)
    return st.normalized()
