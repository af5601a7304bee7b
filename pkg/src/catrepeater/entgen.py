"""Heralded entanglement generation across one repeater segment.

Two photon-pair sources sit at the segment ends; one photonic mode from each
travels half the segment to a central station, where the modes interfere on a
balanced beam splitter and feed two non-number-resolving single-photon
detectors.  A single click (either detector) heralds a Bell-like state
(|01> + |10>)/sqrt2 on the two retained memory modes, plus multi-excitation
contributions that grow with the pair-production probability.

Loss model: fiber transmission exp(-(L0/2)/Latt) per arm and detector
efficiency eta_d are folded into one binomial loss channel per arm ahead of
the beam splitter (the two commute for identical arms).  Every loss/click
pattern leaves a pure conditional state, so the heralded output is returned
as an explicit branch ensemble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fock
from .fock import BranchEnsemble, PureState


@dataclass(frozen=True)
class SourceParams:
    """Physical knobs of one entanglement-generation segment."""

    p: float                  # pair production probability per source
    eta_d: float              # single-photon-detector efficiency
    L0_km: float              # segment length
    Latt_km: float = 20.0     # fiber attenuation length
    c_kms: float = 2.0e5      # signal velocity in fiber

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must be in [0, 1), got {self.p}")
        if not 0.0 < self.eta_d <= 1.0:
            raise ValueError(f"eta_d must be in (0, 1], got {self.eta_d}")
        if self.L0_km <= 0 or self.Latt_km <= 0 or self.c_kms <= 0:
            raise ValueError("L0_km, Latt_km and c_kms must be positive")

    @property
    def eta_t(self) -> float:
        """Fiber transmission of one arm (half a segment)."""
        return math.exp(-(self.L0_km / 2.0) / self.Latt_km)

    @property
    def attempt_time_s(self) -> float:
        """Repetition period, set by the classical heralding time L0/c."""
        return self.L0_km / self.c_kms


@dataclass(frozen=True)
class HeraldedOutcome:
    state: BranchEnsemble     # two memory modes, weights sum to 1
    p_succ: float             # per-attempt success probability
    attempt_time_s: float


def _pair_amplitudes(p: float, truncation: int) -> np.ndarray:
    """Amplitudes sqrt(1-p) p^(n/2) of the photon-pair source, n = 0..truncation."""
    n = np.arange(truncation + 1)
    return math.sqrt(1.0 - p) * p ** (n / 2.0)


def _loss_amplitude(n: int, lost: int, eta: float) -> float:
    if lost > n:
        return 0.0
    return math.sqrt(math.comb(n, lost) * eta ** (n - lost) * (1.0 - eta) ** lost)


@lru_cache(maxsize=64)
def _heralded_cached(p: float, eta: float, truncation: int, number_resolved: bool):
    t = truncation
    c = _pair_amplitudes(p, t)
    branches = []
    for la in range(t + 1):
        for lb in range(t + 1):
            amp = np.zeros((t + 1,) * 4, dtype=np.complex128)
            for n in range(la, t + 1):
                wa = c[n] * _loss_amplitude(n, la, eta)
                if wa == 0.0:
                    continue
                for m in range(lb, t + 1):
                    wb = c[m] * _loss_amplitude(m, lb, eta)
                    amp[n, n - la, m, m - lb] = wa * wb
            if not np.any(amp):
                continue
            st = fock.apply_beamsplitter(PureState(amp), 1, 3)
            click_max = 1 if number_resolved else t
            for j in range(1, click_max + 1):
                mem_a = PureState(st.amps[:, j, :, 0])
                w = mem_a.norm_sq()
                if w > 1e-300:
                    branches.append((w, mem_a.normalized()))
                mem_b = PureState(st.amps[:, 0, :, j])
                w = mem_b.norm_sq()
                if w > 1e-300:
                    # canonicalize the second click pattern to the first by the
                    # local phase (-1)^n on memory B
                    mem_b = fock.apply_number_phase(mem_b, 1, math.pi)
                    branches.append((w, mem_b.normalized()))
    p_succ = float(sum(w for w, _ in branches))
    if p_succ <= 0:
        raise ValueError("heralding impossible with the given parameters")
    norm = [(w / p_succ, st) for w, st in branches]
    return norm, p_succ


def heralded_state(params: SourceParams, truncation: int = 3,
                   number_resolved: bool = False) -> HeraldedOutcome:
    """Post-click ensemble on the two memory modes and the success probability.

    Success means exactly one detector clicks; both click patterns are kept
    and the second is mapped onto the first by a local phase flip.  Raises
    when p = 0 (no heralding possible) or when the source truncation leaves
    more than 1e-8 of the source weight unaccounted.
    """
    if params.p <= 0.0:
        raise ValueError("heralding needs p > 0")
    if params.p ** (truncation + 1) > 1e-8:
        raise ValueError(
            f"truncation {truncation} too small for p={params.p}: "
            f"residual source weight {params.p ** (truncation + 1):.2e} > 1e-8")
    eta = params.eta_t * params.eta_d
    branches, p_succ = _heralded_cached(params.p, eta, truncation, number_resolved)
    return HeraldedOutcome(BranchEnsemble(list(branches)), p_succ,
                           params.attempt_time_s)


def multi_excitation_weight(params: SourceParams, truncation: int = 3) -> float:
    """Heralded-state weight outside the single-excitation Bell subspace."""
    if params.p == 0.0:
        return 0.0
    out = heralded_state(params, truncation)
    weight = 0.0
    for w, st in out.state.branches:
        inside = abs(st.amps[0, 1]) ** 2 + abs(st.amps[1, 0]) ** 2
        weight += w * (1.0 - inside)
    return weight


def bell_state(cutoff: int = 3) -> PureState:
    """Ideal heralded target (|01> + |10>)/sqrt2."""
    amps = np.zeros((cutoff + 1, cutoff + 1), dtype=np.complex128)
    amps[0, 1] = amps[1, 0] = 1.0 / math.sqrt(2.0)
    return PureState(amps)
