"""Full repeater protocol: generation, breeding and swapping over 2^n segments.

Each segment breeds a dual-rail cat from heralded Bell-like states; segments
are then connected pairwise by n rounds of entanglement swapping.  The state
Monte Carlo samples every measurement from its window-conditioned density
(equivalent to accept-until-success with fresh inputs) and records the exact
per-attempt acceptance probability of every stage, so the waiting-time model
can be evaluated without simulating rejected attempts.

Mode bookkeeping: inside a segment the dual-rail pair is tracked in its
symmetric/antisymmetric basis (u, v), where the ideal dynamics live entirely
in u and v stays near vacuum; physical (node-a, node-b) modes are restored
for swapping.  Rail beam splitters commute with that change of basis, and the
dual-rail acceptance |x_a + x_b| <= delta maps to |x_u| <= delta/sqrt2 on the
symmetric measured mode.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import entgen, fock
from .breeding import breeding_cutoff, mu_m
from .entgen import SourceParams
from .fock import PureState
from .swapping import final_target, k_n

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ProtocolParams:
    L_km: float
    n: int
    m: int
    p: float
    delta_gen: float
    delta_swap: float
    eta_d: float = 0.5
    Latt_km: float = 20.0
    c_kms: float = 2.0e5
    trials: int = 200
    truncation: int | None = None   # None: smallest value with <1e-8 residual
    max_m: int = 3

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if not 0 <= self.m <= self.max_m:
            raise ValueError(f"m must be in [0, {self.max_m}] (raise max_m to override)")
        if self.delta_gen < 0 or self.delta_swap < 0:
            raise ValueError("acceptance windows must be >= 0")
        if self.L_km <= 0:
            raise ValueError("L_km must be positive")

    @property
    def segments(self) -> int:
        return 2 ** self.n

    @property
    def L0_km(self) -> float:
        return self.L_km / self.segments

    @property
    def source(self) -> SourceParams:
        return SourceParams(p=self.p, eta_d=self.eta_d, L0_km=self.L0_km,
                            Latt_km=self.Latt_km, c_kms=self.c_kms)

    @property
    def source_truncation(self) -> int:
        if self.truncation is not None:
            return self.truncation
        t = 3
        while self.p > 0 and self.p ** (t + 1) > 1e-8:
            t += 1
        return t


@dataclass(frozen=True)
class RepeaterResult:
    rate_per_s: float
    rate_se: float
    mean_fidelity: float
    fidelity_se: float
    gen_success_prob: float
    breeding_level_probs: list
    swap_level_probs: list
    model_time_s: float
    empirical_time_s: float | None
    fidelities: np.ndarray
    phi_corrections: np.ndarray
    displacement_corrections: np.ndarray
    trials: int


def waiting_time_model(level_success_probs, swap_success_probs, t0: float) -> float:
    """Expected delivery time for one end-to-end pair.

    The memory-equipped breeding tree behaves as a pipeline, so each breeding
    level costs a factor 1/P on the supply period t0.  Swap levels combine two
    independently generated links and restart both on failure, costing the
    standard pairing factor 3/2 on top of the 1/P retries.
    """
    t = t0
    for p in level_success_probs:
        if p <= 0:
            return math.inf
        t = t / p
    for p in swap_success_probs:
        if p <= 0:
            return math.inf
        t = 1.5 * t / p
    return t


def empirical_total_time(swap_probs, seg_period: float, rng: np.random.Generator,
                         samples: int = 2000) -> float:
    """Monte Carlo mean delivery time, for validating the 3/2 swap rule.

    Segment supply is modelled as an exponential wait with the pipeline
    period; each swap level waits for both inputs (max of the two waits) and
    restarts both subtrees on failure.
    """
    if any(p <= 0 for p in swap_probs) or seg_period <= 0:
        return math.inf

    def level_time(level: int) -> float:
        if level == 0:
            return seg_period * rng.exponential(1.0)
        t = max(level_time(level - 1), level_time(level - 1))
        while rng.random() > swap_probs[level - 1]:
            t += max(level_time(level - 1), level_time(level - 1))
        return t

    total = 0.0
    for _ in range(samples):
        total += level_time(len(swap_probs))
    return total / samples


# ---------------------------------------------------------------------------
# state pipeline
# ---------------------------------------------------------------------------

def _branches_uv(outcome: entgen.HeraldedOutcome, cv: int):
    """Heralded branches rotated to the (symmetric, antisymmetric) basis."""
    states, weights = [], []
    for w, st in outcome.state.branches:
        t = st.cutoffs[0]
        padded = fock.pad(st, (2 * t, 2 * t))
        uv = fock.apply_beamsplitter(padded, 0, 1)
        uv = PureState(uv.amps[:, :cv + 1])
        weights.append(w)
        states.append(uv)
    return states, np.array(weights) / sum(weights)


def _merge_uv(a: PureState, b: PureState, delta: float, cu: int, cv: int,
              rng, forced_zero: bool):
    """One dual-rail breeding merge in the (u, v) basis.

    Measures the antisymmetric combinations of both rails; acceptance applies
    to the u-sector outcome scaled back to the summed physical outcomes.
    Returns (state, window probability).
    """
    a = fock.pad(a, (cu, a.cutoffs[1]))
    b = fock.pad(b, (cu, b.cutoffs[1]))
    joint = fock.tensor(a, b)                      # (u1, v1, u2, v2)
    joint = fock.apply_beamsplitter(joint, 0, 2)
    joint = fock.apply_beamsplitter(joint, 1, 3)
    if forced_zero:
        cond, dens = fock.homodyne_project(joint, 2, "x", 0.0)
        if dens <= 0:
            raise ValueError("zero-norm conditional at forced zero outcome")
        cond = cond.normalized()
        p_win = 1.0
    else:
        half = delta / _SQRT2
        _, cond, p_win = fock.homodyne_sample_in_window(joint, 2, "x", rng, -half, half)
    if forced_zero:
        cond2, dens = fock.homodyne_project(cond, 2, "x", 0.0)
        if dens <= 0:
            raise ValueError("zero-norm conditional at forced zero outcome")
        cond2 = cond2.normalized()
    else:
        _, cond2 = fock.homodyne_sample(cond, 2, "x", rng)
    out = PureState(cond2.amps[:, :cv + 1])
    n2 = out.norm_sq()
    if n2 < 1.0 - 1e-6:
        out = out.normalized()
    return out, p_win


def _segment_trial(branch_states, branch_weights, m, delta, cu, cv, rng, forced_zero):
    """Breed one segment; returns ((u,v) state, per-level window probs)."""
    probs = [[] for _ in range(m)]

    def gen(level: int) -> PureState:
        if level == 0:
            idx = int(rng.choice(len(branch_weights), p=branch_weights))
            return branch_states[idx]
        a = gen(level - 1)
        b = gen(level - 1)
        st, p_win = _merge_uv(a, b, delta, cu, cv, rng, forced_zero)
        probs[level - 1].append(p_win)
        return st

    seg = gen(m)
    return seg, [float(np.mean(p)) if p else 1.0 for p in probs]


def _uv_to_physical(seg: PureState) -> PureState:
    """Rotate a trimmed (u, v) segment state to its physical node modes."""
    seg = fock.trim(seg, leak_tol=1e-12, min_cutoff=4)
    cu, cv = seg.cutoffs
    c = cu + cv
    padded = fock.pad(seg, (c, c))
    return fock.apply_beamsplitter(padded, 0, 1)


def _swap_trial(left: PureState, right: PureState, delta: float, rng, forced_zero: bool):
    """Swap two physical links; returns (state on the end modes, p outcome,
    x window probability)."""
    cl = max(left.cutoffs)
    cr = max(right.cutoffs)
    left = fock.pad(left, (left.cutoffs[0], max(cl, cr)))
    right = fock.pad(right, (max(cl, cr), right.cutoffs[1]))
    joint = fock.tensor(left, right)               # (a1, b1, a2, b2)
    joint = fock.apply_beamsplitter(joint, 1, 2)
    if forced_zero:
        cond, dens = fock.homodyne_project(joint, 1, "p", 0.0)
        if dens <= 0:
            raise ValueError("zero-norm conditional at forced zero outcome")
        cond = cond.normalized()
        p0 = 0.0
    else:
        p0, cond = fock.homodyne_sample(joint, 1, "p", rng)
    if forced_zero:
        out, dens = fock.homodyne_project(cond, 1, "x", 0.0)
        if dens <= 0:
            raise ValueError("zero-norm conditional at forced zero outcome")
        out = out.normalized()
        p_win = 1.0
    else:
        _, out, p_win = fock.homodyne_sample_in_window(cond, 1, "x", rng, -delta, delta)
    return fock.trim(out, leak_tol=1e-12, min_cutoff=8), p0, p_win


# ---------------------------------------------------------------------------
# fidelity correction
# ---------------------------------------------------------------------------

_TARGET_CACHE: dict[tuple, tuple] = {}


def _target_pieces(m: int, n: int, cutoff: int):
    """Squeezed +-displaced components whose phi-superposition is the target."""
    key = (m, n, cutoff)
    got = _TARGET_CACHE.get(key)
    if got is not None:
        return got
    kn = k_n(n)
    beta = mu_m(m) / math.sqrt(kn)

    def piece(sign: float) -> PureState:
        st = fock.tensor(fock.coherent(sign * beta, cutoff), fock.coherent(sign * beta, cutoff))
        st = fock.apply_beamsplitter(st, 0, 1)
        st = fock.apply_squeeze(st, 0, 4.0 / kn)
        st = fock.apply_squeeze(st, 1, kn / 2.0)
        return fock.apply_beamsplitter(st, 0, 1)

    plus = piece(1.0)
    minus = piece(-1.0)
    cross = fock.inner(minus, plus)
    _TARGET_CACHE[key] = (plus, minus, cross)
    return plus, minus, cross


def _best_phi_fidelity(delivered: PureState, plus, minus, cross):
    a = fock.inner(plus, delivered)     # <plus|d>
    b = fock.inner(minus, delivered)
    phis = np.linspace(0.0, math.pi, 181)
    num = np.abs(np.exp(-1j * phis) * a + np.exp(1j * phis) * b) ** 2
    den = 2.0 + 2.0 * (np.exp(-2j * phis) * cross).real
    vals = num / den
    i = int(np.argmax(vals))
    return float(vals[i]), float(phis[i])


def corrected_fidelity(delivered: PureState, m: int, n: int,
                       optimize_displacement: bool = True):
    """Fidelity against the swap target after phase and P-displacement fixes.

    The target's cat phase is unresolved (it depends on the P-outcomes), so
    it is optimized; two local momentum displacements absorb the residual
    X-outcome kicks.  Returns (fidelity, phi, (lam_a, lam_b)).
    """
    beta = mu_m(m) / math.sqrt(k_n(n))
    cutoff = max(max(delivered.cutoffs), fock.required_cutoff(_SQRT2 * beta))
    d = fock.pad(delivered, (cutoff, cutoff))
    plus, minus, cross = _target_pieces(m, n, cutoff)
    base, phi0 = _best_phi_fidelity(d, plus, minus, cross)
    if not optimize_displacement:
        return base, phi0, (0.0, 0.0)

    def neg(lams):
        moved = fock.displace_p(fock.displace_p(d, 0, lams[0]), 1, lams[1])
        return -_best_phi_fidelity(moved, plus, minus, cross)[0]

    res = minimize(neg, x0=[0.0, 0.0], method="Nelder-Mead",
                   options={"maxiter": 60, "xatol": 1e-4, "fatol": 1e-7})
    if -res.fun > base:
        moved = fock.displace_p(fock.displace_p(d, 0, res.x[0]), 1, res.x[1])
        fid, phi = _best_phi_fidelity(moved, plus, minus, cross)
        return fid, phi, (float(res.x[0]), float(res.x[1]))
    return base, phi0, (0.0, 0.0)


# ---------------------------------------------------------------------------
# full simulation
# ---------------------------------------------------------------------------

def _protocol_trial(params: ProtocolParams, branch_states, branch_weights,
                    cu, cv, rng, forced_zero):
    br_probs = np.zeros(params.m)
    sw_probs = [[] for _ in range(params.n)]

    def link(level: int) -> PureState:
        if level == 0:
            seg, probs = _segment_trial(branch_states, branch_weights, params.m,
                                        params.delta_gen, cu, cv, rng, forced_zero)
            br_probs[:] += probs
            return _uv_to_physical(seg)
        a = link(level - 1)
        b = link(level - 1)
        st, _, p_win = _swap_trial(a, b, params.delta_swap, rng, forced_zero)
        sw_probs[level - 1].append(p_win)
        return st

    final = link(params.n)
    br_probs /= params.segments
    fid, phi, lams = corrected_fidelity(final, params.m, params.n,
                                        optimize_displacement=not forced_zero)
    return fid, phi, lams, br_probs, [float(np.mean(p)) if p else 1.0 for p in sw_probs]


def _sim_worker(args):
    params, branch_states, branch_weights, cu, cv, master_seed, lo, hi, forced_zero = args
    k = hi - lo
    fids = np.empty(k)
    phis = np.empty(k)
    lams = np.empty((k, 2))
    brs = np.empty((k, params.m))
    sws = np.empty((k, params.n))
    for idx in range(lo, hi):
        rng = np.random.default_rng(np.random.SeedSequence([master_seed, idx]))
        fid, phi, lam, br, sw = _protocol_trial(params, branch_states, branch_weights,
                                                cu, cv, rng, forced_zero)
        j = idx - lo
        fids[j] = fid
        phis[j] = phi
        lams[j] = lam
        brs[j] = br
        sws[j] = sw
    return lo, fids, phis, lams, brs, sws


def _chunk_ranges(n: int, workers: int):
    workers = max(1, min(workers, n))
    size = (n + workers - 1) // workers
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def segment_cutoffs(params: ProtocolParams) -> tuple[int, int]:
    cu = max(breeding_cutoff(params.m), fock.required_cutoff(mu_m(params.m))) + 4
    cv = min(2 * params.source_truncation + 2, 8)
    return cu, cv


def simulate(params: ProtocolParams, master_seed: int = 0, workers: int = 1,
             forced_zero: bool = False, empirical_time: bool = False) -> RepeaterResult:
    """Monte Carlo of the full protocol; deterministic for a fixed seed.

    Rate comes from the waiting-time model applied to the empirically
    estimated stage acceptance probabilities; ``empirical_time`` additionally
    simulates the retry timeline to validate the model.
    """
    outcome = entgen.heralded_state(params.source, params.source_truncation)
    cu, cv = segment_cutoffs(params)
    branch_states, branch_weights = _branches_uv(outcome, cv)
    trials = params.trials
    fids = np.empty(trials)
    phis = np.empty(trials)
    lams = np.empty((trials, 2))
    brs = np.empty((trials, params.m))
    sws = np.empty((trials, params.n))
    jobs = [(params, branch_states, branch_weights, cu, cv, master_seed, lo, hi, forced_zero)
            for lo, hi in _chunk_ranges(trials, workers)]
    if workers > 1 and len(jobs) > 1:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            results = pool.map(_sim_worker, jobs)
    else:
        results = [_sim_worker(j) for j in jobs]
    for lo, f, ph, lm, br, sw in results:
        k = len(f)
        fids[lo:lo + k] = f
        phis[lo:lo + k] = ph
        lams[lo:lo + k] = lm
        brs[lo:lo + k] = br
        sws[lo:lo + k] = sw

    br_means = [float(np.mean(brs[:, i])) for i in range(params.m)]
    sw_means = [float(np.mean(sws[:, i])) for i in range(params.n)]
    t_attempt = params.source.attempt_time_s
    p_succ = outcome.p_succ
    if forced_zero:
        t_model = math.inf
        rate = 0.0
        rate_se = 0.0
    else:
        t_model = waiting_time_model(br_means, sw_means, t_attempt / p_succ)
        rate = 1.0 / t_model if math.isfinite(t_model) else 0.0
        rate_se = _rate_se_jackknife(brs, sws, t_attempt / p_succ)
    emp = None
    if empirical_time and not forced_zero:
        seg_period = waiting_time_model(br_means, [], t_attempt / p_succ)
        rng = np.random.default_rng(np.random.SeedSequence([master_seed, 987654321]))
        emp = empirical_total_time(sw_means, seg_period, rng)
    return RepeaterResult(
        rate_per_s=rate,
        rate_se=rate_se,
        mean_fidelity=float(np.mean(fids)),
        fidelity_se=float(np.std(fids, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        gen_success_prob=p_succ,
        breeding_level_probs=br_means,
        swap_level_probs=sw_means,
        model_time_s=t_model,
        empirical_time_s=emp,
        fidelities=fids,
        phi_corrections=phis,
        displacement_corrections=lams,
        trials=trials,
    )


# ---------------------------------------------------------------------------
# rate optimization at fixed final fidelity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellResult:
    n: int
    m: int
    feasible: bool
    ideal_fidelity: float
    params: ProtocolParams | None
    result: RepeaterResult | None
    evaluations: int


@dataclass(frozen=True)
class OptimizeOutcome:
    feasible: bool
    best_params: ProtocolParams | None
    best_result: RepeaterResult | None
    cells: list


_P_GRID = (0.005, 0.02, 0.06)
_DGEN_GRID = (0.3, 0.6)
_DSWAP_GRID = (0.5, 1.0)
_REFINE_FACTORS = (0.6, 1.0, 1.6)
_BOUNDS = {"p": (1e-4, 0.1), "delta_gen": (0.02, 2.0), "delta_swap": (0.05, 3.0)}


def _cell_seed(master_seed: int, n: int, m: int, salt: int) -> int:
    return int(np.random.SeedSequence([master_seed, n, m, salt]).generate_state(1)[0])


def _is_feasible(result: RepeaterResult, f_target: float) -> bool:
    return result.mean_fidelity >= f_target - 2.0 * result.fidelity_se


def _optimize_cell(L_km: float, n: int, m: int, f_target: float, budget: int,
                   trials_search: int, trials_final: int, master_seed: int,
                   workers: int, eta_d: float, Latt_km: float, c_kms: float) -> CellResult:
    def make(p, dgen, dswap, trials):
        return ProtocolParams(L_km=L_km, n=n, m=m, p=p, delta_gen=dgen,
                              delta_swap=dswap, eta_d=eta_d, Latt_km=Latt_km,
                              c_kms=c_kms, trials=trials)

    evals = 0
    # ideal-limit probe: zero windows and vanishing pair production
    probe = simulate(make(1e-6, 0.1, 0.1, 1), master_seed=_cell_seed(master_seed, n, m, 9),
                     forced_zero=True)
    evals += 1
    if probe.mean_fidelity < f_target:
        return CellResult(n, m, False, probe.mean_fidelity, None, None, evals)

    search_seed = _cell_seed(master_seed, n, m, 0)
    log: dict[tuple, RepeaterResult] = {}

    def evaluate(p, dgen, dswap):
        nonlocal evals
        key = (round(p, 10), round(dgen, 10), round(dswap, 10))
        if key in log:
            return log[key]
        res = simulate(make(p, dgen, dswap, trials_search), master_seed=search_seed,
                       workers=workers)
        log[key] = res
        evals += 1
        return res

    def rank_key(item):
        key, res = item
        feas = _is_feasible(res, f_target)
        return (1 if feas else 0, res.rate_per_s if feas else res.mean_fidelity)

    dswap_grid = _DSWAP_GRID if n > 0 else (_DSWAP_GRID[0],)
    for p in _P_GRID:
        for dgen in _DGEN_GRID:
            for dswap in dswap_grid:
                if evals >= budget:
                    break
                evaluate(p, dgen, dswap)

    # greedy coordinate refinement around the incumbent
    for _ in range(2):
        if evals >= budget or not log:
            break
        best_key = max(log.items(), key=rank_key)[0]
        for coord, name in ((0, "p"), (1, "delta_gen"), (2, "delta_swap")):
            if n == 0 and name == "delta_swap":
                continue
            for factor in _REFINE_FACTORS:
                if factor == 1.0 or evals >= budget:
                    continue
                cand = list(best_key)
                lo, hi = _BOUNDS[name]
                cand[coord] = min(max(cand[coord] * factor, lo), hi)
                evaluate(*cand)

    candidates = sorted((item for item in log.items()
                         if _is_feasible(item[1], f_target)),
                        key=lambda item: item[1].rate_per_s, reverse=True)
    for best_key, _ in candidates[:3]:
        final_params = make(*best_key, trials_final)
        final = simulate(final_params, master_seed=_cell_seed(master_seed, n, m, 1),
                         workers=workers)
        evals += 1
        if _is_feasible(final, f_target):
            return CellResult(n, m, True, probe.mean_fidelity, final_params,
                              final, evals)
    return CellResult(n, m, False, probe.mean_fidelity, None, None, evals)


def optimize(L_km: float, f_target: float = 0.90, budget: int = 200,
             trials_search: int = 24, trials_final: int = 96,
             n_grid=(0, 1, 2, 3), m_grid=(1, 2, 3), master_seed: int = 0,
             workers: int = 1, eta_d: float = 0.5, Latt_km: float = 20.0,
             c_kms: float = 2.0e5) -> OptimizeOutcome:
    """Search (n, m, p, delta_gen, delta_swap) for the best rate at fixed fidelity.

    Deterministic coarse grid plus greedy coordinate refinement per (n, m)
    cell, with common random numbers within a cell; cells whose forced-zero
    ideal fidelity misses the target are pruned immediately.  ``budget`` caps
    the simulate() calls per cell.  Feasibility means mean fidelity >=
    f_target - 2 SE at the final evaluation.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1 evaluation")
    cells = []
    for n in n_grid:
        for m in m_grid:
            cells.append(_optimize_cell(L_km, n, m, f_target, budget,
                                        trials_search, trials_final, master_seed,
                                        workers, eta_d, Latt_km, c_kms))
    feasible = [c for c in cells if c.feasible]
    if not feasible:
        return OptimizeOutcome(False, None, None, cells)
    best = max(feasible, key=lambda c: c.result.rate_per_s)
    return OptimizeOutcome(True, best.params, best.result, cells)


def _rate_se_jackknife(brs: np.ndarray, sws: np.ndarray, t0: float,
                       groups: int = 10) -> float:
    trials = brs.shape[0]
    groups = min(groups, trials)
    if groups < 2:
        return 0.0
    idx = np.array_split(np.arange(trials), groups)
    rates = []
    for g in range(groups):
        keep = np.concatenate([idx[j] for j in range(groups) if j != g])
        br = [float(np.mean(brs[keep, i])) for i in range(brs.shape[1])]
        sw = [float(np.mean(sws[keep, i])) for i in range(sws.shape[1])]
        t = waiting_time_model(br, sw, t0)
        rates.append(1.0 / t if math.isfinite(t) else 0.0)
    rates = np.array(rates)
    return float(math.sqrt((groups - 1) / groups * np.sum((rates - rates.mean()) ** 2)))
