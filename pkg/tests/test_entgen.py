import math

import numpy as np
import pytest

from catrepeater import entgen, fock


def make_params(p=1e-3, eta_d=0.5, L0=40.0):
    return entgen.SourceParams(p=p, eta_d=eta_d, L0_km=L0)


class TestSourceParams:
    def test_transmission(self):
        assert abs(make_params(L0=40.0).eta_t - math.exp(-1.0)) < 1e-15

    def test_attempt_time(self):
        sp = entgen.SourceParams(p=1e-3, eta_d=0.5, L0_km=50.0, c_kms=2e5)
        assert abs(sp.attempt_time_s - 2.5e-4) < 1e-18

    def test_validation(self):
        with pytest.raises(ValueError):
            entgen.SourceParams(p=1.2, eta_d=0.5, L0_km=10.0)
        with pytest.raises(ValueError):
            entgen.SourceParams(p=0.1, eta_d=0.0, L0_km=10.0)


class TestHeraldedState:
    def test_weights_sum_to_one(self):
        out = entgen.heralded_state(make_params())
        assert abs(out.state.total_weight - 1.0) < 1e-10

    def test_small_p_bell_fidelity(self):
        out = entgen.heralded_state(make_params(p=1e-4))
        assert fock.fidelity(out.state, entgen.bell_state()) > 0.999

    def test_success_probability_leading_order(self):
        # eta_t * eta_d = 0.3 and p = 1e-3 gives p_succ ~ 2*p*eta = 6e-4
        L0 = -2.0 * 20.0 * math.log(0.6)
        out = entgen.heralded_state(make_params(p=1e-3, eta_d=0.5, L0=L0))
        assert abs(out.p_succ - 6e-4) / 6e-4 < 0.1

    def test_p_zero_rejected(self):
        with pytest.raises(ValueError):
            entgen.heralded_state(make_params(p=0.0))

    def test_truncation_guard(self):
        with pytest.raises(ValueError):
            entgen.heralded_state(make_params(p=0.05), truncation=3)

    def test_monotone_in_p(self):
        vals = [entgen.heralded_state(make_params(p=p)).p_succ
                for p in (1e-4, 1e-3, 1e-2)]
        assert vals == sorted(vals)

    def test_monotone_in_eta_d(self):
        vals = [entgen.heralded_state(make_params(eta_d=e)).p_succ
                for e in (0.2, 0.5, 0.9)]
        assert vals == sorted(vals)

    def test_monotone_decreasing_in_length(self):
        vals = [entgen.heralded_state(make_params(L0=L)).p_succ
                for L in (20.0, 40.0, 80.0)]
        assert vals == sorted(vals, reverse=True)

    def test_ideal_number_resolved_is_bell(self):
        sp = entgen.SourceParams(p=1e-3, eta_d=1.0, L0_km=1e-9)
        out = entgen.heralded_state(sp, number_resolved=True)
        for w, st in out.state.branches:
            if w < 1e-12:
                continue
            sub = np.zeros_like(st.amps)
            sub[0, 1] = st.amps[0, 1]
            sub[1, 0] = st.amps[1, 0]
            restricted = fock.PureState(sub).normalized()
            assert fock.fidelity(restricted, entgen.bell_state()) > 1.0 - 1e-12


class TestMultiExcitationWeight:
    def test_zero_at_p_zero(self):
        assert entgen.multi_excitation_weight(make_params(p=0.0)) == 0.0

    def test_linear_scaling(self):
        wa = entgen.multi_excitation_weight(make_params(p=5e-4))
        wb = entgen.multi_excitation_weight(make_params(p=1e-3))
        assert abs(wb / wa - 2.0) < 0.2

    def test_monotone_in_p(self):
        ps = np.geomspace(1e-4, 1e-1, 7)
        vals = [entgen.multi_excitation_weight(make_params(p=float(p)), truncation=9)
                for p in ps]
        assert all(b > a for a, b in zip(vals, vals[1:]))
