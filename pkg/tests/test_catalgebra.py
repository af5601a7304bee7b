import math

import numpy as np
import pytest

from catrepeater import catalgebra as ca
from catrepeater import fock

import oracles


def random_sum(rng, nmodes=2, max_terms=5, radius=2.0):
    nterms = int(rng.integers(1, max_terms + 1))
    coeffs = rng.normal(size=nterms) + 1j * rng.normal(size=nterms)
    r = radius * np.sqrt(rng.random(size=(nterms, nmodes)))
    ang = rng.uniform(0.0, 2.0 * math.pi, size=(nterms, nmodes))
    return ca.CoherentSum(coeffs, r * np.exp(1j * ang))


class TestOverlap:
    def test_single_coherent_normalized(self):
        st = ca.from_terms([(1.0, [1.3 - 0.2j])])
        assert abs(st.norm_sq() - 1.0) < 1e-14

    def test_single_mode_cat_norm(self):
        st = ca.cat_sum_single(2.0)
        expected = 2.0 * (1.0 + math.exp(-8.0))
        assert abs(st.norm_sq() - expected) < 1e-12
        assert abs(st.norm_sq() - 2.000670925255805) < 1e-12

    def test_two_mode_cat_norm(self):
        for theta in (0.0, 0.4, 1.2):
            st = ca.cat_sum_two(2.0, theta)
            expected = 2.0 * (1.0 + math.cos(2 * theta) * math.exp(-16.0))
            assert abs(st.norm_sq() - expected) < 1e-12
            assert abs(st.norm_sq() - 2.0) < 1e-4

    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            ca.overlap(ca.cat_sum_single(1.0), ca.cat_sum_two(1.0))

    @pytest.mark.parametrize("seed", range(6))
    def test_gram_norm_real_nonnegative(self, seed):
        st = random_sum(np.random.default_rng(seed))
        val = ca.overlap(st, st)
        assert val.real >= -1e-12
        assert abs(val.imag) < 1e-12 * max(1.0, abs(val.real))


class TestBeamSplitterMap:
    def test_opposite_amplitudes(self):
        st = ca.from_terms([(1.0, [2.0, -2.0])])
        out = ca.bs_map(st, 0, 1)
        assert abs(out.amps[0, 0]) < 1e-15
        assert abs(out.amps[0, 1] - 2.0 * math.sqrt(2.0)) < 1e-15

    def test_involution(self):
        st = random_sum(np.random.default_rng(5))
        back = ca.bs_map(ca.bs_map(st, 0, 1), 0, 1)
        assert np.max(np.abs(back.amps - st.amps)) < 1e-14
        assert abs(ca.overlap(back, st) - ca.overlap(st, st)) < 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_overlap_preserved(self, seed):
        rng = np.random.default_rng(200 + seed)
        a, b = random_sum(rng), random_sum(rng)
        before = ca.overlap(a, b)
        after = ca.overlap(ca.bs_map(a, 0, 1), ca.bs_map(b, 0, 1))
        assert abs(before - after) < 1e-12 * max(1.0, abs(before))

    def test_four_term_structure(self):
        # two cat pairs mixed on the shared middle modes: amplitudes split into
        # (+-sqrt2 a, 0) and (0, +-sqrt2 a) patterns
        st = ca.tensor(ca.cat_sum_two(2.0), ca.cat_sum_two(2.0))
        out = ca.bs_map(st, 1, 2)
        mids = np.round(out.amps[:, 1:3].real / math.sqrt(2.0), 9)
        patterns = {tuple(row) for row in mids}
        assert patterns == {(2.0, 0.0), (-2.0, 0.0), (0.0, 2.0), (0.0, -2.0)}
        assert out.nterms == 4


class TestProjection:
    def test_vacuum_kernel(self):
        st = ca.from_terms([(1.0, [0.0])])
        proj, dens = ca.homodyne_project_exact(st, 0, "x", 0.0)
        assert abs(proj.coeffs[0] - math.pi ** -0.25) < 1e-15
        assert abs(dens - math.pi ** -0.5) < 1e-15

    def test_p_measurement_phase(self):
        alpha, p0 = 2.0, 0.3
        st = ca.bs_map(ca.tensor(ca.cat_sum_two(alpha), ca.cat_sum_two(alpha)), 1, 2)
        proj, _ = ca.homodyne_project_exact(st, 1, "p", p0)
        zero_x = np.where(np.abs(proj.amps[:, 1]) < 1e-12)[0]
        cp = next(proj.coeffs[k] for k in zero_x if proj.amps[k, 0].real > 0)
        cm = next(proj.coeffs[k] for k in zero_x if proj.amps[k, 0].real < 0)
        theta = np.angle(cp / cm) / 2.0
        assert abs(theta - (-2.0 * alpha * p0)) < 1e-10

    def test_density_integral(self):
        st = ca.cat_sum_single(1.5).normalized()
        xs = np.arange(-9.0, 9.0 + 1e-3, 2e-3)
        dens = ca.quadrature_density(st, 0, "x", xs)
        assert abs(np.trapezoid(dens, xs) - 1.0) < 1e-8

    def test_band_mass_matches_density(self):
        st = ca.bs_map(ca.tensor(ca.cat_sum_two(2.0), ca.cat_sum_two(2.0)), 1, 2)
        lo, hi = -1.0, 2.0
        mass = ca.x_band_mass(st, 2, [(lo, hi)])[0]
        xs = np.linspace(lo, hi, 30001)
        dens = ca.quadrature_density(st, 2, "x", xs)
        assert abs(mass - np.trapezoid(dens, xs)) < 1e-8


class TestCrossEngine:
    def test_vacuum_term(self):
        st = ca.from_terms([(1.0, [0.0])])
        rendered = ca.to_fock(st, 12)
        assert abs(rendered.amps[0] - 1.0) < 1e-14

    def test_cat_single(self):
        exact = ca.cat_sum_single(2.0).normalized()
        assert fock.fidelity(ca.to_fock(exact, 40), fock.cat_single(2.0, 40)) > 1.0 - 1e-10

    def test_cat_two_matches_eq_form(self):
        exact = ca.cat_sum_two(2.0, 0.0).normalized()
        assert fock.fidelity(ca.to_fock(exact, 40), fock.cat_two(2.0, 0.0, 40)) > 1.0 - 1e-10

    def test_insufficient_cutoff(self):
        with pytest.raises(fock.InsufficientCutoffError):
            ca.to_fock(ca.cat_sum_single(2.5), 20)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_norms_and_overlaps(self, seed):
        rng = np.random.default_rng(300 + seed)
        a, b = random_sum(rng), random_sum(rng)
        fa, fb = ca.to_fock(a, 40), ca.to_fock(b, 40)
        assert abs(a.norm_sq() - fa.norm_sq()) < 1e-8
        assert abs(ca.overlap(a, b) - fock.inner(fa, fb)) < 1e-8


class TestHousekeeping:
    def test_merge_terms(self):
        st = ca.from_terms([(1.0, [1.0, 0.5]), (0.5, [1.0, 0.5]), (2.0, [0.0, 0.0])])
        merged = ca.merge_terms(st)
        assert merged.nterms == 2
        assert abs(ca.overlap(merged, merged) - ca.overlap(st, st)) < 1e-12

    def test_prune_tracks_bound(self):
        st = ca.from_terms([(1.0, [1.0]), (1e-18, [0.5])])
        pruned = ca.prune(st)
        assert pruned.nterms == 1
        assert pruned.pruned_bound > 0.0

    def test_sampling_matches_density(self):
        st = ca.cat_sum_single(1.5).normalized()
        rng = np.random.default_rng(11)
        xs = np.array([ca.sample_quadrature(st, 0, "x", rng) for _ in range(4000)])
        # cat peaks at +-sqrt2*1.5; halves should balance
        assert abs(np.mean(xs > 0) - 0.5) < 0.05
        grid = np.linspace(-8, 8, 1601)
        dens = ca.quadrature_density(st, 0, "x", grid)
        mean_expected = np.trapezoid(grid * dens, grid)
        assert abs(np.mean(xs) - mean_expected) < 0.1
