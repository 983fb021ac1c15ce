import math

import numpy as np
import pytest

import renewalsim as rs
from renewalsim import HybridMeasure
from renewalsim.errors import RenewalError


def ones(x):
    return np.ones_like(np.asarray(x, dtype=float))


class TestDistanceToEquilibrium:
    def test_stationary_data_stays_at_zero(self, const_spectral):
        B, sp = const_spectral
        n0 = rs.stationary_measure(sp, 40.0, 0.002, mass=2.0)
        traj = rs.birth_series(n0, B, sp, 0.002, 4.0)
        for t in (0.0, 1.0, 4.0):
            assert rs.distance_to_equilibrium(traj, t) <= 1e-6

    def test_dirac_oracle(self, dirac_benchmark):
        # exact solution gives distance 2 exp(-t) under the unit weight
        traj, _ = dirac_benchmark
        for t in (1.0, 3.0, 6.0):
            d = rs.distance_to_equilibrium(traj, t, eta=ones)
            assert abs(d - 2.0 * math.exp(-t)) <= 1e-4 * 2.0 * math.exp(-t)

    def test_time_zero_matches_direct_evaluation(self, dirac_benchmark,
                                                 const_spectral):
        _, sp = const_spectral
        traj, _ = dirac_benchmark
        m0 = rs.integrate(traj.initial, sp.phi)
        eq = rs.stationary_measure(sp, 40.0, 0.005, mass=m0)
        diff = rs.linear_combination(1.0, traj.initial, -1.0, eq)
        direct = rs.weighted_variation(diff, ones)
        assert rs.distance_to_equilibrium(traj, 0.0, eta=ones) == pytest.approx(
            direct, rel=1e-12)

    def test_dual_weighted_distance_sampled_monotone(self, ind_spectral):
        # the difference from equilibrium is itself a signed solution, so the
        # entropy contraction with the absolute-value integrand makes the
        # dual-weighted distance non-increasing
        B, sp = ind_spectral
        n0 = rs.HybridMeasure.point_mass(0.25, 12.0, 0.00025)
        traj = rs.birth_series(n0, B, sp, 0.00025, 5.0)
        ds = [rs.distance_to_equilibrium(traj, t) for t in np.arange(0.0, 5.1, 0.1)]
        worst = max(b - a for a, b in zip(ds[:-1], ds[1:]))
        assert worst <= 1e-8, f"max sampled increase {worst:.3e}"


class TestFitDecayRate:
    def test_exact_exponential(self):
        ts = np.arange(1.0, 9.0)
        fit = rs.fit_decay_rate([(t, 2.0 * math.exp(-t)) for t in ts])
        assert abs(fit.sigma_hat - 1.0) <= 1e-10
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_shifted_exponential(self):
        ts = np.linspace(0.0, 10.0, 21)
        fit = rs.fit_decay_rate([(t, 5.0 * math.exp(-0.25 * (t - 2.0))) for t in ts])
        assert abs(fit.sigma_hat - 0.25) <= 1e-10

    def test_requires_five_usable_samples(self):
        with pytest.raises(RenewalError, match="5 usable"):
            rs.fit_decay_rate([(1.0, 0.5), (2.0, 0.1), (3.0, 1e-16), (4.0, 1e-16)])

    def test_floor_filtering(self):
        ts = np.arange(1.0, 12.0)
        samples = [(t, math.exp(-t)) for t in ts] + [(20.0, 1e-16)]
        fit = rs.fit_decay_rate(samples)
        assert len(fit.samples) == len(ts)
        assert abs(fit.sigma_hat - 1.0) <= 1e-10


class TestMollificationHarness:
    def test_atom_free_all_gaps_vanish(self, const_spectral):
        _, sp = const_spectral
        n0 = HybridMeasure.from_function(lambda x: np.exp(-x), 6.0, 0.005)
        rep = rs.reshetnyak_harness(n0, sp, rs.builtin_integrand("abs"),
                                    (0.4, 0.2, 0.1, 0.05))
        assert rep.passed
        assert max(rep.gre_gaps) <= 1e-12
        assert max(rep.flat_distances) == 0.0

    def test_atom_ladder(self, const_spectral):
        _, sp = const_spectral
        n0 = HybridMeasure.point_mass(1.0, 6.0, 0.005)
        eps = (0.4, 0.2, 0.1, 0.05)
        rep = rs.reshetnyak_harness(n0, sp, rs.builtin_integrand("abs"), eps)
        assert rep.passed
        assert rep.angle_gaps[-1] < rep.angle_gaps[0]
        for e, fd in zip(eps, rep.flat_distances):
            assert fd <= e / 2.0 + 1e-9

    def test_bad_ladder_rejected(self, const_spectral):
        _, sp = const_spectral
        n0 = HybridMeasure.point_mass(1.0, 6.0, 0.005)
        with pytest.raises(RenewalError, match="decreasing"):
            rs.reshetnyak_harness(n0, sp, rs.builtin_integrand("abs"), (0.1, 0.2))


class TestBirthIntegralSequence:
    def test_stationary_profile(self, const_spectral):
        # the initial-mass quadrature bias feeds the births, so hitting 1e-8
        # absolute needs a grid with h^2/12 below it
        B, sp = const_spectral
        n0 = rs.stationary_measure(sp, 20.0, 2e-4)
        traj = rs.birth_series(n0, B, sp, 2e-4, 4.0)
        rep = rs.mk_sequence_check(traj, B, sp, (1.0, 2.0, 3.0, 4.0))
        assert rep.passed
        assert max(abs(m - rep.m0) for m in rep.m_values) <= 1e-8

    def test_dirac_scenario_converges(self, dirac_benchmark, const_spectral):
        B, sp = const_spectral
        traj, _ = dirac_benchmark
        rep = rs.mk_sequence_check(traj, B, sp, tuple(np.arange(0.5, 10.5, 0.5)))
        assert rep.passed
        assert rep.final_deviation <= 1e-4

    def test_zero_data(self, const_spectral):
        B, sp = const_spectral
        n0 = HybridMeasure.zero(40.0, 0.01)
        traj = rs.birth_series(n0, B, sp, 0.01, 2.0)
        rep = rs.mk_sequence_check(traj, B, sp, (1.0, 2.0))
        assert rep.passed
        assert rep.m_values == (0.0, 0.0)
