"""Long-time diagnostics: distance to equilibrium, decay fits, mollification.

The central quantity is the weighted variation distance between a snapshot
and its equilibrium projection ``m0 N dx``, where m0 is the conserved
dual-weighted mass of the initial datum.  A log-linear fit of that distance
estimates the empirical decay rate; the mollification harness checks that
smoothing the initial datum moves the entropy functional, the area
functional and the flat distance coherently to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RenewalError
from .measures import (
    HybridMeasure,
    flat_distance,
    integrate,
    linear_combination,
    mollify,
    weighted_variation,
)
from .entropy import EntropyIntegrand, gre_functional
from .spectral import BirthLaw, SpectralData, stationary_measure
from .transport import Trajectory, evolve

__all__ = [
    "DecayFit",
    "distance_to_equilibrium",
    "fit_decay_rate",
    "MollificationReport",
    "reshetnyak_harness",
    "BirthIntegralReport",
    "mk_sequence_check",
]

_FLOOR = 1e-13  # distances below this are floating noise, not signal


@dataclass(frozen=True)
class DecayFit:
    """Log-linear fit D(t) ~ exp(-sigma (t - y0)) of a distance series."""

    eta_name: str
    samples: tuple
    sigma_hat: float
    y0_hat: float
    r_squared: float
    m0: float


def distance_to_equilibrium(traj: Trajectory, t: float, eta=None) -> float:
    """Weighted variation distance of the snapshot at t from m0 N dx.

    ``eta`` defaults to the dual weight phi.  The difference measure is
    built on the snapshot grid and split at x = t and at sign changes.
    """
    spectral = traj.spectral
    if eta is None:
        eta = spectral.phi
    m0 = integrate(traj.initial, spectral.phi)
    snap = evolve(traj, t)
    eq = stationary_measure(spectral, snap.x_max, snap.h, mass=m0)
    diff = linear_combination(1.0, snap, -1.0, eq)
    return weighted_variation(diff, eta, breakpoints=(t,))


def fit_decay_rate(samples, eta_name: str = "", m0: float = math.nan) -> DecayFit:
    """Least squares through (t, log D): slope gives the rate estimate.

    Samples at or below the floating floor are discarded; at least five
    usable points are required.
    """
    usable = [(float(t), float(d)) for t, d in samples if d > _FLOOR]
    if len(usable) < 5:
        raise RenewalError("need at least 5 usable samples to fit a decay rate")
    ts = np.array([t for t, _ in usable])
    if np.any(np.diff(ts) <= 0.0):
        raise RenewalError("decay samples must have strictly increasing times")
    logd = np.log(np.array([d for _, d in usable]))
    slope, intercept = np.polyfit(ts, logd, 1)
    sigma = -float(slope)
    y0 = float(intercept) / sigma if abs(sigma) > 1e-300 else math.nan
    fitted = slope * ts + intercept
    ss_res = float(np.sum((logd - fitted) ** 2))
    ss_tot = float(np.sum((logd - logd.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else (1.0 if ss_res < 1e-20 else 0.0)
    return DecayFit(eta_name, tuple(usable), sigma, y0, r2, m0)


@dataclass(frozen=True)
class MollificationReport:
    """Per-epsilon table of functional gaps for a mollified datum."""

    eps: tuple
    gre_values: tuple
    gre_gaps: tuple
    angle_values: tuple
    angle_gaps: tuple
    flat_distances: tuple
    gre_reference: float
    angle_reference: float
    functional_tol: float
    gap_decreased: bool
    final_below_tol: bool

    @property
    def passed(self) -> bool:
        return self.gap_decreased and self.final_below_tol


def reshetnyak_harness(n0: HybridMeasure, spectral: SpectralData,
                       H: EntropyIntegrand, eps_list,
                       functional_tol: float = 1e-2) -> MollificationReport:
    """Mollify the datum along a decreasing epsilon ladder and tabulate gaps.

    For each epsilon: the entropy functional of the mollified datum, its gap
    to the unmollified value, the same for the area functional, and the flat
    distance to the original.  Passing means the final entropy gap is no
    larger than the first and below ``functional_tol``.
    """
    eps = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps[:-1], eps[1:])):
        raise RenewalError("epsilon ladder must be strictly decreasing")
    if eps and eps[-1] < n0.h:
        raise RenewalError("epsilon ladder goes below the grid spacing")

    from .measures import angle_bracket  # local import keeps module deps one-way

    gre_ref = gre_functional(n0, spectral, H)
    ab_ref = angle_bracket(n0)
    gre_vals, gre_gaps, ab_vals, ab_gaps, flats = [], [], [], [], []
    for e in eps:
        smoothed = mollify(n0, e)
        gv = gre_functional(smoothed, spectral, H)
        av = angle_bracket(smoothed)
        gre_vals.append(gv)
        gre_gaps.append(abs(gv - gre_ref))
        ab_vals.append(av)
        ab_gaps.append(abs(av - ab_ref))
        flats.append(flat_distance(smoothed, n0))

    decreased = bool(gre_gaps and gre_gaps[-1] <= gre_gaps[0] + 1e-12)
    below = bool(gre_gaps and gre_gaps[-1] <= functional_tol)
    return MollificationReport(
        tuple(eps), tuple(gre_vals), tuple(gre_gaps), tuple(ab_vals),
        tuple(ab_gaps), tuple(flats), gre_ref, ab_ref, functional_tol,
        decreased, below,
    )


@dataclass(frozen=True)
class BirthIntegralReport:
    """Birth-integral series m_k and its convergence to m0."""

    times: tuple
    m_values: tuple
    m0: float
    start_index: int
    envelope_ok: bool
    final_deviation: float
    final_ok: bool

    @property
    def passed(self) -> bool:
        return self.envelope_ok and self.final_ok


def mk_sequence_check(traj: Trajectory, B: BirthLaw, spectral: SpectralData,
                      times, slack: float = 1e-7, floor: float = 1e-6,
                      final_tol: float = 1e-4) -> BirthIntegralReport:
    """Check that m_k = (integral B d snapshot)/N(0) settles at m0.

    The deviation |m_k - m0| generically oscillates through zero while its
    envelope decays (the subdominant renewal roots are complex), so the
    check asserts that no deviation sets a new maximum (beyond ``slack``)
    once the equilibrium distance has dropped below a tenth of its initial
    value, and that the final deviation is at most ``final_tol``.
    Deviations below ``floor`` count as converged quadrature jitter.
    """
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times[:-1], times[1:])):
        raise RenewalError("check times must be strictly increasing")
    m0 = integrate(traj.initial, spectral.phi)
    n_zero = spectral.N(0.0)
    mks = [integrate(evolve(traj, t), B.quad_values) / n_zero for t in times]

    d0 = distance_to_equilibrium(traj, 0.0)
    start = 0
    if d0 > _FLOOR:
        start = len(times) - 1
        for i, t in enumerate(times):
            if distance_to_equilibrium(traj, t) < 0.1 * d0:
                start = i
                break
    devs = [max(abs(mk - m0), floor) for mk in mks]
    envelope_ok = True
    peak = devs[start] if devs else floor
    for dev in devs[start + 1:]:
        if dev > peak + slack:
            envelope_ok = False
        peak = max(peak, dev)
    final_dev = abs(mks[-1] - m0) if mks else 0.0
    return BirthIntegralReport(
        tuple(times), tuple(mks), m0, start, envelope_ok, final_dev,
        final_dev <= final_tol,
    )
