"""Time evolution of a measure datum by exact characteristics.

The solution is stored as the initial measure plus the boundary birth trace
b(t); nothing is ever regridded during evolution, so atoms stay atoms with
exactly known weights.  Snapshots are materialized on demand: newborn mass
appears as the density ``b(t - x) exp(-lam x)`` on (0, t), the initial
datum is shifted by t and damped by ``exp(-lam t)``, and the seam at x = t
is a grid node carrying both one-sided limits.

The birth trace solves the renewal integral equation

    b(t) = g(t) + integral_0^t B(x) exp(-lam x) b(t - x) dx,

with g the damped birth contribution of the shifted initial datum.  The
convolution uses trapezoid product integration with third-order Gregory end
corrections: the plain trapezoid rule's O(dt^2) defect feeds through the
renewal resolvent and grows linearly in t, which is too coarse for the
long-horizon diagnostics this package exists to produce.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TransportError
from .measures import HybridMeasure, ac_cumulative, integrate
from .spectral import BirthLaw, SpectralData

__all__ = [
    "Trajectory",
    "birth_series",
    "evolve",
    "unrenormalize",
    "tail_phi_mass",
    "conserved_phi_mass",
]

_SNAP = 1e-9


@dataclass(frozen=True)
class Trajectory:
    """Initial datum, spectral data and the computed birth trace."""

    initial: HybridMeasure
    spectral: SpectralData
    birth_law: BirthLaw
    dt: float
    horizon: float
    births: np.ndarray
    tail_mass: float  # dual-weighted mass past x_max, accumulated to the horizon
    birth_jumps: tuple = ()  # (time index, jump size) where the trace jumps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.births.size) * self.dt

    def _grid_ints(self):
        m = int(round(self.initial.h / self.dt))
        M = int(round(self.initial.x_max / self.dt))
        return m, M


def _check_multiple(value: float, unit: float, what: str) -> int:
    k = int(round(value / unit))
    if k < 0 or abs(value - k * unit) > _SNAP * max(1.0, abs(value)):
        raise TransportError(f"{what} must be an integer multiple of {unit}")
    return k


def birth_series(n0: HybridMeasure, B: BirthLaw, spectral: SpectralData,
                 dt: float, T: float) -> Trajectory:
    """Solve for the boundary birth trace on the time grid 0, dt, ..., T.

    Requirements: dt divides the grid spacing and the horizon; a finite
    birth-law support must satisfy ``support_end + T <= x_max`` so that mass
    leaving the window can never feed back into births (constant laws need
    no certificate, their forcing is evaluated analytically on the full
    half-line).
    """
    if dt <= 0.0 or T <= 0.0:
        raise TransportError("time step and horizon must be positive")
    if dt > n0.h * (1.0 + _SNAP):
        raise TransportError("time step exceeds grid spacing")
    K = _check_multiple(T, dt, "horizon")
    _check_multiple(n0.h, dt, "grid spacing")
    _check_multiple(n0.x_max, dt, "domain length")
    if B.support_end is not None and B.support_end + T > n0.x_max * (1.0 + _SNAP):
        raise TransportError(
            "truncation certificate fails: support_end + T exceeds x_max"
        )

    lam = spectral.lambda0
    times = np.arange(K + 1) * dt
    kv = B.quad_values(times) * np.exp(-lam * times)
    if 1.0 - 0.5 * dt * kv[0] <= 0.0:
        raise TransportError("time step too large for the implicit boundary weight")
    g = B.birth_forcing(n0, times) * np.exp(-lam * times)

    # The forcing (hence b) jumps whenever an atom crosses a birth-rate
    # discontinuity; the jump sizes are known exactly.  The stored series
    # carries the mean value at a jump node, and the convolution below is
    # integrated segment-by-segment with the one-sided values so the end
    # corrections never straddle a jump.
    b_jump = {}
    for p, vl, vr in B.jump_points():
        for loc, wt in n0.atoms:
            tj = p - loc
            if tj <= _SNAP or tj > K * dt + _SNAP:
                continue
            j = int(round(tj / dt))
            if 0 < j <= K and abs(tj - j * dt) <= _SNAP * max(1.0, tj):
                delta = wt * (vr - vl) * math.exp(-lam * j * dt)
                b_jump[j] = b_jump.get(j, 0.0) + delta
    b_jump = {j: d for j, d in b_jump.items() if d != 0.0}

    b = np.zeros(K + 1)
    b[0] = g[0]
    nonneg = n0.nonnegative
    scale = max(abs(b[0]), 1.0)

    def settle(val):
        nonlocal scale
        if nonneg and val < 0.0:
            if val < -1e-10 * scale:
                raise TransportError("birth trace went negative beyond tolerance")
            val = 0.0
        scale = max(scale, abs(val))
        return val

    if K >= 1:
        b[1] = settle((g[1] + 0.5 * dt * kv[1] * b[0]) / (1.0 - 0.5 * dt * kv[0]))
    if K >= 2:
        b[2] = settle(
            (g[2] + dt / 3.0 * (4.0 * kv[1] * b[1] + kv[2] * b[0]))
            / (1.0 - dt / 3.0 * kv[0])
        )
    krev = kv[::-1].copy()
    L = K + 1
    denom = 1.0 - dt * (5.0 / 12.0) * kv[0]
    for k in range(3, K + 1):
        inner = sorted(k - j for j in b_jump if 0 < k - j < k)
        if not inner:
            s = float(np.dot(b[1:k], krev[L - k:L - 1])) + kv[k] * b[0]
            s += (kv[1] * b[k - 1] + kv[k - 1] * b[1]) / 12.0 \
                - 7.0 / 12.0 * kv[k] * b[0]
            b[k] = settle((g[k] + dt * s) / denom)
            continue
        w, extra = _segment_weights(k, inner, kv, b_jump)
        s = float(np.dot(w[1:] * kv[1:k + 1], b[k - 1::-1][:k])) + extra
        b[k] = settle((g[k] + dt * s) / (1.0 - dt * w[0] * kv[0]))

    b.setflags(write=False)
    traj = Trajectory(n0, spectral, B, dt, K * dt, b, 0.0,
                      tuple(sorted(b_jump.items())))
    object.__setattr__(traj, "tail_mass", tail_phi_mass(traj, K * dt))
    return traj


def _segment_weights(k: int, inner, kv, b_jump):
    """Quadrature weights for one convolution step, split at b's jumps.

    ``inner`` holds the x-indices of the jumps strictly inside (0, k).
    Returns the per-node weight array over 0..k (sided means at jump nodes
    fold into the weights) plus the scalar correction carrying the
    difference between the one-sided values and the stored means.
    """
    edges = [0] + inner + [k]
    w = np.zeros(k + 1)
    extra = 0.0
    for p, q in zip(edges[:-1], edges[1:]):
        seg = q - p
        if seg >= 3:
            w[p] += 5.0 / 12.0
            w[p + 1] += 13.0 / 12.0
            w[p + 2:q - 1] += 1.0
            w[q - 1] += 13.0 / 12.0
            w[q] += 5.0 / 12.0
            wp, wq = 5.0 / 12.0, 5.0 / 12.0
        elif seg == 2:
            w[p] += 1.0 / 3.0
            w[p + 1] += 4.0 / 3.0
            w[q] += 1.0 / 3.0
            wp, wq = 1.0 / 3.0, 1.0 / 3.0
        else:
            w[p] += 0.5
            w[q] += 0.5
            wp, wq = 0.5, 0.5
        # right edge of the segment sees b from above its jump time (+d/2),
        # left edge from below (-d/2); the mean flows through w itself
        if q < k and (k - q) in b_jump:
            extra += wq * kv[q] * 0.5 * b_jump[k - q]
        if p > 0 and (k - p) in b_jump:
            extra -= wp * kv[p] * 0.5 * b_jump[k - p]
    return w, extra


def _right_limit_at_zero(mu: HybridMeasure) -> float:
    for x, _, hi in mu.jumps:
        if x == 0.0:
            return hi
    return float(mu.density[0])


def evolve(traj: Trajectory, t: float) -> HybridMeasure:
    """Snapshot of the renormalized solution at time t.

    ``t`` is snapped to the nearest time node.  The snapshot grid spacing is
    the coarsest refinement of the time grid that puts nodes exactly at x = t
    and at every node of the initial grid image, so the newborn/shifted seam
    and all transported kinks sit on nodes.
    """
    if t < -_SNAP or t > traj.horizon * (1.0 + _SNAP) + _SNAP:
        raise TransportError("snapshot time outside [0, horizon]")
    dt = traj.dt
    k = int(round(t / dt))
    k = min(max(k, 0), traj.births.size - 1)
    if k == 0:
        return traj.initial

    n0 = traj.initial
    lam = traj.spectral.lambda0
    m, M = traj._grid_ints()
    d = math.gcd(k, math.gcd(M, m))
    g = d * dt
    seam = k // d
    n_new = M // d + 1
    t_k = k * dt
    decay = math.exp(-lam * t_k)

    dens = np.empty(n_new)
    js = np.arange(seam)
    dens[:seam] = traj.births[k - js * d] * np.exp(-lam * g * js)
    for j, delta in traj.birth_jumps:
        if j == k:
            # snapshot taken at the jump instant: every age x > 0 was born
            # strictly before it, so the boundary node takes the left limit
            dens[0] = traj.births[k] - 0.5 * delta
    left = traj.births[0] * decay
    right = _right_limit_at_zero(n0) * decay
    dens[seam] = 0.5 * (left + right)
    if seam + 1 < n_new:
        u = (np.arange(seam + 1, n_new) - seam) * g
        dens[seam + 1:] = decay * n0.density_at(u)

    jumps = []
    if left != right:
        jumps.append((t_k, left, right))
    for j, delta in traj.birth_jumps:
        if not (0 < k - j < k) or (k - j) % d != 0:
            continue
        xj = (k - j) * dt
        damp = math.exp(-lam * xj)
        mean = traj.births[j] * damp
        half = 0.5 * delta * damp
        # x below the kink maps to times above the trace jump and vice versa
        jumps.append((xj, mean + half, mean - half))
    for x, lo, hi in n0.jumps:
        if x == 0.0:
            continue  # folded into the seam's right limit
        if x + t_k <= n0.x_max * (1.0 + _SNAP):
            jumps.append((x + t_k, lo * decay, hi * decay))

    atoms = tuple(
        (loc + t_k, wt * decay)
        for loc, wt in n0.atoms
        if loc + t_k <= n0.x_max * (1.0 + _SNAP)
    )

    if n0.nonnegative:
        floor = -1e-12 * max(1.0, float(np.abs(dens).max()))
        if dens.min() < floor:
            raise TransportError("snapshot density went negative beyond tolerance")
        np.clip(dens, 0.0, None, out=dens)
        jumps = [(x, max(lo, 0.0), max(hi, 0.0)) for x, lo, hi in jumps]

    return HybridMeasure(g, dens, atoms, tuple(jumps), nonnegative=n0.nonnegative)


def unrenormalize(mu: HybridMeasure, t: float, lambda0: float) -> HybridMeasure:
    """Undo the exponential damping: multiply all masses by exp(lambda0 t)."""
    if lambda0 * t > 700.0:
        raise TransportError("unrenormalization factor overflows")
    s = math.exp(lambda0 * t)
    jumps = tuple((x, lo * s, hi * s) for x, lo, hi in mu.jumps)
    atoms = tuple((loc, wt * s) for loc, wt in mu.atoms)
    return HybridMeasure(mu.h, mu.density * s, atoms, jumps, nonnegative=mu.nonnegative)


def tail_phi_mass(traj: Trajectory, t: float) -> float:
    """Dual-weighted mass of the initial datum that has left the window by t.

    For finite-support birth laws the dual weight vanishes beyond the window
    (the truncation certificate guarantees it), so the leak is zero; for
    constant laws the weight is a known constant and the leak is an exact
    right-tail mass of the initial datum.
    """
    if traj.birth_law.support_end is not None:
        return 0.0
    n0 = traj.initial
    v = n0.x_max - t
    ac_total = ac_cumulative(n0, n0.x_max)
    ac_out = ac_total - ac_cumulative(n0, max(v, 0.0))
    atom_out = sum(wt for loc, wt in n0.atoms if loc > v)
    phi_const = traj.spectral.phi(0.0)
    return math.exp(-traj.spectral.lambda0 * t) * phi_const * (ac_out + atom_out)


def conserved_phi_mass(traj: Trajectory, t: float) -> float:
    """Dual-weighted mass at time t, window content plus tracked leak."""
    snap = evolve(traj, t)
    return integrate(snap, traj.spectral.phi) + tail_phi_mass(traj, t)
