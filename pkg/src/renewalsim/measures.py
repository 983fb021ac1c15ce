"""Finite signed measures on [0, x_max] as grid density plus exact atoms.

The absolutely continuous part is stored as samples of a piecewise-linear
density on a uniform grid; the singular part is an explicit list of point
masses that is never smeared onto the grid.  All operations are pure
functions returning new values, so measures are safe to share across
threads.

A measure may carry *jump records*: grid nodes where the density has two
one-sided limits (transport snapshots have one at the newborn seam).  The
stored node value is the mean of the two limits, which keeps plain
trapezoid sums of ``f * density`` exact for continuous ``f``; operations
that apply a nonlinearity pointwise (absolute value, entropy integrands)
consult the one-sided limits instead.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import MeasureError

__all__ = [
    "HybridMeasure",
    "total_variation",
    "integrate",
    "weighted_variation",
    "angle_bracket",
    "mollify",
    "shift_pushforward",
    "linear_combination",
    "flat_distance",
    "ac_cumulative",
    "write_snapshot",
    "read_snapshot",
]

_SNAP = 1e-9  # relative slack when matching coordinates to grid nodes


def _evaluate(f, x):
    """Evaluate a scalar function on an array, vectorizing if needed."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", DeprecationWarning)
        try:
            out = np.asarray(f(x), dtype=float)
        except (TypeError, ValueError, DeprecationWarning):
            out = np.asarray(np.vectorize(f)(x), dtype=float)
    if out.shape != np.shape(x):
        out = np.asarray(np.vectorize(f)(x), dtype=float)
    return out


@dataclass(frozen=True, eq=False)
class HybridMeasure:
    """A finite signed measure on [0, x_max].

    Parameters
    ----------
    h:
        Grid spacing; ``x_max`` is ``(len(density) - 1) * h`` exactly.
    density:
        Density samples at the nodes ``0, h, 2h, ...`` (the AC part).
    atoms:
        ``(location, weight)`` pairs for the singular part.  Locations are
        merged on construction and exact-zero weights dropped.
    jumps:
        ``(node_x, left_limit, right_limit)`` records; the node value is
        forced to the mean of the limits.
    nonnegative:
        When set, density, atom weights and jump limits must all be >= 0.
    """

    h: float
    density: np.ndarray
    atoms: tuple = ()
    jumps: tuple = ()
    nonnegative: bool = False

    def __post_init__(self):
        h = float(self.h)
        if not (h > 0.0 and math.isfinite(h)):
            raise MeasureError("grid spacing must be a positive finite number")
        dens = np.array(self.density, dtype=float)
        if dens.ndim != 1 or dens.size < 2:
            raise MeasureError("density must be a 1-d array with at least two nodes")
        if not np.all(np.isfinite(dens)):
            raise MeasureError("density values must be finite")
        x_max = (dens.size - 1) * h

        # canonical atoms: sorted, merged by exact location, zeros dropped
        merged = {}
        for loc, wt in self.atoms:
            loc = float(loc)
            wt = float(wt)
            if not (math.isfinite(loc) and math.isfinite(wt)):
                raise MeasureError("atom entries must be finite")
            if loc < -_SNAP * max(1.0, x_max) or loc > x_max * (1 + _SNAP) + _SNAP:
                raise MeasureError(f"atom at {loc} lies outside [0, {x_max}]")
            loc = min(max(loc, 0.0), x_max)
            merged[loc] = merged.get(loc, 0.0) + wt
        atoms = tuple(sorted((l, w) for l, w in merged.items() if w != 0.0))

        # canonical jumps: snapped to nodes, node value = mean of limits
        jumps = []
        seen = set()
        for x, lo, hi in self.jumps:
            lo = float(lo)
            hi = float(hi)
            if lo == hi:
                continue
            i = int(round(float(x) / h))
            if not (0 <= i < dens.size) or abs(float(x) - i * h) > _SNAP * max(1.0, x_max):
                raise MeasureError(f"jump at {x} does not sit on a grid node")
            if i in seen:
                raise MeasureError("duplicate jump node")
            seen.add(i)
            dens[i] = 0.5 * (lo + hi)
            jumps.append((i * h, lo, hi))
        jumps = tuple(sorted(jumps))

        if self.nonnegative:
            if dens.min() < 0.0:
                raise MeasureError("nonnegative measure has a negative density node")
            if any(w < 0.0 for _, w in atoms):
                raise MeasureError("nonnegative measure has a negative atom")
            if any(lo < 0.0 or hi < 0.0 for _, lo, hi in jumps):
                raise MeasureError("nonnegative measure has a negative jump limit")

        dens.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "jumps", jumps)

    # -- basic geometry -------------------------------------------------

    @property
    def node_count(self) -> int:
        return self.density.size

    @property
    def x_max(self) -> float:
        return (self.density.size - 1) * self.h

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.density.size) * self.h

    def density_at(self, x):
        """Piecewise-linear density value (zero outside the domain)."""
        return np.interp(x, self.nodes, self.density, left=0.0, right=0.0)

    # -- constructors ----------------------------------------------------

    @staticmethod
    def _node_count(x_max: float, h: float) -> int:
        n = int(round(x_max / h)) + 1
        if n < 2 or abs((n - 1) * h - x_max) > _SNAP * max(1.0, x_max):
            raise MeasureError("x_max must be an integer multiple of the grid spacing")
        return n

    @classmethod
    def zero(cls, x_max: float, h: float) -> "HybridMeasure":
        return cls(h, np.zeros(cls._node_count(x_max, h)), nonnegative=True)

    @classmethod
    def from_function(cls, fn, x_max: float, h: float, atoms=(), nonnegative=False):
        n = cls._node_count(x_max, h)
        vals = _evaluate(fn, np.arange(n) * h)
        return cls(h, vals, tuple(atoms), nonnegative=nonnegative)

    @classmethod
    def point_mass(cls, loc: float, x_max: float, h: float, weight: float = 1.0):
        n = cls._node_count(x_max, h)
        return cls(h, np.zeros(n), ((loc, weight),), nonnegative=weight >= 0.0)


def _panel_sides(mu: HybridMeasure):
    """One-sided node values (left, right) for every grid panel."""
    d = mu.density
    left = d[:-1].copy()
    right = d[1:].copy()
    for x, lo, hi in mu.jumps:
        i = int(round(x / mu.h))
        if i < left.size:
            left[i] = hi
        if i >= 1:
            right[i - 1] = lo
    return left, right


def integrate(mu: HybridMeasure, f) -> float:
    """Integral of ``f`` against the measure.

    Trapezoid rule against the AC density plus the exact atom sum.  At jump
    nodes the mean value makes the trapezoid sum equal to the one-sided
    panel-split sum for any continuous ``f``.
    """
    fx = _evaluate(f, mu.nodes)
    total = float(np.trapezoid(fx * mu.density, dx=mu.h))
    if mu.atoms:
        locs = np.array([a[0] for a in mu.atoms])
        wts = np.array([a[1] for a in mu.atoms])
        total += float(np.dot(_evaluate(f, locs), wts))
    return total


def weighted_variation(mu: HybridMeasure, w=None, breakpoints=()) -> float:
    """Integral of a nonnegative weight against ``|mu|``.

    The absolute value of the piecewise-linear density is integrated
    exactly: every panel is split at its sign change, at jump nodes the
    one-sided limits are used, and callers may force additional split
    points (``breakpoints``) where the weight or density is known to kink.
    """
    nodes = mu.nodes
    h = mu.h
    n = nodes.size
    L, R = _panel_sides(mu)
    if w is None:
        wn = np.ones(n)
    else:
        wn = _evaluate(w, nodes)
        if wn.min() < -1e-12:
            raise MeasureError("variation weight must be nonnegative")

    inner = {}
    for bp in breakpoints:
        bp = float(bp)
        if bp <= 0.0 or bp >= mu.x_max:
            continue
        pos = bp / h
        if abs(pos - round(pos)) <= _SNAP:
            continue  # already a node
        inner.setdefault(int(pos), []).append(bp)

    cross = L * R < 0.0
    special = cross.copy()
    for i in inner:
        if 0 <= i < n - 1:
            special[i] = True

    plain = ~special
    total = float(np.sum((np.abs(L[plain]) * wn[:-1][plain]
                          + np.abs(R[plain]) * wn[1:][plain]) * (h / 2.0)))

    for i in np.flatnonzero(special):
        a, b = nodes[i], nodes[i + 1]
        li, ri = L[i], R[i]
        pts = sorted(inner.get(i, []))
        if li * ri < 0.0:
            pts.append(a + h * li / (li - ri))
            pts.sort()
        xs = np.array([a] + pts + [b])
        vals = li + (ri - li) * (xs - a) / h
        vals[0], vals[-1] = li, ri
        ws = np.empty_like(xs)
        ws[0], ws[-1] = wn[i], wn[i + 1]
        if xs.size > 2:
            ws[1:-1] = 1.0 if w is None else _evaluate(w, xs[1:-1])
        seg = np.diff(xs)
        av = np.abs(vals)
        total += float(np.sum(seg * (av[:-1] * ws[:-1] + av[1:] * ws[1:]) / 2.0))

    for loc, wt in mu.atoms:
        wloc = 1.0 if w is None else float(_evaluate(w, np.array([loc]))[0])
        total += wloc * abs(wt)
    return total


def total_variation(mu: HybridMeasure) -> float:
    """Total variation: exact integral of |density| plus summed |atom weights|."""
    return weighted_variation(mu, None)


def angle_bracket(mu: HybridMeasure) -> float:
    """Area-type functional: integral of sqrt(1 + density^2) plus atom mass."""
    L, R = _panel_sides(mu)
    ac = float(np.sum((np.sqrt(1.0 + L * L) + np.sqrt(1.0 + R * R)) * (mu.h / 2.0)))
    return ac + sum(abs(w) for _, w in mu.atoms)


def _hat_cdf(y, c, eps):
    """CDF of the unit triangular kernel centred at ``c`` with half-width ``eps``."""
    u = np.clip((np.asarray(y, dtype=float) - c) / eps, -1.0, 1.0)
    return np.where(u <= 0.0, 0.5 * (1.0 + u) ** 2, 1.0 - 0.5 * (1.0 - u) ** 2)


def mollify(mu: HybridMeasure, eps: float) -> "HybridMeasure":
    """Replace every atom by a mass-preserving triangular bump.

    Kernel mass spilling below x = 0 is reflected back into [0, eps], so
    each atom's mass lands on the grid exactly (cell-average projection:
    the trapezoid weights of the grid coincide with the cell widths).  The
    density part is left untouched and the result carries no atoms.
    """
    if eps < mu.h * (1.0 - 1e-12):
        raise MeasureError("mollifier width below grid spacing: kernel unresolvable")
    if not mu.atoms:
        return mu
    nodes = mu.nodes
    x_max = mu.x_max
    edges = np.empty(nodes.size + 1)
    edges[0] = 0.0
    edges[-1] = x_max
    edges[1:-1] = nodes[:-1] + mu.h / 2.0
    widths = np.diff(edges)

    dens = mu.density.copy()
    added = np.zeros_like(dens)
    for c, wt in mu.atoms:
        if c + eps > x_max * (1 + _SNAP):
            raise MeasureError(f"kernel around atom at {c} leaves the domain")
        mass_to = _hat_cdf(edges, c, eps) - _hat_cdf(-edges, c, eps)
        added += wt * np.diff(mass_to) / widths
    dens = dens + added
    jumps = tuple((x, lo + added[int(round(x / mu.h))], hi + added[int(round(x / mu.h))])
                  for x, lo, hi in mu.jumps)
    return HybridMeasure(mu.h, dens, (), jumps, nonnegative=mu.nonnegative)


def shift_pushforward(mu: HybridMeasure, t: float, scale: float) -> "HybridMeasure":
    """Image of the measure under x -> x + t, weights multiplied by ``scale``.

    The domain grows by ``t``.  Grid-aligned shifts are exact index moves;
    otherwise the density is linearly resampled onto the extended grid and
    jump records are dropped (their node values are already the means).
    """
    if t < 0.0:
        raise MeasureError("shift must be nonnegative")
    h = mu.h
    atoms = tuple((loc + t, wt * scale) for loc, wt in mu.atoms)
    steps = t / h
    if abs(steps - round(steps)) <= _SNAP:
        k = int(round(steps))
        dens = np.concatenate([np.zeros(k), mu.density * scale])
        jumps = [(x + k * h, lo * scale, hi * scale)
                 for x, lo, hi in mu.jumps if x > 0.0 or k == 0]
        if k > 0:
            # the shifted density starts abruptly at x = t
            right0 = mu.density[0]
            for x, _, hi in mu.jumps:
                if x == 0.0:
                    right0 = hi
            if right0 * scale != 0.0:
                jumps.append((k * h, 0.0, right0 * scale))
        nonneg = mu.nonnegative and scale >= 0.0
        return HybridMeasure(h, dens, atoms, tuple(jumps), nonnegative=nonneg)
    n_new = mu.node_count + int(math.ceil(steps - _SNAP))
    xs = np.arange(n_new) * h
    dens = scale * mu.density_at(xs - t)
    return HybridMeasure(h, dens, atoms, nonnegative=mu.nonnegative and scale >= 0.0)


def _common_grid(mu: HybridMeasure, nu: HybridMeasure):
    """Target (h, node_count) covering both measures; grids must be commensurable."""
    h1, h2 = mu.h, nu.h
    if abs(h1 - h2) <= _SNAP * h1:
        g = min(h1, h2)
    else:
        frac = Fraction(h1 / h2).limit_denominator(10 ** 6)
        p, q = frac.numerator, frac.denominator
        g = h1 / p
        if p < 1 or q < 1 or abs(h2 / q - g) > _SNAP * g:
            raise MeasureError("incommensurable grids cannot be combined")
    x_max = max(mu.x_max, nu.x_max)
    n = int(round(x_max / g)) + 1
    return g, n


def _resample(mu: HybridMeasure, g: float, n: int):
    """Density values and carried-over jumps of ``mu`` on the refined grid."""
    xs = np.arange(n) * g
    dens = mu.density_at(xs)
    jumps = {}
    for x, lo, hi in mu.jumps:
        i = int(round(x / g))
        if abs(x - i * g) <= _SNAP * max(1.0, x):
            jumps[i] = (lo, hi)
    return dens, jumps


def linear_combination(a: float, mu: HybridMeasure, b: float, nu: HybridMeasure):
    """The measure ``a*mu + b*nu`` on a common refinement grid."""
    g, n = _common_grid(mu, nu)
    d1, j1 = _resample(mu, g, n)
    d2, j2 = _resample(nu, g, n)
    dens = a * d1 + b * d2
    atoms = [(loc, a * wt) for loc, wt in mu.atoms]
    atoms += [(loc, b * wt) for loc, wt in nu.atoms]

    jumps = []
    for i in sorted(set(j1) | set(j2)):
        lo1, hi1 = j1.get(i, (d1[i], d1[i]))
        lo2, hi2 = j2.get(i, (d2[i], d2[i]))
        lo, hi = a * lo1 + b * lo2, a * hi1 + b * hi2
        if lo != hi:
            jumps.append((i * g, lo, hi))

    nonneg = mu.nonnegative and nu.nonnegative and a >= 0.0 and b >= 0.0
    return HybridMeasure(g, dens, tuple(atoms), tuple(jumps), nonnegative=nonneg)


def ac_cumulative(mu: HybridMeasure, ys) -> np.ndarray:
    """Exact integral of the piecewise-linear density over [0, y] for each y.

    Honours jump records (panel masses use the one-sided limits).
    """
    L, R = _panel_sides(mu)
    panel_mass = (L + R) * (mu.h / 2.0)
    cum = np.concatenate([[0.0], np.cumsum(panel_mass)])
    scalar = np.ndim(ys) == 0
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    yc = np.clip(ys, 0.0, mu.x_max)
    idx = np.minimum((yc / mu.h).astype(int), mu.node_count - 2)
    s = yc - idx * mu.h
    vline = L[idx] + (R[idx] - L[idx]) * s / mu.h
    out = cum[idx] + s * (L[idx] + vline) / 2.0
    return float(out[0]) if scalar else out


# -- flat (bounded-Lipschitz) metric -----------------------------------------


def _support_points(mu: HybridMeasure):
    tw = np.full(mu.node_count, mu.h)
    tw[0] = tw[-1] = mu.h / 2.0
    locs = mu.nodes
    wts = tw * mu.density
    if mu.atoms:
        locs = np.concatenate([locs, [a[0] for a in mu.atoms]])
        wts = np.concatenate([wts, [a[1] for a in mu.atoms]])
    return locs, wts


def _chain_max(locs: np.ndarray, w: np.ndarray) -> float:
    """Maximize sum(w_i f_i) over |f_i| <= 1, |f_{i+1} - f_i| <= gap_i.

    Forward sweep of the exact dynamic program on the concave piecewise
    linear value function V_k(y) = best total with f_k = y: slide the top
    apart by the gap (max-filter), clamp the domain back to [-1, 1], then
    tilt by the next weight.  The answer is the final peak value.
    """
    xs = np.array([-1.0, 1.0])
    vs = w[0] * xs
    for k in range(1, locs.size):
        g = locs[k] - locs[k - 1]
        top = vs.max()
        flat = np.flatnonzero(vs == top)
        pl, pr = flat[0], flat[-1]
        xs = np.concatenate([xs[:pl + 1] - g, xs[pr:] + g])
        vs = np.concatenate([vs[:pl + 1], vs[pr:]])
        vl = np.interp(-1.0, xs, vs)
        vr = np.interp(1.0, xs, vs)
        keep = (xs > -1.0) & (xs < 1.0)
        xs = np.concatenate([[-1.0], xs[keep], [1.0]])
        vs = np.concatenate([[vl], vs[keep], [vr]])
        vs = vs + w[k] * xs
    return float(vs.max())


def flat_distance(mu: HybridMeasure, nu: HybridMeasure, max_points: int = 200_000) -> float:
    """Flat (bounded-Lipschitz) distance between two measures.

    The difference measure is discretized to atoms (trapezoid node weights
    for the AC parts, atoms verbatim) and the finite maximization over test
    functions with sup-norm and Lipschitz constant at most one is solved
    exactly by a clamping dynamic program over the sorted support.
    """
    l1, w1 = _support_points(mu)
    l2, w2 = _support_points(nu)
    locs = np.concatenate([l1, l2])
    wts = np.concatenate([w1, -w2])
    uniq, inv = np.unique(locs, return_inverse=True)
    merged = np.bincount(inv, weights=wts)
    keep = merged != 0.0
    pts, vals = uniq[keep], merged[keep]
    if pts.size == 0:
        return 0.0
    if pts.size > max_points:
        raise MeasureError("flat metric support exceeds the configured point budget")
    return _chain_max(pts, vals)


# -- snapshot files -----------------------------------------------------------


def write_snapshot(mu: HybridMeasure, path) -> None:
    """Write the measure as ``kind,x,value`` CSV (17 significant digits)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("kind,x,value\n")
        h = mu.h
        for i, v in enumerate(mu.density):
            fh.write(f"density,{i * h:.17g},{float(v):.17g}\n")
        for loc, wt in mu.atoms:
            fh.write(f"atom,{loc:.17g},{wt:.17g}\n")


def read_snapshot(path) -> HybridMeasure:
    """Read a measure written by :func:`write_snapshot`.

    Jump records are not part of the file format, so a round-tripped
    measure carries plain node values only.
    """
    xs, vs, atoms = [], [], []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "kind,x,value":
            raise MeasureError(f"bad snapshot header: {header!r}")
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise MeasureError(f"line {ln}: expected 3 fields")
            kind, x, v = parts
            try:
                x, v = float(x), float(v)
            except ValueError as exc:
                raise MeasureError(f"line {ln}: {exc}") from exc
            if not (math.isfinite(x) and math.isfinite(v)):
                raise MeasureError(f"line {ln}: non-finite value")
            if kind == "density":
                xs.append(x)
                vs.append(v)
            elif kind == "atom":
                atoms.append((x, v))
            else:
                raise MeasureError(f"line {ln}: unknown kind {kind!r}")
    if len(xs) < 2:
        raise MeasureError("snapshot needs at least two density nodes")
    h = xs[1] - xs[0]
    if h <= 0.0:
        raise MeasureError("snapshot nodes must increase")
    for i, x in enumerate(xs):
        if abs(x - i * h) > _SNAP * max(1.0, xs[-1]):
            raise MeasureError("snapshot grid is not uniform")
    return HybridMeasure(h, np.array(vs), tuple(atoms))
