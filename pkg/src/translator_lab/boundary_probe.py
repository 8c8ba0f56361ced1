"""Numerical probes of the boundary behaviour of blowing-up graphs.

Level curves ``{u = c}`` of a graph that blows up along an arc should converge,
as ``c -> +-inf``, to a geodesic (translating and minimal graphs) or to a curve
of constant geodesic curvature ``|H0|`` (constant mean curvature graphs).  The
probes here extract those level curves, measure their geodesic curvature in
the base surface and extrapolate the limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .graph_geometry import EXCLUDED, INTERIOR, Chart, GraphPatch, ShapeOperatorField
from .soliton_profiles import InconclusiveError, Mode, RadialProfile, _fornberg
from .warped_surface import WarpedSurface

__all__ = [
    "LevelCurve",
    "ProbeError",
    "DegenerateContourError",
    "extract_level_curve",
    "circle_curve",
    "curve_geodesic_curvature",
    "LimitFit",
    "limit_curvature_classify",
    "Dichotomy",
    "DichotomyResult",
    "sign_dichotomy_check",
    "vertical_translate",
    "window_patch",
    "MonitorStatus",
    "MonitorRow",
    "MonitorReport",
    "curvature_estimate_monitor",
    "theta_level_bands",
]


class ProbeError(ValueError):
    """A probe precondition failed."""


class DegenerateContourError(ProbeError):
    pass


@dataclass
class LevelCurve:
    """One connected component of ``{u = c}`` in chart coordinates ``(a, b)``."""

    level: float
    vertices: np.ndarray
    arclength: np.ndarray
    closed: bool = False
    touches_excluded: bool = False
    snapped: bool = False
    kappa: np.ndarray | None = None
    loop_shift: tuple = (0.0, 0.0)

    def __len__(self):
        return len(self.vertices)

    def to_rows(self):
        k = self.kappa if self.kappa is not None else np.full(len(self), np.nan)
        for (a, b), s, kk in zip(self.vertices, self.arclength, k):
            yield [self.level, a, b, s, kk]


def _arclength(surface: WarpedSurface, v: np.ndarray) -> np.ndarray:
    d = np.diff(v, axis=0)
    amid = 0.5 * (v[1:, 0] + v[:-1, 0])
    ds = np.sqrt(d[:, 0] ** 2 + (surface.h(amid) * d[:, 1]) ** 2)
    return np.concatenate([[0.0], np.cumsum(ds)])


def _snap(patch: GraphPatch, pts: np.ndarray, target: float, iters: int = 8) -> np.ndarray:
    """Project contour vertices onto the level set with Newton steps along ``grad u``."""
    if patch.closed_form is not None:
        cf = patch.closed_form

        def evaluate(p):
            d = cf.derivatives(p[:, 0], p[:, 1])
            return cf(p[:, 0], p[:, 1]), d.ua, d.ub
    else:
        spline = RectBivariateSpline(patch.a, patch.b, patch.values, kx=3, ky=3, s=0)

        def evaluate(p):
            return (
                spline.ev(p[:, 0], p[:, 1]),
                spline.ev(p[:, 0], p[:, 1], dx=1),
                spline.ev(p[:, 0], p[:, 1], dy=1),
            )

    c = patch.chart
    p = pts.copy()
    f, fa, fb = evaluate(p)
    for _ in range(iters):
        g2 = fa * fa + fb * fb
        step = np.where(g2 > 0, (f - target) / np.where(g2 > 0, g2, 1.0), 0.0)
        lam = np.ones(len(p))
        pending = np.abs(f - target) > 0
        # damped Newton: halve until the trial point stays in the chart and gets closer
        for _ in range(40):
            if not pending.any():
                break
            trial = p.copy()
            trial[pending, 0] -= lam[pending] * step[pending] * fa[pending]
            trial[pending, 1] -= lam[pending] * step[pending] * fb[pending]
            with np.errstate(all="ignore"):
                ft, fta, ftb = evaluate(trial)
            inside = (trial[:, 0] >= c.a0) & (trial[:, 0] <= c.a1) & (trial[:, 1] >= c.b0) & (trial[:, 1] <= c.b1)
            good = pending & inside & np.isfinite(ft) & (np.abs(ft - target) < np.abs(f - target))
            p[good], f[good], fa[good], fb[good] = trial[good], ft[good], fta[good], ftb[good]
            pending &= ~good
            lam[pending] *= 0.5
    return p


def extract_level_curve(patch: GraphPatch, c: float, *, snap: bool = True) -> list[LevelCurve]:
    """All connected components of ``{u = c}`` as polylines.

    Marching squares with linear edge interpolation, followed (by default) by a
    Newton projection onto the exact level set of the closed form, or of a
    bicubic interpolant when the patch is purely gridded.

    Raises
    ------
    DegenerateContourError
        The level is outside the patch range, the patch is flat at that level,
        or no contour was found.
    """
    from skimage.measure import find_contours

    target = c - patch.offset
    vals = np.array(patch.values, dtype=float)
    valid = patch.mask != EXCLUDED
    finite = vals[valid]
    if finite.size == 0 or np.ptp(finite) == 0.0:
        raise DegenerateContourError("empty/degenerate contour: patch is flat")
    lo, hi = float(np.min(finite)), float(np.max(finite))
    if not lo <= target <= hi:
        raise DegenerateContourError(f"empty/degenerate contour: level {c} outside [{lo + patch.offset}, {hi + patch.offset}]")
    filled = np.where(valid, vals, lo)
    comps = find_contours(filled, target, mask=valid if not valid.all() else None)
    chart = patch.chart
    can_snap = snap and (patch.closed_form is not None or valid.all())
    out = []
    for comp in comps:
        if len(comp) < 2:
            continue
        ia, ib = comp[:, 0], comp[:, 1]
        v = np.column_stack([chart.a0 + ia * chart.da, chart.b0 + ib * chart.db])
        closed = bool(np.allclose(comp[0], comp[-1]))
        # vertices next to an excluded node
        ti = np.clip(np.floor(ia).astype(int), 0, chart.na - 2)
        tj = np.clip(np.floor(ib).astype(int), 0, chart.nb - 2)
        near = (~valid[ti, tj]) | (~valid[ti + 1, tj]) | (~valid[ti, tj + 1]) | (~valid[ti + 1, tj + 1])
        touches = bool(near.any()) or (not valid.all() and _touches_mask_edge(valid, ti, tj))
        if can_snap:
            v = _snap(patch, v, target)
        if closed:
            v = v[:-1]
        out.append(LevelCurve(c, v, _arclength(chart.surface, v), closed, touches, can_snap))
    if not out:
        raise DegenerateContourError(f"empty/degenerate contour at level {c}")
    return out


def _touches_mask_edge(valid, ti, tj):
    na, nb = valid.shape
    lo_i, hi_i = np.clip(ti - 1, 0, na - 1), np.clip(ti + 2, 0, na - 1)
    lo_j, hi_j = np.clip(tj - 1, 0, nb - 1), np.clip(tj + 2, 0, nb - 1)
    return bool(np.any(~valid[lo_i, tj]) or np.any(~valid[hi_i, tj]) or np.any(~valid[ti, lo_j]) or np.any(~valid[ti, hi_j]))


def circle_curve(surface: WarpedSurface, radius: float, level: float, n: int = 256) -> LevelCurve:
    """The coordinate circle ``r = radius`` as a closed level curve."""
    th = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    v = np.column_stack([np.full(n, radius), th])
    shift = (0.0, 2 * math.pi)
    s = _arclength(surface, np.vstack([v, v[:1] + shift]))[:-1]
    return LevelCurve(level, v, s, closed=True, snapped=True, loop_shift=shift)


def _segments_intersect(v: np.ndarray, closed: bool, shift=(0.0, 0.0)) -> bool:
    pts = np.vstack([v, v[:1] + np.asarray(shift)]) if closed else v
    p, q = pts[:-1], pts[1:]
    n = len(p)
    if n < 4:
        return False

    def orient(a, b, c):
        return np.sign((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))

    for start in range(0, n, 256):
        i = np.arange(start, min(start + 256, n))[:, None]
        j = np.arange(n)[None, :]
        keep = j > i + 1
        if closed:
            keep &= ~((i == 0) & (j == n - 1))
        if not keep.any():
            continue
        A, B, C, D = p[i], q[i], p[j], q[j]
        o1, o2 = orient(A, B, C), orient(A, B, D)
        o3, o4 = orient(C, D, A), orient(C, D, B)
        hit = (o1 * o2 < 0) & (o3 * o4 < 0) & keep
        if hit.any():
            return True
    return False


def curve_geodesic_curvature(curve: LevelCurve, s: WarpedSurface, *, width: int = 5) -> np.ndarray:
    """Signed geodesic curvature at each vertex, with respect to ``sigma``.

    The polyline is parametrised by ``sigma``-arclength, differentiated with
    ``width``-point finite-difference weights on the (nonuniform) arclength
    nodes, and the covariant acceleration ``x'' + Gamma(x', x')`` is projected
    onto the left unit normal.  Counter-clockwise coordinate circles therefore
    get ``+h'/h``.
    """
    v = np.asarray(curve.vertices, dtype=float)
    n = len(v)
    if n < 5:
        raise ProbeError("curve_geodesic_curvature needs at least 5 vertices")
    if _segments_intersect(v, curve.closed, curve.loop_shift):
        raise ProbeError("self-intersecting polyline")
    half = width // 2
    if curve.closed:
        # a loop around the pole returns with the angle shifted by loop_shift
        shift = np.asarray(curve.loop_shift, dtype=float)
        ext = np.vstack([v[-half:] - shift, v, v[:half] + shift])
        sl = _arclength(s, np.vstack([v, v[:1] + shift]))
        period = sl[-1]
        sa = sl[:-1]
        sext = np.concatenate([sa[-half:] - period, sa, sa[:half] + period])
    else:
        ext, sext = v, curve.arclength
    d1 = np.empty((n, 2))
    d2 = np.empty((n, 2))
    for k in range(n):
        if curve.closed:
            lo = k
        else:
            lo = min(max(k - half, 0), n - width)
        idx = slice(lo, lo + width)
        x0 = sext[k + half] if curve.closed else sext[k]
        pts = ext[idx]
        d1[k] = _fornberg(x0, sext[idx], 1) @ pts
        d2[k] = _fornberg(x0, sext[idx], 2) @ pts
    a = v[:, 0]
    h = s.h(a)
    hp = s.h_prime(a)
    # covariant acceleration (chart components)
    acc_a = d2[:, 0] - h * hp * d1[:, 1] ** 2
    acc_b = d2[:, 1] + 2 * (hp / h) * d1[:, 0] * d1[:, 1]
    # orthonormal frame components (e_a, e_b / h)
    ta, tb = d1[:, 0], h * d1[:, 1]
    norm = np.hypot(ta, tb)
    ta, tb = ta / norm, tb / norm
    A_a, A_b = acc_a, h * acc_b
    kappa = -tb * A_a + ta * A_b
    if not np.all(np.isfinite(kappa)):
        raise ProbeError("non-finite curvature along the curve")
    curve.kappa = kappa
    return kappa


@dataclass
class LimitFit:
    levels: list
    kappa_per_level: list
    kappa_inf: float
    amplitude: float
    rate: float
    fit_residual: float
    target: float
    tol: float
    passed: bool
    monotone: bool
    curves: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "levels": list(map(float, self.levels)),
            "kappa_per_level": list(map(float, self.kappa_per_level)),
            "kappa_inf": self.kappa_inf,
            "amplitude": self.amplitude,
            "rate": self.rate,
            "fit_residual": self.fit_residual,
            "target": self.target,
            "tol": self.tol,
            "pass": self.passed,
            "monotone": self.monotone,
        }


def _mode_target(mode: Mode) -> tuple[float, float]:
    if mode.kind == "cmc":
        return abs(mode.H0), 1e-3
    return 0.0, 0.05


def _level_curves(source, c, window):
    if isinstance(source, RadialProfile):
        return [circle_curve(source.surface, source.radius_at_level(c), c)]
    curves = extract_level_curve(source, c)
    if window is not None:
        (a_lo, a_hi), (b_lo, b_hi) = window
        kept = []
        for cv in curves:
            inside = (cv.vertices[:, 0] >= a_lo) & (cv.vertices[:, 0] <= a_hi) & (cv.vertices[:, 1] >= b_lo) & (cv.vertices[:, 1] <= b_hi)
            if inside.all():
                kept.append(cv)
        curves = kept
    if not curves:
        raise DegenerateContourError(f"no level curve at c={c} inside the probe window")
    return curves


def _fit_limit(c: np.ndarray, k: np.ndarray, noise: float):
    """Fit ``k = k_inf + a exp(-rate c)``.

    With three or more levels whose successive differences are above the noise
    floor the rate is estimated from the geometric ratio of the differences
    (Aitken/Richardson); otherwise ``rate = 1``.  The remaining linear
    parameters come from least squares.
    """
    rate = 1.0
    if len(c) >= 3:
        d = np.diff(k)
        dc = np.diff(c)
        ok = np.all(np.abs(d) > noise) and np.all(d[1:] / d[:-1] > 0) and np.allclose(dc, dc[0])
        if ok:
            q = float(np.exp(np.mean(np.log(d[1:] / d[:-1]))))
            if 0.0 < q < 1.0:
                rate = -math.log(q) / float(dc[0])
    X = np.column_stack([np.ones_like(c), np.exp(-rate * (c - c[0]))])
    coef, *_ = np.linalg.lstsq(X, k, rcond=None)
    resid = float(np.max(np.abs(X @ coef - k))) if len(c) else 0.0
    return float(coef[0]), float(coef[1]), rate, resid


def limit_curvature_classify(
    source,
    levels: Sequence[float],
    mode: Mode,
    *,
    window=None,
    tol: float | None = None,
    trim: int = 2,
) -> LimitFit:
    """Extrapolate the geodesic curvature of level curves as ``c -> inf``.

    ``source`` is a :class:`GraphPatch` (optionally restricted to ``window``,
    ``((a_lo, a_hi), (b_lo, b_hi))``) or a :class:`RadialProfile`, whose level
    curves are coordinate circles.  The per-level statistic is the mean of
    ``|kappa_g|`` over the vertices, dropping ``trim`` vertices at the ends of
    open curves.

    Raises
    ------
    InconclusiveError
        The per-level curvatures are not monotone beyond the noise floor.
    """
    # blow-down to -inf is probed with negative levels; order by distance to the arc
    levels = np.asarray(sorted(levels, key=abs), dtype=float)
    if levels.size == 0:
        raise ProbeError("no levels given")
    target, default_tol = _mode_target(mode)
    tol = default_tol if tol is None else tol
    means = []
    all_curves = []
    for c in levels:
        curves = _level_curves(source, c, window)
        vals = []
        for cv in curves:
            k = curve_geodesic_curvature(cv, source.surface)
            cv.kappa = k
            if not cv.closed and trim and len(k) > 2 * trim + 1:
                k = k[trim:-trim]
            vals.append(np.abs(k))
        means.append(float(np.mean(np.concatenate(vals))))
        all_curves.append(curves)
    k = np.asarray(means)
    noise = 1e-9 + 1e-6 * float(np.max(np.abs(k)))
    d = np.diff(k)
    monotone = bool(np.all(d <= noise) or np.all(d >= -noise))
    if not monotone:
        raise InconclusiveError(
            "level-curve curvature is not monotone in the level",
            {"levels": levels.tolist(), "kappa_per_level": k.tolist()},
        )
    kinf, amp, rate, resid = _fit_limit(np.abs(levels), k, noise)
    return LimitFit(levels.tolist(), k.tolist(), kinf, amp, rate, resid, target, tol, abs(kinf - target) < tol, monotone, all_curves)


class Dichotomy(enum.Enum):
    ALL_PLUS = "AllPlus"
    ALL_MINUS = "AllMinus"
    VIOLATED = "Violated"


@dataclass
class DichotomyResult:
    outcome: Dichotomy
    signs: list
    witness: tuple | None = None
    sequences: list = field(default_factory=list, repr=False)

    def to_dict(self):
        d = {"outcome": self.outcome.value, "signs": self.signs}
        if self.witness is not None:
            d["witness"] = [
                {"point": list(map(float, seq["point"])), "values": list(map(float, seq["values"]))} for seq in self.witness
            ]
        return d


def _sampler(source):
    if isinstance(source, RadialProfile):
        return lambda a, b: float(source.u_at(a))
    if isinstance(source, GraphPatch):
        return source.height_at
    if callable(source):
        return lambda a, b: float(source(a, b))
    raise TypeError("source must be a GraphPatch, RadialProfile or callable")


def sign_dichotomy_check(
    source,
    gamma_samples,
    inward,
    *,
    n_sequences: int = 20,
    steps: int = 12,
    start: float = 0.1,
    collar: float = 1e-2,
) -> DichotomyResult:
    """Sample ``u`` along sequences approaching points of the arc ``gamma``.

    ``gamma_samples`` is an array of chart points on the arc (``n_sequences``
    of them are used, evenly spread), ``inward`` a chart direction (or a
    per-point array of directions) pointing into the domain.  Sequence ``j``
    uses distances ``start * (1 + 0.37 j / n) * 2^-k``; the offsets make the
    schedules distinct.  Each sequence is assigned the sign of its last sample.

    Raises
    ------
    ProbeError
        A sequence never enters the collar ``dist < collar`` or leaves the domain.
    """
    u = _sampler(source)
    pts = np.asarray(gamma_samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ProbeError("gamma_samples must be an (n, 2) array")
    sel = np.linspace(0, len(pts) - 1, n_sequences).round().astype(int) if len(pts) >= n_sequences else np.arange(len(pts))
    dirs = np.broadcast_to(np.asarray(inward, dtype=float), pts.shape)
    seqs = []
    signs = []
    for j, idx in enumerate(sel):
        base = start * (1.0 + 0.37 * j / max(len(sel), 1))
        dist = base * 0.5 ** np.arange(steps)
        if dist[-1] >= collar:
            raise ProbeError(f"sequence {j} does not enter the blow-up collar")
        d = dirs[idx] / np.linalg.norm(dirs[idx])
        vals = np.array([u(*(pts[idx] + t * d)) for t in dist])
        if not np.all(np.isfinite(vals)):
            raise ProbeError(f"sequence {j} leaves the domain")
        seqs.append({"point": pts[idx], "distances": dist, "values": vals})
        signs.append(int(np.sign(vals[-1])))
    if all(sg > 0 for sg in signs):
        return DichotomyResult(Dichotomy.ALL_PLUS, signs, None, seqs)
    if all(sg < 0 for sg in signs):
        return DichotomyResult(Dichotomy.ALL_MINUS, signs, None, seqs)
    i = next(k for k, sg in enumerate(signs) if sg > 0) if any(sg > 0 for sg in signs) else 0
    j = next(k for k, sg in enumerate(signs) if sg <= 0)
    return DichotomyResult(Dichotomy.VIOLATED, signs, (seqs[i], seqs[j]), seqs)


def vertical_translate(source, base_point):
    """Shift heights so that ``u(base_point) = 0``.

    For patches only ``offset`` changes, so every geometric field computed from
    the result is bitwise identical.  ``base_point`` is ``(a, b)`` for patches
    and a radius for radial profiles.
    """
    if isinstance(source, RadialProfile):
        r = float(np.atleast_1d(base_point)[0])
        return replace(source, u=source.u - float(source.u_at(r)))
    a, b = base_point
    source.chart.surface.check_radius(a)
    h = source.height_at(a, b)
    return replace(source, offset=source.offset - h)


def window_patch(patch: GraphPatch, a_range, b_range) -> GraphPatch:
    """Sub-patch made of the grid nodes inside ``a_range x b_range``."""
    a, b = patch.a, patch.b
    ia = np.nonzero((a >= a_range[0]) & (a <= a_range[1]))[0]
    ib = np.nonzero((b >= b_range[0]) & (b <= b_range[1]))[0]
    if len(ia) < 3 or len(ib) < 3:
        raise ProbeError("window too small")
    sa, sb = slice(ia[0], ia[-1] + 1), slice(ib[0], ib[-1] + 1)
    chart = Chart(patch.surface, float(a[ia[0]]), float(a[ia[-1]]), len(ia), float(b[ib[0]]), float(b[ib[-1]]), len(ib))
    mask = patch.mask[sa, sb].copy()
    mask[0, :] = np.where(mask[0, :] == EXCLUDED, EXCLUDED, 1)
    mask[-1, :] = np.where(mask[-1, :] == EXCLUDED, EXCLUDED, 1)
    mask[:, 0] = np.where(mask[:, 0] == EXCLUDED, EXCLUDED, 1)
    mask[:, -1] = np.where(mask[:, -1] == EXCLUDED, EXCLUDED, 1)
    return GraphPatch(chart, patch.values[sa, sb].copy(), mask, patch.offset, patch.closed_form, patch.name, dict(patch.meta))


class MonitorStatus(enum.Enum):
    OK = "OK"
    HYPOTHESIS_FAILURE = "HYPOTHESIS_FAILURE"
    ESTIMATE_FAILURE = "ESTIMATE_FAILURE"


@dataclass
class MonitorRow:
    rho: float
    sup_A2: float
    product: float
    status: MonitorStatus
    nodes: int

    def to_dict(self):
        return {"rho": self.rho, "sup_A2": self.sup_A2, "product": self.product, "status": self.status.value, "nodes": self.nodes}


@dataclass
class MonitorReport:
    rows: list
    bound: float
    status: MonitorStatus

    def to_dict(self):
        return {"bound": self.bound, "status": self.status.value, "rows": [r.to_dict() for r in self.rows]}


def _grid_graph(patch: GraphPatch, field: ShapeOperatorField):
    na, nb = field.theta.shape
    valid = patch.mask != EXCLUDED
    g = field.g
    # fall back to the flat metric where second derivatives are missing
    gi = np.where(np.isfinite(g), g, 0.0)
    rows, cols, w = [], [], []
    ids = np.arange(na * nb).reshape(na, nb)
    da, db = patch.chart.da, patch.chart.db
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        i0, i1 = max(0, -di), na - max(0, di)
        j0, j1 = max(0, -dj), nb - max(0, dj)
        src = (slice(i0, i1), slice(j0, j1))
        dst = (slice(i0 + di, i1 + di), slice(j0 + dj, j1 + dj))
        gm = 0.5 * (gi[src] + gi[dst])
        x, y = di * da, dj * db
        length = np.sqrt(np.maximum(gm[..., 0, 0] * x * x + 2 * gm[..., 0, 1] * x * y + gm[..., 1, 1] * y * y, 0.0))
        ok = valid[src] & valid[dst] & (length > 0)
        rows.append(ids[src][ok])
        cols.append(ids[dst][ok])
        w.append(length[ok])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    ww = np.concatenate(w)
    n = na * nb
    return coo_matrix((np.concatenate([ww, ww]), (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(n, n)).tocsr()


def curvature_estimate_monitor(
    patch: GraphPatch,
    field: ShapeOperatorField,
    center,
    radii: Sequence[float],
    *,
    bound: float = 10.0,
) -> MonitorReport:
    """Table of ``(rho, sup_{B_rho} |A|^2 * rho^2)`` for intrinsic balls around ``center``.

    Balls are computed with Dijkstra on the 8-neighbour grid graph, edge
    lengths measured with the graph metric.  A ball that reaches a boundary or
    excluded node, or a node without curvature data, violates the hypothesis of
    an interior estimate and is reported as ``HYPOTHESIS_FAILURE``; otherwise a
    product above ``bound`` is an ``ESTIMATE_FAILURE``.
    """
    a, b = patch.a, patch.b
    i = int(np.argmin(np.abs(a - center[0])))
    j = int(np.argmin(np.abs(b - center[1])))
    if patch.mask[i, j] == EXCLUDED:
        raise ProbeError("center lies on an excluded node")
    G = _grid_graph(patch, field)
    dist = dijkstra(G, directed=False, indices=i * len(b) + j).reshape(len(a), len(b))
    A2 = field.normA2
    inner = patch.mask == INTERIOR
    rows = []
    worst = MonitorStatus.OK
    for rho in sorted(float(r) for r in radii):
        ball = dist <= rho
        bad = ball & (~inner | ~np.isfinite(A2))
        # a ball that is cut off by excluded nodes shows up as unreachable neighbours
        frontier_cut = _ball_touches_excluded(patch.mask, ball)
        sup = float(np.max(np.where(ball & np.isfinite(A2), A2, 0.0)))
        prod = sup * rho * rho
        if bad.any() or frontier_cut:
            st = MonitorStatus.HYPOTHESIS_FAILURE
        elif prod > bound:
            st = MonitorStatus.ESTIMATE_FAILURE
        else:
            st = MonitorStatus.OK
        rows.append(MonitorRow(rho, sup, prod, st, int(ball.sum())))
        if st is MonitorStatus.HYPOTHESIS_FAILURE:
            worst = st
        elif st is MonitorStatus.ESTIMATE_FAILURE and worst is MonitorStatus.OK:
            worst = st
    return MonitorReport(rows, bound, worst)


def _ball_touches_excluded(mask: np.ndarray, ball: np.ndarray) -> bool:
    ex = mask == EXCLUDED
    if not ex.any():
        return False
    grown = ball.copy()
    grown[1:, :] |= ball[:-1, :]
    grown[:-1, :] |= ball[1:, :]
    grown[:, 1:] |= ball[:, :-1]
    grown[:, :-1] |= ball[:, 1:]
    return bool((grown & ex).any())


def theta_level_bands(patch: GraphPatch, theta: np.ndarray, levels: Sequence[float]) -> dict:
    """Minimum of ``Theta`` on each band ``c_k <= u < c_{k+1}`` and whether it decays."""
    u = patch.u
    levels = sorted(levels)
    mins = []
    for lo, hi in zip(levels[:-1], levels[1:]):
        sel = (u >= lo) & (u < hi) & np.isfinite(theta)
        mins.append(float(np.min(theta[sel])) if sel.any() else float("nan"))
    finite = [m for m in mins if math.isfinite(m)]
    decays = all(x >= y for x, y in zip(finite, finite[1:]))
    return {"bands": [[lo, hi] for lo, hi in zip(levels[:-1], levels[1:])], "min_theta": mins, "decays": decays}
