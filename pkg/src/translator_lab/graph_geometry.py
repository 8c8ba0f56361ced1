"""Extrinsic geometry of gridded graphs ``t = u(a, b)`` in ``N x R``.

Charts are rectangles in the coordinates ``(a, b)`` of a warped surface, with
``sigma = da^2 + h(a)^2 db^2``: ``(r, theta)`` for the polar catalog surfaces
and ``(x, y)`` for the flat Cartesian chart (``h == 1``).

Conventions: upward unit normal ``v = (d_t - Du) / W``, second fundamental form
``h_ij = -<D_{X_i} X_j, v> = -Hess(u)_ij / W``, mean curvature
``H = g^ij h_ij = -div(Du / W)``.  Translators satisfy ``H = -Theta``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .warped_surface import WarpedSurface, gauss_curvature

__all__ = [
    "INTERIOR",
    "DIRICHLET",
    "EXCLUDED",
    "Chart",
    "ClosedForm",
    "GraphPatch",
    "Derivatives",
    "ShapeOperatorField",
    "StencilError",
    "NewtonDivergenceError",
    "make_patch",
    "derivatives",
    "angle_function",
    "shape_operator",
    "divergence_term",
    "translator_residual",
    "minimal_residual",
    "cmc_residual",
    "laplace_beltrami",
    "jacobi_apply",
    "graphic_identity_residual",
    "harmonic_extension",
    "solve_dirichlet_translator",
]

INTERIOR, DIRICHLET, EXCLUDED = 0, 1, 2


class StencilError(ValueError):
    """Not enough stencil margin for the requested operator."""


class NewtonDivergenceError(RuntimeError):
    def __init__(self, message, last_residual):
        super().__init__(f"{message} (last max residual {last_residual:.3e})")
        self.last_residual = last_residual


@dataclass(frozen=True)
class Chart:
    """Uniform rectangular grid ``[a0, a1] x [b0, b1]`` on a surface chart."""

    surface: WarpedSurface
    a0: float
    a1: float
    na: int
    b0: float
    b1: float
    nb: int

    def __post_init__(self):
        if self.na < 3 or self.nb < 3:
            raise ValueError("need at least 3 nodes per axis")
        if not (self.a1 > self.a0 and self.b1 > self.b0):
            raise ValueError("chart spacings must be positive")
        if self.surface.has_pole and self.a0 <= 0:
            raise ValueError("polar charts must stay off the pole (a0 > 0)")
        self.surface.check_radius(np.array([self.a0, self.a1]))

    @property
    def a(self) -> np.ndarray:
        return np.linspace(self.a0, self.a1, self.na)

    @property
    def b(self) -> np.ndarray:
        return np.linspace(self.b0, self.b1, self.nb)

    @property
    def da(self) -> float:
        return (self.a1 - self.a0) / (self.na - 1)

    @property
    def db(self) -> float:
        return (self.b1 - self.b0) / (self.nb - 1)

    def mesh(self):
        return np.meshgrid(self.a, self.b, indexing="ij")

    def refined(self, na: int, nb: int | None = None) -> "Chart":
        return replace(self, na=na, nb=nb if nb is not None else na)

    def to_dict(self):
        return {
            "surface": self.surface.label,
            "a": [self.a0, self.a1, self.na],
            "b": [self.b0, self.b1, self.nb],
            "spacing": [self.da, self.db],
        }


class ClosedForm:
    """Closed-form graph ``u(a, b)`` with symbolic first and second derivatives."""

    def __init__(self, expr: str, name: str = "", coords: tuple[str, str] = ("a", "b")):
        import sympy as sp

        a, b = sp.symbols(coords, real=True)
        self.expr = sp.sympify(expr, locals={coords[0]: a, coords[1]: b})
        self.name = name or str(self.expr)
        self.coords = coords
        parts = {
            "u": self.expr,
            "ua": sp.diff(self.expr, a),
            "ub": sp.diff(self.expr, b),
            "uaa": sp.diff(self.expr, a, 2),
            "uab": sp.diff(self.expr, a, b),
            "ubb": sp.diff(self.expr, b, 2),
        }
        self._fns = {k: sp.lambdify((a, b), v, "numpy") for k, v in parts.items()}

    def _eval(self, key, A, B):
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        with np.errstate(all="ignore"):
            out = self._fns[key](A, B)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(A, B).shape).copy()

    def __call__(self, A, B):
        return self._eval("u", A, B)

    def derivatives(self, A, B) -> "Derivatives":
        return Derivatives(*(self._eval(k, A, B) for k in ("ua", "ub", "uaa", "uab", "ubb")))


@dataclass
class GraphPatch:
    """Gridded graph over a chart.

    ``values`` holds the heights without ``offset``; geometry only ever looks at
    differences of ``values`` so a vertical translation, which only changes
    ``offset``, leaves every geometric field bitwise unchanged.
    """

    chart: Chart
    values: np.ndarray
    mask: np.ndarray
    offset: float = 0.0
    closed_form: ClosedForm | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def surface(self) -> WarpedSurface:
        return self.chart.surface

    @property
    def u(self) -> np.ndarray:
        out = self.values + self.offset
        out[self.mask == EXCLUDED] = np.nan
        return out

    @property
    def a(self):
        return self.chart.a

    @property
    def b(self):
        return self.chart.b

    def height_at(self, a: float, b: float) -> float:
        """Height at an arbitrary chart point (closed form if available, else bilinear)."""
        if self.closed_form is not None:
            return float(self.closed_form(a, b)) + self.offset
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator((self.a, self.b), self.values)
        return float(interp([[a, b]])[0]) + self.offset

    def to_csv(self, path):
        A, B = self.chart.mesh()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a", "b", "u", "mask"])
            for a, b, u, m in zip(A.ravel(), B.ravel(), self.u.ravel(), self.mask.ravel()):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(u)), int(m)])

    def header(self) -> dict:
        return {"name": self.name, "chart": self.chart.to_dict(), "offset": self.offset}

    def write(self, stem):
        stem = Path(stem)
        self.to_csv(stem.with_suffix(".csv"))
        stem.with_suffix(".json").write_text(json.dumps(self.header(), indent=2, sort_keys=True) + "\n")


def default_mask(chart: Chart) -> np.ndarray:
    mask = np.full((chart.na, chart.nb), INTERIOR, dtype=np.int8)
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = DIRICHLET
    return mask


def make_patch(
    chart: Chart,
    u,
    *,
    closed_form: ClosedForm | None = None,
    mask: np.ndarray | None = None,
    name: str = "",
) -> GraphPatch:
    """Sample ``u`` (array, callable ``u(A, B)`` or :class:`ClosedForm`) on a chart.

    Nodes where the sampled height is not finite are marked ``EXCLUDED``.
    """
    if isinstance(u, ClosedForm):
        closed_form = u
    A, B = chart.mesh()
    if callable(u):
        with np.errstate(all="ignore"):
            vals = np.asarray(u(A, B), dtype=float)
    else:
        vals = np.array(u, dtype=float)
    vals = np.broadcast_to(vals, A.shape).copy()
    m = default_mask(chart) if mask is None else np.array(mask, dtype=np.int8)
    bad = ~np.isfinite(vals)
    m[bad] = EXCLUDED
    vals[bad] = np.nan
    return GraphPatch(chart, vals, m, closed_form=closed_form, name=name or (closed_form.name if closed_form else ""))


@dataclass
class Derivatives:
    ua: np.ndarray
    ub: np.ndarray
    uaa: np.ndarray
    uab: np.ndarray
    ubb: np.ndarray


def _nan_values(patch: GraphPatch) -> np.ndarray:
    v = np.array(patch.values, dtype=float)
    v[patch.mask == EXCLUDED] = np.nan
    return v


def grid_derivatives(patch: GraphPatch) -> Derivatives:
    """Second-order central differences; second derivatives are NaN on the chart edge."""
    v = _nan_values(patch)
    da, db = patch.chart.da, patch.chart.db
    ua = np.gradient(v, da, axis=0, edge_order=2)
    ub = np.gradient(v, db, axis=1, edge_order=2)
    nan = np.full_like(v, np.nan)
    uaa, uab, ubb = nan.copy(), nan.copy(), nan.copy()
    c = v[1:-1, 1:-1]
    uaa[1:-1, 1:-1] = (v[2:, 1:-1] - 2 * c + v[:-2, 1:-1]) / da**2
    ubb[1:-1, 1:-1] = (v[1:-1, 2:] - 2 * c + v[1:-1, :-2]) / db**2
    uab[1:-1, 1:-1] = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * da * db)
    # a node whose diagonal neighbours are excluded has no trustworthy stencil
    uaa[np.isnan(uab)] = np.nan
    ubb[np.isnan(uab)] = np.nan
    return Derivatives(ua, ub, uaa, uab, ubb)


def derivatives(patch: GraphPatch, method: str = "auto") -> Derivatives:
    """Node derivatives of ``u``: ``analytic`` (closed form), ``grid`` or ``auto``."""
    if method == "auto":
        method = "analytic" if patch.closed_form is not None else "grid"
    if method == "analytic":
        if patch.closed_form is None:
            raise ValueError("patch has no closed form")
        A, B = patch.chart.mesh()
        d = patch.closed_form.derivatives(A, B)
        ex = patch.mask == EXCLUDED
        for arr in (d.ua, d.ub, d.uaa, d.uab, d.ubb):
            arr[ex] = np.nan
        return d
    if method == "grid":
        return grid_derivatives(patch)
    raise ValueError(f"unknown derivative method {method!r}")


@dataclass
class ShapeOperatorField:
    """Per-node extrinsic geometry (arrays of shape ``(na, nb)`` or ``(na, nb, 2, 2)``)."""

    W: np.ndarray
    theta: np.ndarray
    h: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    H: np.ndarray
    normA2: np.ndarray
    sqrt_det: np.ndarray
    grad: tuple[np.ndarray, np.ndarray]

    def to_csv(self, path, chart: Chart):
        A, B = chart.mesh()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["a", "b", "W", "theta", "h_aa", "h_ab", "h_bb", "H", "normA2"])
            for idx in np.ndindex(A.shape):
                row = [A[idx], B[idx], self.W[idx], self.theta[idx], self.h[idx][0, 0], self.h[idx][0, 1], self.h[idx][1, 1], self.H[idx], self.normA2[idx]]
                w.writerow([repr(float(x)) for x in row])


def node_geometry(surface: WarpedSurface, a_nodes: np.ndarray, d: Derivatives) -> ShapeOperatorField:
    """Pointwise shape operator from derivatives; ``a_nodes`` broadcasts against them."""
    with np.errstate(invalid="ignore"):
        return _node_geometry(surface, a_nodes, d)


def _node_geometry(surface, a_nodes, d):
    A = np.broadcast_to(np.asarray(a_nodes, dtype=float), d.ua.shape)
    h = surface.h(A)
    hp = surface.h_prime(A)
    h2 = h * h
    grad2 = d.ua**2 + d.ub**2 / h2
    W = np.sqrt(1.0 + grad2)
    theta = 1.0 / W
    hess_aa = d.uaa
    hess_ab = d.uab - (hp / h) * d.ub
    hess_bb = d.ubb + h * hp * d.ua
    hij = -np.stack([np.stack([hess_aa, hess_ab], -1), np.stack([hess_ab, hess_bb], -1)], -2) / W[..., None, None]
    g11 = 1.0 + d.ua**2
    g12 = d.ua * d.ub
    g22 = h2 + d.ub**2
    det = g11 * g22 - g12 * g12
    g = np.stack([np.stack([g11, g12], -1), np.stack([g12, g22], -1)], -2)
    g_inv = np.stack([np.stack([g22, -g12], -1), np.stack([-g12, g11], -1)], -2) / det[..., None, None]
    shape = np.einsum("...ik,...kj->...ij", g_inv, hij)
    H = np.einsum("...ii->...", shape)
    normA2 = np.einsum("...ij,...ji->...", shape, shape)
    return ShapeOperatorField(W, theta, hij, g, g_inv, H, normA2, np.sqrt(det), (d.ua, d.ub))


def _a_column(patch: GraphPatch) -> np.ndarray:
    return patch.a[:, None]


def angle_function(patch: GraphPatch, method: str = "auto") -> np.ndarray:
    """``Theta = 1 / sqrt(1 + u_a^2 + u_b^2 / h^2)`` at every node."""
    d = derivatives(patch, method)
    h = patch.surface.h(_a_column(patch))
    return 1.0 / np.sqrt(1.0 + d.ua**2 + d.ub**2 / h**2)


def shape_operator(patch: GraphPatch, method: str = "auto") -> ShapeOperatorField:
    """Second fundamental form, mean curvature and ``|A|^2`` at every node.

    Nodes without a full 3x3 stencil (grid method) carry NaN.
    """
    d = derivatives(patch, method)
    return node_geometry(patch.surface, _a_column(patch), d)


# --- divergence-form residuals ------------------------------------------------


def _surface_h(surface: WarpedSurface, a):
    return surface.h(np.asarray(a, dtype=float))


def divergence_term(patch_or_chart, values=None):
    """Conservative discretisation of ``div_sigma(Du / W)`` and the node ``W``.

    Fluxes live on half nodes; the gradient there is a one-sided difference
    across the face plus the average of the neighbouring transverse central
    differences.  Works with complex ``values`` (complex-step Jacobians).
    Returns ``(div, W_node)`` with NaN outside the 1-node margin.
    """
    if isinstance(patch_or_chart, GraphPatch):
        chart = patch_or_chart.chart
        v = _nan_values(patch_or_chart) if values is None else values
    else:
        chart = patch_or_chart
        v = values
    s = chart.surface
    a, da, db = chart.a, chart.da, chart.db
    a_half = 0.5 * (a[1:] + a[:-1])
    hh = _surface_h(s, a_half)[:, None]
    hn = _surface_h(s, a[1:-1])[:, None]

    ua_f = (v[1:, 1:-1] - v[:-1, 1:-1]) / da
    ubc = (v[:, 2:] - v[:, :-2]) / (2 * db)
    ub_f = 0.5 * (ubc[1:] + ubc[:-1])
    Fa = hh * ua_f / np.sqrt(1.0 + ua_f**2 + ub_f**2 / hh**2)

    ub_g = (v[1:-1, 1:] - v[1:-1, :-1]) / db
    uac = (v[2:, :] - v[:-2, :]) / (2 * da)
    ua_g = 0.5 * (uac[:, 1:] + uac[:, :-1])
    Fb = ub_g / (hn * np.sqrt(1.0 + ua_g**2 + ub_g**2 / hn**2))

    div = np.full(v.shape, np.nan, dtype=np.result_type(v, float))
    W = np.full(v.shape, np.nan, dtype=np.result_type(v, float))
    div[1:-1, 1:-1] = ((Fa[1:] - Fa[:-1]) / da + (Fb[:, 1:] - Fb[:, :-1]) / db) / hn
    ua_c = uac[:, 1:-1]
    ub_c = ubc[1:-1, :]
    W[1:-1, 1:-1] = np.sqrt(1.0 + ua_c**2 + ub_c**2 / hn**2)
    return div, W


def _analytic_divergence(patch: GraphPatch):
    """``div(Du/W) = (Lap_sigma u - Hess(Du, Du) / W^2) / W`` from closed-form derivatives."""
    d = derivatives(patch, "analytic")
    A = np.broadcast_to(_a_column(patch), d.ua.shape)
    s = patch.surface
    h, hp = s.h(A), s.h_prime(A)
    k = hp / h
    ua, ub = d.ua, d.ub
    W2 = 1.0 + ua**2 + ub**2 / h**2
    lap = d.uaa + k * ua + d.ubb / h**2
    hess_ab = d.uab - k * ub
    hess_bb = d.ubb + h * hp * ua
    ub_up = ub / h**2
    hess_grad = d.uaa * ua**2 + 2 * hess_ab * ua * ub_up + hess_bb * ub_up**2
    W = np.sqrt(W2)
    return (lap - hess_grad / W2) / W, W


def _pick(patch: GraphPatch, method: str):
    if method == "auto":
        method = "analytic" if patch.closed_form is not None else "grid"
    if method == "analytic":
        div, W = _analytic_divergence(patch)
    elif method == "grid":
        div, W = divergence_term(patch)
    else:
        raise ValueError(f"unknown method {method!r}")
    out_mask = patch.mask != INTERIOR
    return div, W, out_mask


def translator_residual(patch: GraphPatch, method: str = "auto") -> np.ndarray:
    """``div(Du/W) - 1/W`` on interior nodes (NaN elsewhere)."""
    div, W, out = _pick(patch, method)
    res = div - 1.0 / W
    res[out] = np.nan
    return res


def minimal_residual(patch: GraphPatch, method: str = "auto") -> np.ndarray:
    """``div(Du/W)`` on interior nodes."""
    div, _, out = _pick(patch, method)
    res = np.array(div, dtype=float)
    res[out] = np.nan
    return res


def cmc_residual(patch: GraphPatch, H0: float, method: str = "auto") -> np.ndarray:
    """``div(Du/W) + H0``; vanishes when ``H = -div(Du/W) = H0``."""
    div, _, out = _pick(patch, method)
    res = div + H0
    res[out] = np.nan
    return res


# --- second-order operators on the graph ---------------------------------------


def laplace_beltrami(patch: GraphPatch, phi: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami operator of the induced metric ``g = sigma + du^2`` applied to ``phi``.

    Divergence form ``(1/sqrt g) d_i (sqrt g g^ij d_j phi)`` with the metric
    coefficients evaluated on half nodes.
    """
    chart = patch.chart
    s = chart.surface
    v = _nan_values(patch)
    a, da, db = chart.a, chart.da, chart.db
    a_half = 0.5 * (a[1:] + a[:-1])
    hh = _surface_h(s, a_half)[:, None]
    hn = _surface_h(s, a[1:-1])[:, None]

    def coeffs(ua, ub, h):
        g11 = 1.0 + ua**2
        g12 = ua * ub
        g22 = h**2 + ub**2
        det = g11 * g22 - g12**2
        sq = np.sqrt(det)
        return sq * g22 / det, -sq * g12 / det, sq * g11 / det

    # faces normal to a
    ua_f = (v[1:, 1:-1] - v[:-1, 1:-1]) / da
    ubc = (v[:, 2:] - v[:, :-2]) / (2 * db)
    ub_f = 0.5 * (ubc[1:] + ubc[:-1])
    c11, c12, _ = coeffs(ua_f, ub_f, hh)
    pa = (phi[1:, 1:-1] - phi[:-1, 1:-1]) / da
    pbc = (phi[:, 2:] - phi[:, :-2]) / (2 * db)
    pb = 0.5 * (pbc[1:] + pbc[:-1])
    Fa = c11 * pa + c12 * pb

    # faces normal to b
    ub_g = (v[1:-1, 1:] - v[1:-1, :-1]) / db
    uac = (v[2:, :] - v[:-2, :]) / (2 * da)
    ua_g = 0.5 * (uac[:, 1:] + uac[:, :-1])
    _, d12, d22 = coeffs(ua_g, ub_g, hn)
    qb = (phi[1:-1, 1:] - phi[1:-1, :-1]) / db
    qac = (phi[2:, :] - phi[:-2, :]) / (2 * da)
    qa = 0.5 * (qac[:, 1:] + qac[:, :-1])
    Fb = d12 * qa + d22 * qb

    ua_c = uac[:, 1:-1]
    ub_c = ubc[1:-1, :]
    sq_node = hn * np.sqrt(1.0 + ua_c**2 + ub_c**2 / hn**2)
    out = np.full(v.shape, np.nan)
    out[1:-1, 1:-1] = ((Fa[1:] - Fa[:-1]) / da + (Fb[:, 1:] - Fb[:, :-1]) / db) / sq_node
    return out


def _central_gradient(patch: GraphPatch, f: np.ndarray):
    da, db = patch.chart.da, patch.chart.db
    fa = np.full(f.shape, np.nan)
    fb = np.full(f.shape, np.nan)
    fa[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2 * da)
    fb[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2 * db)
    return fa, fb


def vertical_gradient_pairing(field: ShapeOperatorField, fa, fb) -> np.ndarray:
    """``<grad f, d_t> = g^ij f_i u_j``."""
    ua, ub = field.grad
    gi = field.g_inv
    return gi[..., 0, 0] * fa * ua + gi[..., 0, 1] * (fa * ub + fb * ua) + gi[..., 1, 1] * fb * ub


def ricci_term(patch: GraphPatch, field: ShapeOperatorField) -> np.ndarray:
    s = patch.surface
    K = np.broadcast_to(-s.h_second(_a_column(patch)) / s.h(_a_column(patch)), field.theta.shape)
    return K * (1.0 - field.theta**2)


def jacobi_apply(patch: GraphPatch, field: ShapeOperatorField, phi: np.ndarray, *, require_margin: bool = True) -> np.ndarray:
    """Stability operator ``L phi = Lap phi + (|A|^2 + Ric(v,v)) phi + <grad phi, d_t>``.

    Values are NaN where the stencil is not available (a 2-node margin).
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != field.theta.shape:
        raise StencilError("phi must be sampled on the patch nodes")
    if require_margin and min(phi.shape) < 5:
        raise StencilError("jacobi_apply needs a 2-node margin")
    lap = laplace_beltrami(patch, phi)
    pa, pb = _central_gradient(patch, phi)
    out = lap + (field.normA2 + ricci_term(patch, field)) * phi + vertical_gradient_pairing(field, pa, pb)
    out[:2, :] = out[-2:, :] = np.nan
    out[:, :2] = out[:, -2:] = np.nan
    return out


def graphic_identity_residual(patch: GraphPatch) -> np.ndarray:
    """``Lap Theta + (|A|^2 + Ric(v,v)) Theta - <grad H, d_t>``; vanishes on every C^2 graph."""
    if min(patch.values.shape) < 5:
        raise StencilError("graphic identity needs a 2-node margin")
    field = shape_operator(patch, "grid")
    lap = laplace_beltrami(patch, field.theta)
    Ha, Hb = _central_gradient(patch, field.H)
    out = lap + (field.normA2 + ricci_term(patch, field)) * field.theta - vertical_gradient_pairing(field, Ha, Hb)
    out[:2, :] = out[-2:, :] = np.nan
    out[:, :2] = out[:, -2:] = np.nan
    return out


# --- Dirichlet solver ------------------------------------------------------------


def _sigma_laplacian(chart: Chart, unknown: np.ndarray):
    """Five-point ``Lap_sigma`` restricted to the unknown nodes (sparse, with boundary columns)."""
    na, nb = chart.na, chart.nb
    da, db = chart.da, chart.db
    s = chart.surface
    a = chart.a
    h = _surface_h(s, a)
    hp = s.h_prime(a)
    idx = -np.ones((na, nb), dtype=np.int64)
    idx[unknown] = np.arange(int(unknown.sum()))
    rows, cols, vals = [], [], []
    brows, bcols, bvals = [], [], []
    I, J = np.nonzero(unknown)
    k = hp[I] / h[I]
    coef = {
        (1, 0): 1 / da**2 + k / (2 * da),
        (-1, 0): 1 / da**2 - k / (2 * da),
        (0, 1): 1 / (h[I] ** 2 * db**2),
        (0, -1): 1 / (h[I] ** 2 * db**2),
    }
    rid = idx[I, J]
    rows.append(rid)
    cols.append(rid)
    vals.append(-2 / da**2 - 2 / (h[I] ** 2 * db**2))
    for (di, dj), c in coef.items():
        c = np.broadcast_to(c, I.shape)
        ni, nj = I + di, J + dj
        nid = idx[ni, nj]
        inner = nid >= 0
        rows.append(rid[inner]); cols.append(nid[inner]); vals.append(c[inner])
        brows.append(rid[~inner]); bcols.append(ni[~inner] * nb + nj[~inner]); bvals.append(c[~inner])
    n = int(unknown.sum())
    L = sps.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    Bm = sps.csr_matrix((np.concatenate(bvals), (np.concatenate(brows), np.concatenate(bcols))), shape=(n, na * nb))
    return L, Bm


def harmonic_extension(chart: Chart, boundary: np.ndarray, unknown: np.ndarray) -> np.ndarray:
    """Solve ``Lap_sigma u = 0`` on the unknown nodes with the given boundary values."""
    L, Bm = _sigma_laplacian(chart, unknown)
    full = np.where(unknown, 0.0, boundary)
    rhs = -Bm @ full.ravel()
    out = np.array(boundary, dtype=float)
    out[unknown] = spla.spsolve(L.tocsc(), rhs)
    return out


def _translator_operator(chart: Chart, v):
    div, W = divergence_term(chart, v)
    with np.errstate(invalid="ignore", divide="ignore"):
        return div - 1.0 / W


def _colored_jacobian(chart: Chart, v: np.ndarray, unknown: np.ndarray, step: float = 1e-30):
    """Exact sparse Jacobian by complex-step differentiation, 9 colours for the 3x3 stencil."""
    na, nb = v.shape
    idx = -np.ones((na, nb), dtype=np.int64)
    idx[unknown] = np.arange(int(unknown.sum()))
    I, J = np.nonzero(unknown)
    rows, cols, vals = [], [], []
    ii, jj = np.meshgrid(np.arange(na), np.arange(nb), indexing="ij")
    for ci in range(3):
        for cj in range(3):
            color = unknown & (ii % 3 == ci) & (jj % 3 == cj)
            if not color.any():
                continue
            vc = v.astype(complex)
            vc[color] += 1j * step
            F = _translator_operator(chart, vc).imag / step
            # each residual row sees exactly one perturbed node of this colour
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ni, nj = I + di, J + dj
                    ok = (ni >= 0) & (ni < na) & (nj >= 0) & (nj < nb)
                    sel = np.zeros(I.shape, bool)
                    sel[ok] = color[ni[ok], nj[ok]]
                    rows.append(idx[I[sel], J[sel]])
                    cols.append(idx[ni[sel], nj[sel]])
                    vals.append(F[I[sel], J[sel]])
    n = int(unknown.sum())
    return sps.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def solve_dirichlet_translator(
    chart: Chart,
    boundary_values,
    tol: float = 1e-10,
    *,
    mask: np.ndarray | None = None,
    initial: np.ndarray | None = None,
    max_iters: int = 50,
    max_halvings: int = 30,
    name: str = "dirichlet-translator",
) -> GraphPatch:
    """Damped Newton solve of ``div(Du/W) = 1/W`` with Dirichlet data.

    ``boundary_values`` is an array on the grid or a callable ``f(A, B)``; only
    its values on non-interior nodes are used.  The first iterate is the
    harmonic extension of the boundary data.

    Raises
    ------
    NewtonDivergenceError
        No convergence within ``max_iters`` or the line search failed.
    """
    A, B = chart.mesh()
    bv = boundary_values(A, B) if callable(boundary_values) else np.asarray(boundary_values, dtype=float)
    bv = np.broadcast_to(np.asarray(bv, dtype=float), A.shape).copy()
    m = default_mask(chart) if mask is None else np.array(mask, dtype=np.int8)
    if np.any(m == EXCLUDED):
        raise StencilError("the Dirichlet solver does not support excluded nodes")
    unknown = m == INTERIOR
    if not unknown.any():
        raise ValueError("chart has no interior nodes")
    fixed = ~unknown
    if not np.all(np.isfinite(bv[fixed])):
        raise ValueError("boundary values must be finite on Dirichlet nodes")
    v = harmonic_extension(chart, bv, unknown) if initial is None else np.where(unknown, initial, bv)

    def resid(x):
        return _translator_operator(chart, x)[unknown]

    F = resid(v)
    norm = float(np.max(np.abs(F)))
    history = [norm]
    for it in range(max_iters):
        if norm < tol:
            break
        Jm = _colored_jacobian(chart, v, unknown)
        try:
            delta = spla.spsolve(Jm.tocsc(), -F)
        except RuntimeError as exc:  # pragma: no cover - singular factorisation
            raise NewtonDivergenceError(f"singular Jacobian: {exc}", norm) from exc
        if not np.all(np.isfinite(delta)):
            raise NewtonDivergenceError("singular Jacobian", norm)
        lam = 1.0
        l2 = float(np.linalg.norm(F))
        for _ in range(max_halvings + 1):
            trial = v.copy()
            trial[unknown] += lam * delta
            Ft = resid(trial)
            if np.all(np.isfinite(Ft)) and float(np.linalg.norm(Ft)) < l2:
                break
            lam *= 0.5
        else:
            raise NewtonDivergenceError("line search failed", norm)
        v, F = trial, Ft
        norm = float(np.max(np.abs(F)))
        history.append(norm)
    else:
        if norm >= tol:
            raise NewtonDivergenceError(f"Newton did not converge in {max_iters} iterations", norm)
    patch = GraphPatch(chart, v, m, name=name)
    patch.meta["newton_history"] = history
    return patch
