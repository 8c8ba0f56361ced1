"""Weighted product metric ``e^t (sigma + dt^2)`` and translators as its minimal surfaces.

The conformal factor is ``e^{2f}`` with ``f = t / 2``.  A surface in ``N x R``
with upward normal ``v`` has ``df(v) = Theta / 2``, so the mean curvature in the
weighted metric is ``e^{-t/2} (H + Theta)``, which vanishes on translators.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .graph_geometry import GraphPatch, ShapeOperatorField, jacobi_apply, vertical_gradient_pairing
from .warped_surface import WarpedSurface, gauss_curvature

__all__ = [
    "Plane",
    "WeightedMetricContext",
    "weighted_sectional",
    "weighted_metric",
    "ConformalForms",
    "conformal_second_form",
    "tracefree_split",
    "weighted_mean_curvature",
    "SecondVariation",
    "second_variation_check",
    "bump",
    "random_test_function",
    "CollarError",
]


class Plane(enum.Enum):
    HORIZONTAL12 = "Horizontal12"
    VERTICAL13 = "Vertical13"
    VERTICAL23 = "Vertical23"

    @classmethod
    def parse(cls, value) -> "Plane":
        if isinstance(value, cls):
            return value
        for p in cls:
            if p.value.lower() == str(value).lower() or p.name.lower() == str(value).lower():
                return p
        raise ValueError(f"unknown plane {value!r}")


class CollarError(ValueError):
    """The test function is not supported away from the patch boundary."""


@dataclass(frozen=True)
class WeightedMetricContext:
    """The metric ``e^{t - t0} (sigma + dt^2)`` over a warped surface.

    ``t0`` recentres heights; it multiplies the weight by the positive
    constant ``e^{-t0}`` and nothing else.
    """

    surface: WarpedSurface
    t0: float = 0.0

    def weight(self, t):
        return np.exp(np.asarray(t, dtype=float) - self.t0)


def weighted_sectional(ctx: WeightedMetricContext, r: float, t: float, plane="Horizontal12") -> float:
    """Sectional curvature of a coordinate plane for ``e^{t-t0}(sigma + dt^2)``.

    Horizontal planes get ``e^{-t}(K - 1/4)`` rescaled by ``e^{t0}``; planes
    containing ``d_t`` are flat.
    """
    plane = Plane.parse(plane)
    ctx.surface.check_radius(r)
    if plane is not Plane.HORIZONTAL12:
        return 0.0
    base = math.exp(-t) * (float(gauss_curvature(ctx.surface, r)) - 0.25)
    return base if ctx.t0 == 0.0 else math.exp(ctx.t0) * base


def weighted_metric(ctx: WeightedMetricContext):
    """Coordinate metric ``x = (r, theta, t) -> 3x3`` for finite-difference oracles."""
    s = ctx.surface

    def metric(x):
        r, _, t = x
        w = math.exp(t - ctx.t0)
        return np.diag([w, w * float(s.h(r)) ** 2, w])

    return metric


@dataclass(frozen=True)
class ConformalForms:
    lower: np.ndarray
    mixed: np.ndarray
    H: float
    H_tilde: float


def _check_spd(g):
    g = np.asarray(g, dtype=float)
    if g.shape[-2:] != (2, 2) and g.shape[-1] != g.shape[-2]:
        raise ValueError("metric must be square")
    if not np.allclose(g, np.swapaxes(g, -1, -2), rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(g))))):
        raise ValueError("metric is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise ValueError("metric is not positive definite") from exc
    return g


def conformal_second_form(h_ij, g_ij, f_value: float, df_normal: float) -> ConformalForms:
    """Second fundamental form after the conformal change ``g -> e^{2f} g``.

    ``lower = e^f (h + df(v) g)`` and ``mixed = e^{-f} (h_i^j + df(v) delta)``.
    The trace identity ``H~ = e^{-f}(H + n df(v))`` is checked before returning.
    """
    g = _check_spd(g_ij)
    h = np.asarray(h_ij, dtype=float)
    n = g.shape[-1]
    ef = math.exp(f_value)
    lower = ef * (h + df_normal * g)
    mixed_old = np.linalg.solve(g, h)
    mixed = (mixed_old + df_normal * np.eye(n)) / ef
    H = float(np.trace(mixed_old))
    H_tilde = float(np.trace(mixed))
    expected = (H + n * df_normal) / ef
    # recomputing from the lower form with the new metric e^{2f} g must agree
    from_lower = float(np.trace(np.linalg.solve(ef * ef * g, lower)))
    scale = max(1.0, abs(expected))
    if abs(H_tilde - expected) > 1e-10 * scale or abs(from_lower - expected) > 1e-10 * scale:
        raise ArithmeticError("conformal trace identity failed")
    return ConformalForms(lower, mixed, H, H_tilde)


def tracefree_split(mixed) -> tuple[float, float]:
    """``(|trace-free part|^2, trace)`` of a mixed shape operator."""
    m = np.asarray(mixed, dtype=float)
    n = m.shape[-1]
    tr = float(np.trace(m))
    tf = m - tr / n * np.eye(n)
    return float(np.einsum("ij,ji->", tf, tf)), tr


def weighted_mean_curvature(patch: GraphPatch, field: ShapeOperatorField) -> np.ndarray:
    """``e^{-u/2} (H + Theta)`` per node; ``u`` includes the patch offset."""
    return np.exp(-0.5 * patch.u) * (field.H + field.theta)


@dataclass(frozen=True)
class SecondVariation:
    lhs: float
    rhs: float
    rel_err: float
    translator_defect: float

    def as_tuple(self):
        return self.lhs, self.rhs, self.rel_err


def _pairwise_sum(x: np.ndarray) -> float:
    # np.sum uses pairwise summation on contiguous float arrays; keep order fixed
    return float(np.sum(np.ascontiguousarray(x, dtype=float).ravel()))


def second_variation_check(patch: GraphPatch, field: ShapeOperatorField, eta, *, collar: int = 2) -> SecondVariation:
    """Discrete form of ``-int phi L phi e^u dmu = int Theta^2 |grad eta|^2 e^u dmu``.

    ``phi = eta * Theta``.  Both sides use the node-centred rule with weights
    ``sqrt(det g) da db``; ``eta`` must vanish on a ``collar``-node band.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != field.theta.shape:
        raise ValueError("eta must live on the patch nodes")
    band = np.ones(eta.shape, bool)
    band[collar:-collar, collar:-collar] = False
    if np.any(eta[band] != 0.0):
        raise CollarError(f"eta must vanish on the {collar}-node collar")
    da, db = patch.chart.da, patch.chart.db
    inner = (slice(collar, -collar), slice(collar, -collar))
    weight = (np.exp(patch.u) * field.sqrt_det * da * db)[inner]
    theta = field.theta
    phi = eta * theta
    Lphi = jacobi_apply(patch, field, phi)
    lhs = -_pairwise_sum((phi * Lphi)[inner] * weight)
    ea = np.zeros_like(eta)
    eb = np.zeros_like(eta)
    ea[1:-1, :] = (eta[2:, :] - eta[:-2, :]) / (2 * da)
    eb[:, 1:-1] = (eta[:, 2:] - eta[:, :-2]) / (2 * db)
    gi = field.g_inv
    grad2 = gi[..., 0, 0] * ea * ea + 2 * gi[..., 0, 1] * ea * eb + gi[..., 1, 1] * eb * eb
    rhs = _pairwise_sum((theta**2 * grad2)[inner] * weight)
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-30)
    defect = float(np.nanmax(np.abs(field.H + field.theta)[inner]))
    return SecondVariation(lhs, rhs, rel, defect)


def bump(patch: GraphPatch, *, collar: int = 2, margin: float = 0.15, power: int = 4) -> np.ndarray:
    """Smooth tensor-product bump ``sin(pi s)^power`` on a fixed physical sub-rectangle.

    The support leaves a ``margin`` fraction of the chart on every side, so the
    same function is sampled on every grid of a refinement study; it must also
    clear the ``collar``-node band.
    """
    c = patch.chart
    if margin * (c.na - 1) < collar or margin * (c.nb - 1) < collar:
        raise CollarError("grid too coarse for the bump support to clear the collar")
    sa = np.clip(((c.a - c.a0) / (c.a1 - c.a0) - margin) / (1 - 2 * margin), 0.0, 1.0)
    sb = np.clip(((c.b - c.b0) / (c.b1 - c.b0) - margin) / (1 - 2 * margin), 0.0, 1.0)
    fa = np.where((sa > 0) & (sa < 1), np.sin(np.pi * sa) ** power, 0.0)
    fb = np.where((sb > 0) & (sb < 1), np.sin(np.pi * sb) ** power, 0.0)
    return np.outer(fa, fb)


def random_test_function(patch: GraphPatch, rng: np.random.Generator, *, modes: int = 3, collar: int = 2) -> np.ndarray:
    """Random smooth function: low Fourier modes times :func:`bump`."""
    c = patch.chart
    sa = (c.a - c.a0) / (c.a1 - c.a0)
    sb = (c.b - c.b0) / (c.b1 - c.b0)
    A, B = np.meshgrid(sa, sb, indexing="ij")
    coef = rng.normal(size=(modes, modes, 2))
    field = np.zeros_like(A)
    for i in range(modes):
        for j in range(modes):
            field += coef[i, j, 0] * np.cos(np.pi * (i * A + j * B)) + coef[i, j, 1] * np.sin(np.pi * (i * A - j * B))
    return field * bump(patch, collar=collar)
