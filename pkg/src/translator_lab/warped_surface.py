"""Rotationally symmetric surfaces ``dr^2 + h(r)^2 dtheta^2`` and their intrinsic geometry.

A :class:`WarpedSurface` bundles the warping profile ``h`` with its first two
derivatives.  Besides the three space forms there are two extra flavours:

* ``custom`` surfaces built from a sympy expression or from tabulated
  ``(r, h)`` samples (natural cubic spline), and
* the ``cartesian`` chart, ``h == 1``, which turns the same machinery into the
  flat metric ``dx^2 + dy^2`` so that classical closed-form graphs in the plane
  can be used as test assets.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "ChartError",
    "WarpedSurface",
    "euclidean",
    "spherical",
    "hyperbolic",
    "cartesian",
    "custom_expression",
    "custom_tabulated",
    "flared",
    "catalog",
    "load_surface",
    "surface_from_config",
    "gauss_curvature",
    "circle_geodesic_curvature",
    "metric_components",
    "ricci_normal",
]

# Below this radius h'/h is replaced by its Taylor expansion at the pole.
POLE_GUARD = 1e-4


class ChartError(ValueError):
    """Raised when a radius lies outside the chart of a surface."""


ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class WarpedSurface:
    """Warped-product surface ``sigma = dr^2 + h(r)^2 dtheta^2``.

    Attributes
    ----------
    kind : str
        One of ``euclidean``, ``spherical``, ``hyperbolic``, ``custom``,
        ``cartesian``.
    h, h_prime, h_second : callable
        Vectorised profile and derivatives.  ``h_second`` may be ``None`` for
        custom profiles that do not provide it.
    r_max : float
        Upper end of the radial chart; ``math.inf`` means unbounded.
    curvature_bound_k : float
        A number ``k`` with ``|K| + 1/4 <= k^2`` on the working subdomain.
    r_min : float
        Lower end of the chart (``0`` for surfaces with a pole).
    has_pole : bool
        Whether ``h(0) = 0, h'(0) = 1`` holds; false for the Cartesian chart.
    monotone_limit : float
        Largest radius up to which ``h' > 0``.
    """

    kind: str
    h: ArrayFn
    h_prime: ArrayFn
    h_second: ArrayFn | None
    r_max: float
    curvature_bound_k: float
    name: str = ""
    r_min: float = 0.0
    has_pole: bool = True
    monotone_limit: float = math.inf
    params: dict = field(default_factory=dict, compare=False)
    injectivity_radius: float | None = None

    @property
    def label(self) -> str:
        return self.name or self.kind

    @property
    def pole_curvature(self) -> float:
        """Gauss curvature at the pole, used by the series launch of radial solvers."""
        if not self.has_pole:
            return 0.0
        r = 1e-3
        if self.h_second is None:
            raise ChartError(f"surface {self.label!r} has no second derivative")
        # h'' / h is smooth at the pole; two samples extrapolate r -> 0.
        k1 = -float(self.h_second(np.float64(r))) / float(self.h(np.float64(r)))
        k2 = -float(self.h_second(np.float64(2 * r))) / float(self.h(np.float64(2 * r)))
        return (4 * k1 - k2) / 3

    def check_radius(self, r, *, finite_chart: bool = False):
        r_arr = np.asarray(r, dtype=float)
        if finite_chart and not math.isfinite(self.r_max):
            raise ChartError(f"surface {self.label!r} has an unbounded chart")
        if np.any(~np.isfinite(r_arr)):
            raise ChartError("radius is not finite")
        lo_bad = r_arr < self.r_min if not self.has_pole else r_arr <= self.r_min
        hi_bad = r_arr >= self.r_max if self.has_pole else r_arr > self.r_max
        if np.any(lo_bad) or np.any(hi_bad):
            raise ChartError(
                f"radius outside chart ({self.r_min}, {self.r_max}) of {self.label!r}"
            )
        return r_arr

    def kappa(self, r):
        """``h'(r)/h(r)`` with the pole guard, no chart validation (hot path)."""
        r = np.asarray(r, dtype=float)
        if not self.has_pole:
            return self.h_prime(r) / self.h(r)
        out = np.empty_like(r)
        small = r < POLE_GUARD
        big = ~small
        if np.any(big):
            out[big] = self.h_prime(r[big]) / self.h(r[big])
        if np.any(small):
            rs = r[small]
            with np.errstate(divide="ignore"):
                out[small] = 1.0 / rs - self.pole_curvature * rs / 3.0
        return out if out.ndim else out[()]

    def kappa_prime(self, r):
        """Derivative of ``h'/h``; equals ``-K - (h'/h)^2``."""
        return -self._gauss(r) - np.asarray(self.kappa(r)) ** 2

    def _gauss(self, r):
        if self.h_second is None:
            raise ChartError(f"surface {self.label!r} has no second derivative")
        r = np.asarray(r, dtype=float)
        return -self.h_second(r) / self.h(r)

    def area_integral(self, r):
        """``int_0^r h(s) ds`` (closed form for the catalog, quadrature otherwise)."""
        integral = self.params.get("h_integral")
        if integral is not None:
            return integral(np.asarray(r, dtype=float))
        from scipy.integrate import quad

        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        vals = np.array(
            [quad(lambda s: float(self.h(np.float64(s))), self.r_min, x, epsabs=1e-14, epsrel=1e-13)[0] for x in r_arr]
        )
        return vals if np.ndim(r) else vals[0]


def _const(value: float) -> ArrayFn:
    return lambda r: np.full_like(np.asarray(r, dtype=float), value)


def euclidean(r_max: float = math.inf) -> WarpedSurface:
    return WarpedSurface(
        kind="euclidean",
        h=lambda r: np.asarray(r, dtype=float) * 1.0,
        h_prime=_const(1.0),
        h_second=_const(0.0),
        r_max=r_max,
        curvature_bound_k=0.5,
        name="euclidean",
        params={"h_integral": lambda r: 0.5 * r**2},
    )


def spherical(r_max: float = math.pi) -> WarpedSurface:
    """Round unit sphere in geodesic polar coordinates.

    The chart reaches the antipodal point by default; ``h' > 0`` only up to
    ``pi/2`` (recorded as ``monotone_limit``).
    """
    if r_max > math.pi:
        raise ChartError("spherical chart cannot extend past the antipode")
    return WarpedSurface(
        kind="spherical",
        h=np.sin,
        h_prime=np.cos,
        h_second=lambda r: -np.sin(r),
        r_max=r_max,
        curvature_bound_k=math.sqrt(1.25),
        name="spherical",
        monotone_limit=math.pi / 2,
        params={"h_integral": lambda r: 1.0 - np.cos(r)},
        injectivity_radius=math.pi,
    )


def hyperbolic(r_max: float = math.inf) -> WarpedSurface:
    return WarpedSurface(
        kind="hyperbolic",
        h=np.sinh,
        h_prime=np.cosh,
        h_second=np.sinh,
        r_max=r_max,
        curvature_bound_k=math.sqrt(1.25),
        name="hyperbolic",
        params={"h_integral": lambda r: np.cosh(r) - 1.0},
    )


def cartesian(x_range: tuple[float, float] = (-math.inf, math.inf)) -> WarpedSurface:
    """Flat Cartesian chart ``dx^2 + dy^2`` expressed as a warped product with ``h == 1``."""
    return WarpedSurface(
        kind="cartesian",
        h=_const(1.0),
        h_prime=_const(0.0),
        h_second=_const(0.0),
        r_max=x_range[1],
        r_min=x_range[0],
        curvature_bound_k=0.5,
        name="cartesian",
        has_pole=False,
        params={},
    )


def custom_expression(
    expr: str,
    *,
    r_max: float = math.inf,
    curvature_bound_k: float | None = None,
    name: str = "custom",
    working_radius: float | None = None,
) -> WarpedSurface:
    """Surface whose profile is a sympy-parsable expression in ``r``.

    Derivatives are taken symbolically.  When ``curvature_bound_k`` is not
    given it is estimated on ``(0, working_radius]`` (default ``min(r_max, 5)``).
    """
    import sympy as sp

    r = sp.Symbol("r", real=True)
    h_sym = sp.sympify(expr, locals={"r": r})
    d1 = sp.diff(h_sym, r)
    d2 = sp.diff(d1, r)
    h = sp.lambdify(r, h_sym, "numpy")
    hp = sp.lambdify(r, d1, "numpy")
    hpp = sp.lambdify(r, d2, "numpy")

    def vec(fn):
        return lambda x: np.asarray(fn(np.asarray(x, dtype=float)), dtype=float) + 0.0 * np.asarray(x, dtype=float)

    params = {"expression": str(h_sym)}
    integral = sp.integrate(h_sym, (r, 0, r))
    if not integral.has(sp.Integral):
        params["h_integral"] = vec(sp.lambdify(r, integral, "numpy"))

    surface = WarpedSurface(
        kind="custom",
        h=vec(h),
        h_prime=vec(hp),
        h_second=vec(hpp),
        r_max=r_max,
        curvature_bound_k=curvature_bound_k if curvature_bound_k is not None else 1.0,
        name=name,
        params=params,
    )
    monotone = _monotone_limit(surface, r_max)
    if curvature_bound_k is None:
        top = working_radius or (min(r_max, 5.0) if math.isfinite(r_max) else 5.0)
        curvature_bound_k = _estimate_k(surface, top)
    return _replace(surface, curvature_bound_k=curvature_bound_k, monotone_limit=monotone)


def custom_tabulated(
    r_samples,
    h_samples,
    *,
    curvature_bound_k: float | None = None,
    name: str = "tabulated",
) -> WarpedSurface:
    """Surface from tabulated samples, evaluated through a natural cubic spline."""
    from scipy.interpolate import CubicSpline

    r_samples = np.asarray(r_samples, dtype=float)
    h_samples = np.asarray(h_samples, dtype=float)
    if r_samples.ndim != 1 or r_samples.shape != h_samples.shape or r_samples.size < 4:
        raise ValueError("need at least four (r, h) samples")
    if np.any(np.diff(r_samples) <= 0):
        raise ValueError("tabulated radii must be strictly increasing")
    spline = CubicSpline(r_samples, h_samples, bc_type="natural")
    d1, d2 = spline.derivative(1), spline.derivative(2)
    anti = spline.antiderivative()
    r0 = r_samples[0]
    surface = WarpedSurface(
        kind="custom",
        h=lambda x: spline(np.asarray(x, dtype=float)),
        h_prime=lambda x: d1(np.asarray(x, dtype=float)),
        h_second=lambda x: d2(np.asarray(x, dtype=float)),
        r_max=float(r_samples[-1]),
        curvature_bound_k=1.0,
        name=name,
        has_pole=bool(abs(h_samples[0]) < 1e-12 and r0 == 0.0),
        r_min=float(r0),
        params={"h_integral": lambda x: anti(np.asarray(x, dtype=float)) - anti(r0), "spacing": float(np.min(np.diff(r_samples)))},
    )
    monotone = _monotone_limit(surface, surface.r_max)
    if curvature_bound_k is None:
        curvature_bound_k = _estimate_k(surface, surface.r_max * (1 - 1e-9))
    return _replace(surface, curvature_bound_k=curvature_bound_k, monotone_limit=monotone)


def flared(r_max: float = 3.0) -> WarpedSurface:
    """Surface with ``h = r exp(r^2/2)``.

    Its coordinate circles have curvature ``r + 1/r``, which increases for
    ``r > 1``; this is the regime in which radial CMC graphs can blow up in
    height along a circle.
    """
    surface = custom_expression("r*exp(r**2/2)", r_max=r_max, name="flared")
    return _replace(surface, curvature_bound_k=math.sqrt(3.0 + r_max**2 + 0.25))


def _replace(surface: WarpedSurface, **changes) -> WarpedSurface:
    from dataclasses import replace

    return replace(surface, **changes)


def _monotone_limit(surface: WarpedSurface, r_max: float) -> float:
    top = r_max if math.isfinite(r_max) else 50.0
    lo = surface.r_min + 1e-6
    grid = np.linspace(lo, top * (1 - 1e-9), 4001)
    with np.errstate(all="ignore"):
        hp = surface.h_prime(grid)
    bad = np.nonzero(~(hp > 0))[0]
    if bad.size == 0:
        return r_max
    return float(grid[max(bad[0] - 1, 0)])


def _estimate_k(surface: WarpedSurface, top: float) -> float:
    grid = np.linspace(max(surface.r_min, 1e-3), top, 2001)
    with np.errstate(all="ignore"):
        K = surface._gauss(grid)
    K = K[np.isfinite(K)]
    return float(math.sqrt(np.max(np.abs(K)) + 0.25)) if K.size else 0.5


CATALOG = {
    "euclidean": euclidean,
    "spherical": spherical,
    "hyperbolic": hyperbolic,
    "cartesian": cartesian,
    "flared": flared,
}


def catalog(kind: str, **kwargs) -> WarpedSurface:
    try:
        factory = CATALOG[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown surface kind {kind!r}; choose from {sorted(CATALOG)}") from None
    return factory(**kwargs)


def surface_from_config(cfg: dict, base_dir: Path | None = None) -> WarpedSurface:
    """Build a surface from ``{kind, params, r_max, tabulated_profile_path}``."""
    kind = str(cfg.get("kind", "euclidean")).lower()
    params = dict(cfg.get("params") or {})
    if "r_max" in cfg and cfg["r_max"] is not None:
        params["r_max"] = float(cfg["r_max"])
    if kind != "custom":
        return catalog(kind, **params)
    path = cfg.get("tabulated_profile_path")
    if path:
        path = Path(path)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        r_vals, h_vals = _read_profile_csv(path)
        return custom_tabulated(r_vals, h_vals, name=cfg.get("name", path.stem))
    expr = params.pop("expression", None)
    if expr is None:
        raise ValueError("custom surface needs params.expression or tabulated_profile_path")
    return custom_expression(expr, name=cfg.get("name", "custom"), **params)


def _read_profile_csv(path: Path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header line
    arr = np.array(rows, dtype=float)
    return arr[:, 0], arr[:, 1]


def load_surface(path: str | Path) -> WarpedSurface:
    """Load a surface description from a TOML or JSON file."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        cfg = tomllib.loads(text.decode())
    else:
        cfg = json.loads(text)
    cfg = cfg.get("surface", cfg)
    return surface_from_config(cfg, base_dir=path.parent)


# --- operations -------------------------------------------------------------


def gauss_curvature(s: WarpedSurface, r):
    """Gauss curvature ``K = -h''/h`` of the surface at radius ``r``."""
    r = s.check_radius(r)
    if s.h_second is None:
        raise ChartError(f"surface {s.label!r} lacks a second derivative")
    out = -s.h_second(r) / s.h(r)
    return float(out) if np.ndim(out) == 0 else out


def circle_geodesic_curvature(s: WarpedSurface, r):
    """Curvature ``h'/h`` of the coordinate circle ``{r = const}`` (outward normal)."""
    r = s.check_radius(r)
    out = s.kappa(r)
    return float(out) if np.ndim(out) == 0 else out


def metric_components(s: WarpedSurface, r):
    """Return ``(g_rr, g_thetatheta) = (1, h^2)``."""
    r = s.check_radius(r)
    h = s.h(r)
    g_tt = h * h
    if np.ndim(g_tt) == 0:
        return 1.0, float(g_tt)
    return np.ones_like(g_tt), g_tt


def ricci_normal(s: WarpedSurface, r, theta_val):
    """``Ric(v, v)`` of ``N x R`` for a unit normal with vertical component ``theta_val``.

    For a product with a flat line factor only the horizontal part of ``v``
    sees curvature, giving ``K(r) (1 - theta^2)``.
    """
    theta_val = np.asarray(theta_val, dtype=float)
    if np.any(theta_val < 0) or np.any(theta_val > 1) or np.any(~np.isfinite(theta_val)):
        raise ValueError("angle function must lie in [0, 1]")
    K = gauss_curvature(s, r)
    out = K * (1.0 - theta_val**2)
    return float(out) if np.ndim(out) == 0 else out
