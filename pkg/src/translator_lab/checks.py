"""Check suites shared by the command line and the test-suite.

Every check returns a plain dict with at least ``check_name``, ``pass`` and
``status`` (``PASS``/``FAIL``/``INCONCLUSIVE``) so reports serialise directly.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import conformal_lab as cl
from . import graph_geometry as gg
from . import riemann_fd
from . import warped_surface as ws
from .assets import Asset

MIN_ORDER = 1.8
EXACT_FLOOR = 1e-12
ANALYTIC_TOL = 1e-10
HEMISPHERE_TOL = 1e-8


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def observed_orders(grids: Sequence[int], errors: Sequence[float]) -> list[float]:
    """Convergence orders between successive grids (spacing ratio from node counts)."""
    out = []
    for (n0, e0), (n1, e1) in zip(zip(grids, errors), zip(grids[1:], errors[1:])):
        if e0 <= 0 or e1 <= 0:
            out.append(float("inf"))
        else:
            out.append(math.log(e0 / e1) / math.log((n1 - 1) / (n0 - 1)))
    return out


def _window_max(patch: gg.GraphPatch, arr: np.ndarray, window) -> float:
    sel = np.isfinite(arr)
    if window is not None:
        A, B = patch.chart.mesh()
        (a0, a1), (b0, b1) = window
        sel &= (A >= a0) & (A <= a1) & (B >= b0) & (B <= b1)
    if not sel.any():
        raise ValueError("no nodes available for the check")
    return float(np.max(np.abs(arr[sel])))


def nested_errors(patches, arrays, window=None) -> list[float]:
    """Max error per grid, sampled at the coarsest grid's nodes.

    Grids are nested (``n - 1`` doubles), so injection compares the same
    physical points on every level; only points finite on all levels count.
    """
    n0a, n0b = arrays[0].shape
    sub = []
    for arr in arrays:
        ka, rem_a = divmod(arr.shape[0] - 1, n0a - 1)
        kb, rem_b = divmod(arr.shape[1] - 1, n0b - 1)
        if rem_a or rem_b:
            raise ValueError("grids must be nested (n - 1 must scale by an integer)")
        sub.append(np.abs(arr[::ka, ::kb]))
    common = np.all([np.isfinite(x) for x in sub], axis=0)
    if window is not None:
        A, B = patches[0].chart.mesh()
        (a0, a1), (b0, b1) = window
        common &= (A >= a0) & (A <= a1) & (B >= b0) & (B <= b1)
    if not common.any():
        raise ValueError("no common nodes for the refinement study")
    return [float(np.max(x[common])) for x in sub]


def _grid_study(name, asset, grids, fn, extra=None):
    patches = [asset.build(n) for n in grids]
    arrays = [fn(p) for p in patches]
    return _refinement(name, grids, nested_errors(patches, arrays, asset.check_window), extra)


def _refinement(name: str, grids, errors, extra=None) -> dict:
    grids = list(grids)
    errors = [float(e) for e in errors]
    exact = all(e < EXACT_FLOOR for e in errors)
    orders = observed_orders(grids, errors)
    finite_orders = [o for o in orders if math.isfinite(o)]
    order = min(finite_orders) if finite_orders else None
    ok = exact or (order is not None and order >= MIN_ORDER)
    rep = {
        "check_name": name,
        "grid": grids,
        "max_error": errors,
        "order_estimate": order,
        "orders": orders,
        "exact": exact,
        "pass": ok,
        "status": _status(ok),
    }
    if extra:
        rep.update(extra)
    return rep


def _residual_fn(asset: Asset):
    m = asset.mode
    if m.kind == "translator":
        return gg.translator_residual
    if m.kind == "minimal":
        return gg.minimal_residual
    return lambda p, method="auto": gg.cmc_residual(p, m.H0, method)


def residual_check(asset: Asset, grids: Sequence[int]) -> dict:
    """Residual of the asset's own equation: analytic when a closed form exists, else refinement."""
    fn = _residual_fn(asset)
    name = f"{asset.mode.kind}_residual"
    patch = asset.build(grids[-1])
    if patch.closed_form is not None:
        tol = HEMISPHERE_TOL if asset.name == "hemisphere" else ANALYTIC_TOL
        err = _window_max(patch, fn(patch, "analytic"), asset.check_window if asset.name == "hemisphere" else None)
        ok = err < tol
        return {"check_name": name, "grid": [grids[-1]], "method": "analytic", "max_error": [err], "tol": tol, "pass": ok, "status": _status(ok)}
    return _grid_study(name, asset, grids, lambda p: fn(p, "grid"), {"method": "grid"})


def theta_w_check(asset: Asset, grids: Sequence[int]) -> dict:
    patch = asset.build(grids[-1])
    f = gg.shape_operator(patch)
    err = _window_max(patch, f.theta * f.W - 1.0, None)
    th = f.theta[np.isfinite(f.theta)]
    ok = err < 1e-12 and bool(np.all((th > 0) & (th <= 1)))
    return {"check_name": "theta_times_w", "grid": [grids[-1]], "max_error": [err], "pass": ok, "status": _status(ok)}


def mean_curvature_consistency(asset: Asset, grids: Sequence[int]) -> dict:
    """Trace of the shape operator against minus the divergence-form mean curvature."""
    def field(p, method):
        return gg.shape_operator(p, method).H + gg.minimal_residual(p, method)

    patch = asset.build(grids[-1])
    if patch.closed_form is not None:
        e = _window_max(patch, field(patch, "analytic"), asset.check_window)
        ok = e < ANALYTIC_TOL
        return {"check_name": "mean_curvature_consistency", "grid": [grids[-1]], "method": "analytic", "max_error": [e], "pass": ok, "status": _status(ok)}
    return _grid_study("mean_curvature_consistency", asset, grids, lambda p: field(p, "grid"), {"method": "grid"})


def graphic_identity_check(asset: Asset, grids: Sequence[int]) -> dict:
    return _grid_study("graphic_identity", asset, grids, gg.graphic_identity_residual, {"method": "grid"})


def identities_suite(asset: Asset, grids: Sequence[int]) -> list[dict]:
    if asset.build is None:
        raise ValueError(f"asset {asset.name!r} has no gridded patch")
    out = [residual_check(asset, grids)] if asset.solves_equation else []
    return out + [
        theta_w_check(asset, grids),
        mean_curvature_consistency(asset, grids),
        graphic_identity_check(asset, grids),
    ]


def weighted_mean_curvature_check(asset: Asset, grids: Sequence[int]) -> dict:
    patch = asset.build(grids[-1])
    if patch.closed_form is not None:
        f = gg.shape_operator(patch, "analytic")
        e = _window_max(patch, cl.weighted_mean_curvature(patch, f), None)
        ok = e < ANALYTIC_TOL
        return {"check_name": "weighted_mean_curvature", "grid": [grids[-1]], "method": "analytic", "max_error": [e], "pass": ok, "status": _status(ok)}
    return _grid_study(
        "weighted_mean_curvature", asset, grids, lambda p: cl.weighted_mean_curvature(p, gg.shape_operator(p, "grid")), {"method": "grid"}
    )


def jacobi_theta_check(asset: Asset, grids: Sequence[int]) -> dict:
    def l_theta(p):
        f = gg.shape_operator(p, "grid")
        return gg.jacobi_apply(p, f, f.theta)

    return _grid_study("jacobi_theta", asset, grids, l_theta, {"method": "grid"})


def second_variation_refinement(asset: Asset, grids: Sequence[int], tol: float = 1e-3) -> dict:
    rows = []
    for n in grids:
        p = asset.build(n)
        f = gg.shape_operator(p, "grid")
        sv = cl.second_variation_check(p, f, cl.bump(p))
        rows.append(sv)
    rel = [r.rel_err for r in rows]
    rep = _refinement("second_variation", grids, rel)
    ok = rep["pass"] and rel[-1] < tol
    rep.update(
        {
            "lhs": [r.lhs for r in rows],
            "rhs": [r.rhs for r in rows],
            "rel_err": rel,
            "translator_defect": [r.translator_defect for r in rows],
            "tol": tol,
            "pass": ok,
            "status": _status(ok),
        }
    )
    return rep


def quadratic_form_check(asset: Asset, n: int, seed: int, count: int = 100, rel_floor: float = 1e-8) -> dict:
    """Nonnegativity of the discrete second variation for seeded random test functions."""
    rng = np.random.default_rng(seed)
    p = asset.build(n)
    f = gg.shape_operator(p, "grid")
    lhs, rhs = [], []
    for _ in range(count):
        sv = cl.second_variation_check(p, f, cl.random_test_function(p, rng))
        lhs.append(sv.lhs)
        rhs.append(sv.rhs)
    scale = max(max(abs(x) for x in rhs), 1e-300) if rhs else 1.0
    ok = all(r >= 0 for r in rhs) and all(x >= -rel_floor * scale for x in lhs)
    return {
        "check_name": "quadratic_form_nonnegative",
        "grid": [n],
        "seed": seed,
        "count": count,
        "min_lhs": min(lhs) if lhs else 0.0,
        "min_rhs": min(rhs) if rhs else 0.0,
        "scale": scale,
        "pass": ok,
        "status": _status(ok),
    }


def conformal_suite(asset: Asset, grids: Sequence[int], seed: int, count: int = 100) -> list[dict]:
    if asset.mode.kind != "translator":
        raise ValueError("the conformal suite applies to translators only")
    out = [weighted_mean_curvature_check(asset, grids)]
    patch = asset.build(grids[0])
    if patch.closed_form is None and not np.any(patch.mask == gg.EXCLUDED):
        out.append(jacobi_theta_check(asset, grids))
        out.append(second_variation_refinement(asset, grids))
        out.append(quadratic_form_check(asset, grids[0], seed, count))
    return out


def sectional_oracle_check(surface: ws.WarpedSurface, seed: int, points: int = 50, tol: float = 1e-5) -> dict:
    """Weighted sectional curvatures against a finite-difference Riemann tensor."""
    rng = np.random.default_rng(seed)
    ctx = cl.WeightedMetricContext(surface)
    metric = cl.weighted_metric(ctx)
    hi = min(surface.r_max, 3.0) if surface.kind != "spherical" else 1.5
    worst_rel, worst_vert = 0.0, 0.0
    for _ in range(points):
        r = float(rng.uniform(0.2, hi))
        t = float(rng.uniform(-1.0, 1.0))
        x = [r, 0.0, t]
        want = cl.weighted_sectional(ctx, r, t, cl.Plane.HORIZONTAL12)
        got = riemann_fd.sectional(metric, x, [1, 0, 0], [0, 1, 0])
        worst_rel = max(worst_rel, abs(got - want) / max(abs(want), 1e-300))
        for Y in ([1, 0, 0], [0, 1, 0]):
            worst_vert = max(worst_vert, abs(riemann_fd.sectional(metric, x, Y, [0, 0, 1])))
    ok = worst_rel < tol and worst_vert < 1e-8
    return {
        "check_name": "weighted_sectional_oracle",
        "surface": surface.label,
        "points": points,
        "seed": seed,
        "max_rel_err": worst_rel,
        "max_vertical": worst_vert,
        "pass": ok,
        "status": _status(ok),
    }


def sectional_suite(seed: int, points: int = 50) -> list[dict]:
    return [sectional_oracle_check(ws.catalog(k), seed, points) for k in ("euclidean", "spherical", "hyperbolic")]


def random_graph_identity_suite(surface: str, seeds: Sequence[int], grids: Sequence[int]) -> list[dict]:
    from .assets import get_asset

    out = []
    for sd in seeds:
        rep = graphic_identity_check(get_asset("random-graph", surface=surface, seed=sd), grids)
        rep["seed"] = sd
        rep["surface"] = surface
        out.append(rep)
    return out


def monitor_check(asset: Asset, n: int, radii: Sequence[float] = (0.25, 0.5, 1.0, 2.0), bound: float = 10.0) -> dict:
    """Scaled curvature sup over intrinsic balls; passes only when every ball is ``OK``."""
    from .boundary_probe import curvature_estimate_monitor

    if asset.monitor_center is None:
        raise ValueError(f"asset {asset.name!r} has no monitor centre")
    p = asset.build(n)
    rep = curvature_estimate_monitor(p, gg.shape_operator(p), asset.monitor_center, radii, bound=bound)
    ok = rep.status.value == "OK"
    out = {"check_name": "curvature_estimate_monitor", "grid": [n], "center": list(asset.monitor_center), "pass": ok, "status": _status(ok)}
    out.update({"monitor_" + k: v for k, v in rep.to_dict().items()})
    return out


def overall(checks: Sequence[dict]) -> str:
    if any(c.get("status") == "INCONCLUSIVE" for c in checks):
        return "INCONCLUSIVE"
    return "PASS" if all(c.get("pass") for c in checks) else "FAIL"
