"""Radial translating, minimal and CMC graphs over warped surfaces.

A radial graph ``u(r)`` over ``dr^2 + h^2 dtheta^2`` solves

    u_rr / (1 + u_r^2) + (h'/h) u_r = S

with ``S = 1`` (translator), ``S = 0`` (minimal) or ``S = -H0 sqrt(1 + u_r^2)``
(constant mean curvature ``H0`` in the convention ``H = -div(Du/W)``).  The
solver integrates the equivalent first-order system for ``(u, psi)`` with
``psi = u_r / W``:

    (h psi)' = h S / W,    u' = psi / sqrt(1 - psi^2),

which stays regular while the graph turns vertical (``psi -> +-1``).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .warped_surface import ChartError, WarpedSurface

__all__ = [
    "Mode",
    "TRANSLATOR",
    "MINIMAL",
    "cmc",
    "EndpointClass",
    "RadialProfile",
    "BlowupBranch",
    "IntegrationError",
    "InconclusiveError",
    "NotAGraphError",
    "solve_radial",
    "classify_endpoint",
    "cmc_blowup_family",
    "blowup_branch_profile",
    "verify_profile_residual",
    "residual_per_node",
    "first_integral",
    "pole_series",
]

R_LAUNCH = 1e-3
EVENT_GAP = 1e-6
FIT_WINDOW = 50
# Double roots give a discriminant ratio of order one, simple roots of order
# slope^2 / EVENT_GAP; anything below this separates the two by decades.
DOUBLE_ROOT_RATIO = 30.0
MAX_FIT_CONDITION = 1e8


class IntegrationError(RuntimeError):
    pass


class InconclusiveError(RuntimeError):
    """Endpoint fit too ill-conditioned to decide between root types."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class NotAGraphError(ValueError):
    """The requested branch has ``|u_r / W| >= 1`` and is not a graph."""


@dataclass(frozen=True)
class Mode:
    kind: str  # "translator", "minimal" or "cmc"
    H0: float = 0.0

    def source(self, p):
        """Right-hand side ``S`` of the radial equation in terms of the slope."""
        if self.kind == "translator":
            return np.ones_like(np.asarray(p, dtype=float))
        if self.kind == "minimal":
            return np.zeros_like(np.asarray(p, dtype=float))
        return -self.H0 * np.sqrt(1.0 + np.asarray(p, dtype=float) ** 2)

    def source_over_w(self, psi):
        if self.kind == "translator":
            return np.sqrt(np.maximum(1.0 - psi * psi, 0.0))
        if self.kind == "minimal":
            return 0.0 * psi
        return -self.H0 + 0.0 * psi

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "cmc":
            d["H0"] = self.H0
        return d

    def __str__(self):
        return f"cmc(H0={self.H0:g})" if self.kind == "cmc" else self.kind


TRANSLATOR = Mode("translator")
MINIMAL = Mode("minimal")


def cmc(H0: float) -> Mode:
    return Mode("cmc", float(H0))


def mode_from_name(name: str, H0: float | None = None) -> Mode:
    name = name.lower()
    if name == "translator":
        return TRANSLATOR
    if name == "minimal":
        return MINIMAL
    if name == "cmc":
        if H0 is None:
            raise ValueError("cmc mode needs H0")
        return cmc(H0)
    raise ValueError(f"unknown mode {name!r}")


@dataclass(frozen=True)
class EndpointClass:
    kind: str  # "regular", "vertical_tangent", "height_blowup"
    r: float
    u_finite: float | None = None
    sign: int = 0
    fit: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        d = {"kind": self.kind, "r": self.r}
        if self.u_finite is not None:
            d["u_finite"] = self.u_finite
        if self.sign:
            d["sign"] = self.sign
        if self.fit:
            d["fit"] = self.fit
        return d


@dataclass
class RadialProfile:
    surface: WarpedSurface
    mode: Mode
    r: np.ndarray
    u: np.ndarray
    p: np.ndarray
    psi: np.ndarray
    start: tuple[float, float]
    tol: float
    event_r: float | None = None
    event_side: int = 0
    series_constant: float | None = None
    endpoint: EndpointClass | None = None
    max_residual: float = math.nan

    @property
    def direction(self) -> int:
        return 1 if self.r[-1] >= self.r[0] else -1

    def u_at(self, r):
        """Height at radius ``r`` by cubic Hermite interpolation of the nodes."""
        from scipy.interpolate import CubicHermiteSpline

        order = np.argsort(self.r)
        spline = CubicHermiteSpline(self.r[order], self.u[order], self.p[order])
        return spline(r)

    def radius_at_level(self, c: float) -> float:
        """Radius where the (monotone) profile reaches height ``c``."""
        from scipy.interpolate import CubicHermiteSpline

        u, r, p = self.u, self.r, self.p
        diff = u - c
        idx = np.nonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))[0]
        if idx.size == 0:
            raise ValueError(f"level {c} not attained by profile (range {u.min():.4g}..{u.max():.4g})")
        i = idx[-1]
        lo, hi = sorted((i, i + 1), key=lambda j: r[j])
        spline = CubicHermiteSpline([r[lo], r[hi]], [u[lo], u[hi]], [p[lo], p[hi]])
        return float(brentq(lambda x: float(spline(x)) - c, r[lo], r[hi], xtol=1e-15, rtol=1e-15))

    def residual_nodes(self):
        return residual_per_node(self)

    def to_csv(self, path):
        res = residual_per_node(self)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "u", "u_r", "residual"])
            for row in zip(self.r, self.u, self.p, res):
                w.writerow([repr(float(v)) for v in row])

    def sidecar(self) -> dict:
        return {
            "surface": self.surface.label,
            "mode": self.mode.to_dict(),
            "start": {"r_a": self.start[0], "p_a": self.start[1]},
            "tol": self.tol,
            "endpoint_class": self.endpoint.to_dict() if self.endpoint else None,
            "max_residual": self.max_residual,
            "series_constant": self.series_constant,
            "nodes": int(self.r.size),
        }

    def write(self, stem):
        stem = Path(stem)
        self.to_csv(stem.with_suffix(".csv"))
        stem.with_suffix(".json").write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")


def pole_series(surface: WarpedSurface, mode: Mode, r: float):
    """Launch values ``(u, p)`` at small ``r`` from the regular series at the pole.

    Returns ``(u, p, c3)`` where ``p = a r + c3 r^3`` to the order used.
    """
    K0 = surface.pole_curvature
    if mode.kind == "translator":
        c3 = K0 / 24.0 + 1.0 / 32.0
        p = 0.5 * r + c3 * r**3
        u = 0.25 * r**2 + 0.25 * c3 * r**4
        return u, p, c3
    if mode.kind == "minimal":
        return 0.0, 0.0, 0.0
    H0 = mode.H0
    # psi = -H0 (int_0^r h)/h = -H0 r/2 (1 + K0 r^2/12) + O(r^5)
    psi = -0.5 * H0 * r * (1.0 + K0 * r * r / 12.0)
    p = psi / math.sqrt(1.0 - psi * psi)
    c3 = -H0 * K0 / 24.0 - H0**3 / 16.0
    u = -0.25 * H0 * r**2 + 0.25 * c3 * r**4
    return u, p, c3


def _rhs_factory(surface: WarpedSurface, mode: Mode):
    h, kappa = surface.h, surface.kappa

    def rhs(r, y):
        psi = y[1]
        one_m = max(1.0 - psi * psi, 0.0)
        k = float(kappa(np.float64(r)))
        if not math.isfinite(k):
            raise IntegrationError(f"profile function not finite at r={r}")
        du = psi / math.sqrt(one_m) if one_m > 0 else math.copysign(1e300, psi)
        dpsi = float(mode.source_over_w(np.float64(psi))) - k * psi
        return [du, dpsi]

    return rhs


def _sample_nodes(sol, r0, r1, event_r):
    span = abs(r1 - r0)
    n = int(min(max(2001, math.ceil(span / 0.005) + 1), 40001))
    grid = np.linspace(r0, r1, n)
    if event_r is not None:
        sgn = 1.0 if r1 >= r0 else -1.0
        width = min(0.05, span / 10)
        d = np.geomspace(width, 1e-7, 80)
        tail = event_r - sgn * d
        grid = np.concatenate([grid[sgn * (grid - tail[0]) < 0], tail, [event_r]])
    grid = grid if grid[-1] != grid[0] else grid[:1]
    return grid


def solve_radial(
    s: WarpedSurface,
    mode: Mode,
    r_a: float,
    p_a: float,
    r_stop: float,
    tol: float = 1e-10,
) -> RadialProfile:
    """Integrate a radial profile from ``(r_a, p_a)`` towards ``r_stop``.

    Integration stops early when ``1 -+ u_r/W`` drops to ``1e-6`` (the graph is
    turning vertical); the endpoint is then classified by
    :func:`classify_endpoint`.

    Raises
    ------
    ValueError
        Invalid start (``r_a = 0`` with nonzero slope, negative radius).
    ChartError
        ``r_a`` or ``r_stop`` outside the chart.
    IntegrationError
        Step-size underflow or non-finite profile values.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if r_a < 0:
        raise ValueError("start radius must be nonnegative")
    if r_a == 0 and p_a != 0:
        raise ValueError("a profile starting at the pole must have zero slope")
    if r_a == 0 and not s.has_pole:
        raise ChartError("surface has no pole to start from")
    if r_a > 0:
        s.check_radius(r_a)
    s.check_radius(r_stop)
    if r_stop == r_a:
        raise ValueError("empty integration interval")

    nodes_r0, nodes_u0, nodes_p0 = [], [], []
    series_c = None
    if r_a == 0:
        r_l = min(R_LAUNCH, r_stop / 10.0)
        u_l, p_l, series_c = pole_series(s, mode, r_l)
        nodes_r0, nodes_u0, nodes_p0 = [0.0], [0.0], [0.0]
        r_start, u_start, p_start = r_l, u_l, p_l
    else:
        r_start, u_start, p_start = float(r_a), 0.0, float(p_a)
    psi0 = p_start / math.sqrt(1.0 + p_start * p_start)

    rhs = _rhs_factory(s, mode)

    def ev_plus(r, y):
        return 1.0 - y[1] - EVENT_GAP

    def ev_minus(r, y):
        return 1.0 + y[1] - EVENT_GAP

    ev_plus.terminal = ev_minus.terminal = True
    ev_plus.direction = ev_minus.direction = -1

    rtol = integrator_rtol(tol)
    sol = solve_ivp(
        rhs,
        (r_start, r_stop),
        [u_start, psi0],
        method="DOP853",
        rtol=rtol,
        atol=rtol * 1e-2,
        dense_output=True,
        events=(ev_plus, ev_minus),
    )
    if sol.status == -1:
        raise IntegrationError(f"integration failed: {sol.message}")
    event_r, event_side = None, 0
    if sol.status == 1:
        if sol.t_events[0].size:
            event_r, event_side = float(sol.t_events[0][0]), 1
        else:
            event_r, event_side = float(sol.t_events[1][0]), -1
    r_end = event_r if event_r is not None else float(sol.t[-1])

    grid = _sample_nodes(sol, r_start, r_end, event_r)
    y = sol.sol(grid)
    u, psi = y[0], np.clip(y[1], -1.0, 1.0)
    if event_r is not None:
        psi[-1] = event_side * (1.0 - EVENT_GAP)
    p = psi / np.sqrt(1.0 - psi * psi)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(p))):
        raise IntegrationError("non-finite values in profile")

    r_nodes = np.concatenate([nodes_r0, grid])
    u_nodes = np.concatenate([nodes_u0, u])
    p_nodes = np.concatenate([nodes_p0, p])
    psi_nodes = p_nodes / np.sqrt(1.0 + p_nodes**2)
    if event_r is not None:
        psi_nodes[-1] = psi[-1]

    prof = RadialProfile(
        surface=s,
        mode=mode,
        r=r_nodes,
        u=u_nodes,
        p=p_nodes,
        psi=psi_nodes,
        start=(float(r_a), float(p_a)),
        tol=tol,
        event_r=event_r,
        event_side=event_side,
        series_constant=series_c,
    )
    prof.max_residual = verify_profile_residual(prof)
    prof.endpoint = classify_endpoint(prof)
    return prof


def integrator_rtol(tol: float) -> float:
    """Map a requested residual tolerance to the integrator's relative tolerance.

    With per-step error control the local defect of DOP853 scales like
    ``rtol**0.92``; the extra factor ``(tol/1e-6)**0.2`` makes the delivered
    residual scale at least linearly in ``tol``.
    """
    return max(tol * (tol / 1e-6) ** 0.2, 3e-14)


def _fornberg(x0, xs, m):
    """Finite-difference weights for derivative ``m`` at ``x0`` on nodes ``xs``."""
    n = len(xs)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _local_derivative(x, f, width=7):
    n = x.size
    half = width // 2
    out = np.empty(n)
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        idx = slice(lo, lo + width)
        out[i] = _fornberg(x[i], x[idx], 1) @ f[idx]
    return out


def residual_per_node(profile: RadialProfile) -> np.ndarray:
    """Pointwise residual ``|u_rr/(1+p^2) + (h'/h) p - S|`` (NaN at the pole node)."""
    r, p = profile.r, profile.p
    if r.size < 5:
        raise ValueError("need at least 5 nodes")
    order = np.argsort(r)
    rs, ps = r[order], p[order]
    width = min(7, rs.size)
    upp = _local_derivative(rs, ps, width)
    res = np.full(rs.size, np.nan)
    pos = rs > 0
    k = profile.surface.kappa(rs[pos])
    res[pos] = np.abs(upp[pos] / (1.0 + ps[pos] ** 2) + k * ps[pos] - profile.mode.source(ps[pos]))
    out = np.empty_like(res)
    out[order] = res
    return out


def verify_profile_residual(profile: RadialProfile) -> float:
    """Sup over nodes of the governing-equation residual, with ``u_rr`` recomputed locally."""
    res = residual_per_node(profile)
    return float(np.nanmax(res))


def first_integral(profile: RadialProfile) -> np.ndarray:
    """``h u_r / W + H0 int_0^r h``; constant along minimal and CMC profiles."""
    s = profile.surface
    r = profile.r
    h = s.h(r)
    val = h * profile.psi
    if profile.mode.kind == "cmc":
        val = val + profile.mode.H0 * s.area_integral(r)
    return val


def classify_endpoint(profile: RadialProfile) -> EndpointClass:
    """Classify how the profile ends.

    ``Regular`` when integration reached ``r_stop``.  Otherwise ``q = 1 -+ psi``
    is fitted by a quadratic over the last nodes; with ``c0, c1, c2`` its Taylor
    coefficients at the event, ``c1^2 / (4 c0 c2)`` is of order one for a
    double root (``q ~ (r* - r)^2``, logarithmic height blow-up) and huge for a
    simple root (vertical tangent at finite height).
    """
    r = profile.r
    if profile.event_r is None:
        return EndpointClass("regular", float(r[-1]))
    side = profile.event_side
    n = min(FIT_WINDOW, r.size)
    rw = r[-n:]
    q = 1.0 - side * profile.psi[-n:]
    x = np.abs(profile.event_r - rw)
    scale = float(x.max()) or 1.0
    xs = x / scale
    A = np.vander(xs, 3, increasing=True)
    cond = float(np.linalg.cond(A))
    coef, *_ = np.linalg.lstsq(A, q, rcond=None)
    c0, c1, c2 = coef[0], coef[1] / scale, coef[2] / scale**2
    report = {
        "window": int(n),
        "condition_number": cond,
        "coefficients": [float(c0), float(c1), float(c2)],
    }
    if not np.isfinite(cond) or cond > MAX_FIT_CONDITION:
        raise InconclusiveError("endpoint fit is ill-conditioned", report)
    q_end = float(q[-1])
    if c2 <= 0:
        ratio = math.inf
    else:
        ratio = c1 * c1 / (4.0 * q_end * c2)
    report["discriminant_ratio"] = float(ratio)
    # q at the apparent root: a double root has its vertex at q ~ 0
    if ratio < DOUBLE_ROOT_RATIO:
        r_star = float(profile.event_r + profile.direction * c1 / (2.0 * c2)) if c2 > 0 else float(profile.event_r)
        sign = int(np.sign(profile.p[-1]) * profile.direction)
        return EndpointClass("height_blowup", r_star, None, sign, report)
    # simple root: q ~ c1 x  ->  r* = r_e + dir * q_end / c1
    r_star = float(profile.event_r + profile.direction * q_end / c1)
    # remaining height to the vertical point: u' ~ 1/sqrt(2 c1 x)
    du = math.sqrt(2.0 * q_end / c1) * np.sign(profile.p[-1]) * profile.direction
    return EndpointClass("vertical_tangent", r_star, float(profile.u[-1] + du), 0, report)


class BlowupBranch(NamedTuple):
    r_star: float
    kappa: float
    B: float
    H0: float
    side: int
    admissible: bool
    psi_second: float


def cmc_blowup_family(s: WarpedSurface, H0: float) -> BlowupBranch:
    """Solve the tangency system ``psi(r*) = +-1, psi'(r*) = 0`` for radial CMC graphs.

    With the first integral ``h psi + H0 int_0^r h = B`` the system reduces to
    ``h'/h (r*) = |H0|``.  The returned ``kappa`` is that circle's curvature.
    ``admissible`` tells whether ``|psi| < 1`` on both sides of ``r*``, i.e.
    whether the branch is a graph approaching the circle; it requires the
    circle curvature to increase through ``r*``.
    """
    if H0 == 0:
        raise ValueError("H0 must be nonzero")
    target = abs(H0)
    lo = s.r_min + 1e-9
    hi = s.r_max if math.isfinite(s.r_max) else 200.0
    hi = hi * (1 - 1e-12)
    grid = np.concatenate([np.geomspace(lo, min(1.0, hi), 400), np.linspace(min(1.0, hi), hi, 4000)[1:]])
    with np.errstate(all="ignore"):
        f = s.kappa(grid) - target
    ok = np.isfinite(f)
    roots = []
    for i in range(grid.size - 1):
        if ok[i] and ok[i + 1] and np.sign(f[i]) != np.sign(f[i + 1]):
            roots.append(
                brentq(lambda x: float(s.kappa(np.float64(x))) - target, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15)
            )
    if not roots:
        raise ValueError(f"no circle with curvature {target:g} in the chart of {s.label!r}")
    side = 1 if H0 < 0 else -1
    candidates = []
    for r_star in roots:
        r_star = float(r_star)
        psi2 = -side * float(s.kappa_prime(np.float64(r_star)))
        candidates.append((r_star, psi2, bool(side * psi2 < 0)))
    # prefer a circle that a graph can actually approach
    r_star, psi2, admissible = next((c for c in candidates if c[2]), candidates[0])
    h_star = float(s.h(np.float64(r_star)))
    B = h_star * side + H0 * float(s.area_integral(r_star))
    kappa = float(s.kappa(np.float64(r_star)))
    return BlowupBranch(r_star, kappa, float(B), float(H0), side, admissible, psi2)


def branch_psi(s: WarpedSurface, branch: BlowupBranch, r):
    """``u_r / W`` on the tangency branch from its first integral."""
    r = np.asarray(r, dtype=float)
    return (branch.B - branch.H0 * s.area_integral(r)) / s.h(r)


def blowup_branch_profile(
    s: WarpedSurface,
    H0: float,
    r_a: float,
    tol: float = 1e-11,
) -> RadialProfile:
    """Integrate the CMC tangency branch from ``r_a`` towards the blow-up circle.

    Raises :class:`NotAGraphError` when the branch is not a graph at ``r_a``
    (always the case on circles whose curvature decreases outward).
    """
    branch = cmc_blowup_family(s, H0)
    psi_a = float(branch_psi(s, branch, r_a))
    if not abs(psi_a) < 1.0 or not branch.admissible:
        raise NotAGraphError(
            f"tangency branch at r*={branch.r_star:.6g} has |u_r/W|={abs(psi_a):.6g} at r={r_a:g}; "
            f"circle curvature derivative {s.kappa_prime(np.float64(branch.r_star)):.4g} "
            "does not allow a graph approaching r*"
        )
    p_a = psi_a / math.sqrt(1.0 - psi_a**2)
    r_stop = branch.r_star + (branch.r_star - r_a)
    if not r_stop < s.r_max:
        r_stop = 0.5 * (branch.r_star + s.r_max) if math.isfinite(s.r_max) else r_stop
    return solve_radial(s, cmc(H0), r_a, p_a, r_stop, tol)
