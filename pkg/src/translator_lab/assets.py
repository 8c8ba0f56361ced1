"""Built-in test graphs with closed forms or radial-profile oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import warped_surface as ws
from .graph_geometry import EXCLUDED, Chart, ClosedForm, GraphPatch, default_mask, make_patch
from .soliton_profiles import (
    MINIMAL,
    TRANSLATOR,
    Mode,
    RadialProfile,
    blowup_branch_profile,
    cmc,
    solve_radial,
)

EDGE_GAP = 1e-3
HALF_PI = math.pi / 2


@dataclass(frozen=True)
class Edge:
    """A boundary arc where the asset blows up, seen from the chart."""

    gamma: np.ndarray  # (n, 2) chart points on the arc
    inward: tuple  # chart direction pointing into the domain
    window: tuple | None  # probe window ((a_lo, a_hi), (b_lo, b_hi)) for level curves
    sign: int  # expected sign of the blow-up


@dataclass
class Asset:
    name: str
    mode: Mode
    description: str
    build: Callable[[int], GraphPatch] | None = None
    radial: Callable[[], RadialProfile] | None = None
    edges: dict = field(default_factory=dict)
    blowup: bool = False
    check_window: tuple | None = None
    default_levels: tuple = (2.0, 4.0, 6.0)
    monitor_center: tuple | None = None
    solves_equation: bool = True

    @property
    def exact(self) -> bool:
        return self.build is not None and self.build(17).closed_form is not None


def _arc(a=None, b=None, span=(-1.0, 1.0), n=40):
    t = np.linspace(span[0], span[1], n)
    if a is not None:
        return np.column_stack([np.full(n, a), t])
    return np.column_stack([t, np.full(n, b)])


def _cart_chart(x, y, n):
    return Chart(ws.cartesian(), x[0], x[1], n, y[0], y[1], n)


def grim_reaper(n=129) -> GraphPatch:
    cf = ClosedForm("-log(cos(a))", name="grim-reaper")
    return make_patch(_cart_chart((-HALF_PI + EDGE_GAP, HALF_PI - EDGE_GAP), (0.0, 1.0), n), cf, name="grim-reaper")


def scherk(n=129) -> GraphPatch:
    cf = ClosedForm("log(cos(b)) - log(cos(a))", name="scherk")
    return make_patch(_cart_chart((-HALF_PI + EDGE_GAP, HALF_PI - EDGE_GAP), (-1.2, 1.2), n), cf, name="scherk")


def flat_slice(n=129, c=0.0) -> GraphPatch:
    cf = ClosedForm(f"{float(c)!r} + 0*a", name="flat-slice")
    return make_patch(_cart_chart((-1.0, 1.0), (-1.0, 1.0), n), cf, name="flat-slice")


def hemisphere(n=129) -> GraphPatch:
    """Upper unit hemisphere on ``[-1, 1]^2``; nodes outside the open disk are excluded."""
    chart = _cart_chart((-1.0, 1.0), (-1.0, 1.0), n)
    A, B = chart.mesh()
    mask = default_mask(chart)
    mask[A * A + B * B >= 1.0] = EXCLUDED
    cf = ClosedForm("sqrt(1 - a**2 - b**2)", name="hemisphere")
    return make_patch(chart, cf, mask=mask, name="hemisphere")


def counterexample(n=129) -> GraphPatch:
    """Bounded oscillation ``x sin(1/(pi/2 - x))``: not a blow-up, exercises the dichotomy detector."""
    cf = ClosedForm("a*sin(1/(pi/2 - a))", name="counterexample")
    return make_patch(_cart_chart((0.0, HALF_PI - 0.05), (-1.0, 1.0), n), cf, name="counterexample")


RADIAL_CHARTS = {
    "euclidean": (0.5, 1.5, 0.0, 1.0),
    "hyperbolic": (0.5, 1.5, 0.0, 1.0),
    "spherical": (0.5, 1.4, 0.0, 1.0),
}


@lru_cache(maxsize=None)
def translator_profile(surface: str = "euclidean", r_end: float = 4.0) -> RadialProfile:
    s = ws.catalog(surface)
    return solve_radial(s, TRANSLATOR, 0.0, 0.0, r_end, tol=1e-12)


def radial_translator(n=129, surface="euclidean") -> GraphPatch:
    a0, a1, b0, b1 = RADIAL_CHARTS[surface]
    prof = translator_profile(surface, a1 + 0.1)
    chart = Chart(ws.catalog(surface), a0, a1, n, b0, b1, n)
    return make_patch(chart, lambda A, B: prof.u_at(A), name=f"radial-translator-{surface}")


def bowl(n=129) -> GraphPatch:
    """Euclidean translating bowl over ``[-2.5, 2.5]^2`` (pole inside the chart)."""
    prof = translator_profile("euclidean", 4.0)
    chart = _cart_chart((-2.5, 2.5), (-2.5, 2.5), n)
    return make_patch(chart, lambda A, B: prof.u_at(np.hypot(A, B)), name="bowl")


def random_expression(seed: int, terms: int = 4) -> str:
    """Seeded smooth test function of ``(a, b)`` as a sympy-parsable string."""
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(terms):
        amp = rng.uniform(-0.25, 0.25)
        fa, pa = rng.uniform(0.5, 2.0), rng.uniform(0, math.pi)
        m, pb = int(rng.integers(0, 3)), rng.uniform(0, math.pi)
        parts.append(f"({amp!r})*sin({fa!r}*a + {pa!r})*cos({m}*b + {pb!r})")
    return " + ".join(parts)


RANDOM_CHARTS = {
    "euclidean": (0.5, 1.5, 0.0, 1.5),
    "hyperbolic": (0.5, 1.5, 0.0, 1.5),
    "spherical": (0.5, 1.4, 0.0, 1.5),
}


def random_graph(n=129, surface="hyperbolic", seed=0) -> GraphPatch:
    a0, a1, b0, b1 = RANDOM_CHARTS[surface]
    chart = Chart(ws.catalog(surface), a0, a1, n, b0, b1, n)
    cf = ClosedForm(random_expression(seed), name=f"random-graph-{surface}-{seed}")
    return make_patch(chart, cf, name=cf.name)


def flared_blowup(H0: float = -2.5) -> RadialProfile:
    return blowup_branch_profile(ws.flared(), H0, 1.5)


def catalog_blowup(surface: str, H0: float) -> RadialProfile:
    """Tangency branch on a catalog surface; raises NotAGraphError there (see ledger)."""
    s = ws.catalog(surface)
    from .soliton_profiles import cmc_blowup_family

    branch = cmc_blowup_family(s, H0)
    return blowup_branch_profile(s, H0, 0.5 * branch.r_star)


def _radial_edge(r_star: float) -> Edge:
    th = np.linspace(0.0, 2 * math.pi, 40, endpoint=False)
    return Edge(np.column_stack([np.full(th.size, r_star), th]), (-1.0, 0.0), None, +1)


def get_asset(name: str, *, surface: str | None = None, seed: int = 0, H0: float | None = None) -> Asset:
    """Look up a registered asset; ``surface``, ``seed`` and ``H0`` parametrise some of them."""
    key = name.lower()
    if key == "grim-reaper":
        return Asset(
            key,
            TRANSLATOR,
            "u = -log cos x, exact translator on the strip |x| < pi/2",
            build=grim_reaper,
            edges={
                "x+": Edge(_arc(a=HALF_PI, span=(0.05, 0.95)), (-1.0, 0.0), ((0.0, HALF_PI), (-1.0, 2.0)), +1),
                "x-": Edge(_arc(a=-HALF_PI, span=(0.05, 0.95)), (1.0, 0.0), ((-HALF_PI, 0.0), (-1.0, 2.0)), +1),
            },
            blowup=True,
            check_window=((-1.2, 1.2), (0.0, 1.0)),
        )
    if key == "scherk":
        return Asset(
            key,
            MINIMAL,
            "u = log(cos y / cos x), minimal graph over the square",
            build=scherk,
            edges={
                "x+": Edge(_arc(a=HALF_PI, span=(-1.0, 1.0)), (-1.0, 0.0), ((0.0, HALF_PI), (-2.0, 2.0)), +1),
                "x-": Edge(_arc(a=-HALF_PI, span=(-1.0, 1.0)), (1.0, 0.0), ((-HALF_PI, 0.0), (-2.0, 2.0)), +1),
                "y+": Edge(_arc(b=HALF_PI, span=(-1.0, 1.0)), (0.0, -1.0), None, -1),
                "y-": Edge(_arc(b=-HALF_PI, span=(-1.0, 1.0)), (0.0, 1.0), None, -1),
            },
            blowup=True,
            check_window=((-1.2, 1.2), (-1.2, 1.2)),
        )
    if key == "flat-slice":
        return Asset(key, MINIMAL, "u = const, totally geodesic slice", build=flat_slice, monitor_center=(0.0, 0.0))
    if key == "hemisphere":
        return Asset(
            key,
            cmc(2.0),
            "upper unit hemisphere, H = 2 under H = -div(Du/W); vertical tangent at the equator",
            build=hemisphere,
            check_window=((-0.6, 0.6), (-0.6, 0.6)),
            monitor_center=(0.9, 0.0),
        )
    if key == "radial-translator":
        surf = surface or "euclidean"
        return Asset(
            key,
            TRANSLATOR,
            f"rotational translator through the pole of the {surf} surface, sampled on an annulus",
            build=lambda n: radial_translator(n, surf),
        )
    if key == "bowl":
        return Asset(key, TRANSLATOR, "Euclidean translating bowl over a square", build=bowl, monitor_center=(0.0, 0.0))
    if key == "random-graph":
        surf = surface or "hyperbolic"
        return Asset(
            key,
            MINIMAL,
            f"seeded smooth graph over the {surf} surface (solves no equation)",
            build=lambda n: random_graph(n, surf, seed),
            solves_equation=False,
        )
    if key == "counterexample":
        return Asset(
            key,
            TRANSLATOR,
            "u = x sin(1/(pi/2 - x)), bounded oscillation (detector negative control)",
            build=counterexample,
            solves_equation=False,
            edges={"x+": Edge(_arc(a=HALF_PI, span=(-1.0, 1.0)), (-1.0, 0.0), None, +1)},
        )
    if key == "flared-cmc-blowup":
        h0 = -2.5 if H0 is None else H0
        prof = flared_blowup(h0)
        return Asset(
            key,
            cmc(h0),
            "CMC tangency branch on the flared surface h = r exp(r^2/2)",
            radial=lambda: prof,
            edges={"r*": _radial_edge(float(prof.endpoint.r))},
            blowup=True,
        )
    if key in ("hyperbolic-cmc-blowup", "euclidean-cmc-blowup"):
        surf = key.split("-")[0]
        h0 = (-math.sqrt(2.0) if surf == "hyperbolic" else -1.0) if H0 is None else H0
        return Asset(
            key,
            cmc(h0),
            f"CMC tangency branch on the {surf} surface",
            radial=lambda: catalog_blowup(surf, h0),
            blowup=True,
        )
    raise KeyError(f"unknown asset {name!r}; choose from {ASSET_NAMES}")


ASSET_NAMES = (
    "grim-reaper",
    "scherk",
    "flat-slice",
    "hemisphere",
    "radial-translator",
    "bowl",
    "random-graph",
    "counterexample",
    "flared-cmc-blowup",
    "hyperbolic-cmc-blowup",
    "euclidean-cmc-blowup",
)
