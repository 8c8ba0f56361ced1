import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translator_lab import assets
from translator_lab import conformal_lab as cl
from translator_lab import graph_geometry as gg
from translator_lab import riemann_fd
from translator_lab import warped_surface as ws


class TestWeightedSectional:
    @pytest.mark.parametrize("kind, K", [("euclidean", 0.0), ("spherical", 1.0), ("hyperbolic", -1.0)])
    def test_formula(self, kind, K):
        ctx = cl.WeightedMetricContext(ws.catalog(kind))
        assert cl.weighted_sectional(ctx, 1.0, 0.7, "Horizontal12") == pytest.approx(math.exp(-0.7) * (K - 0.25))

    def test_vertical_planes_are_flat(self):
        ctx = cl.WeightedMetricContext(ws.catalog("spherical"))
        assert cl.weighted_sectional(ctx, 1.0, 0.0, cl.Plane.VERTICAL13) == 0.0
        assert cl.weighted_sectional(ctx, 1.0, 0.0, "vertical23") == 0.0

    def test_recentring_rescales(self):
        s = ws.catalog("hyperbolic")
        base = cl.weighted_sectional(cl.WeightedMetricContext(s), 1.0, 0.5)
        shifted = cl.weighted_sectional(cl.WeightedMetricContext(s, t0=2.0), 1.0, 0.5)
        assert shifted == pytest.approx(math.exp(2.0) * base)

    def test_bad_plane(self):
        with pytest.raises(ValueError):
            cl.Plane.parse("diagonal")

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.3, 2.0), st.floats(-1.0, 1.0))
    def test_matches_finite_differences(self, r, t):
        ctx = cl.WeightedMetricContext(ws.catalog("hyperbolic"))
        got = riemann_fd.sectional(cl.weighted_metric(ctx), [r, 0.0, t], [1, 0, 0], [0, 1, 0])
        assert got == pytest.approx(cl.weighted_sectional(ctx, r, t), rel=1e-6)


class TestConformalSecondForm:
    def test_totally_geodesic_slice(self):
        # t = t0 slice: h = 0, unit normal d_t, f = t/2 -> df(v) = 1/2
        g = np.eye(2)
        out = cl.conformal_second_form(np.zeros((2, 2)), g, 0.5 * 1.0, 0.5)
        np.testing.assert_allclose(out.mixed, 0.5 * math.exp(-0.5) * np.eye(2))
        assert out.H_tilde == pytest.approx(math.exp(-0.5))

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(st.floats(-3, 3), min_size=3, max_size=3),
        st.lists(st.floats(0.2, 3), min_size=2, max_size=2),
        st.floats(-2, 2),
        st.floats(-1, 1),
    )
    def test_trace_identity(self, hv, gd, f, df):
        h = np.array([[hv[0], hv[1]], [hv[1], hv[2]]])
        g = np.diag(gd)
        out = cl.conformal_second_form(h, g, f, df)
        assert out.H_tilde == pytest.approx(math.exp(-f) * (out.H + 2 * df), abs=1e-10)

    def test_rejects_indefinite_metric(self):
        with pytest.raises(ValueError):
            cl.conformal_second_form(np.eye(2), np.diag([1.0, -1.0]), 0.0, 0.0)

    def test_tracefree_split(self):
        tf2, tr = cl.tracefree_split(np.diag([3.0, 1.0]))
        assert tr == 4.0 and tf2 == pytest.approx(2.0)


class TestWeightedMeanCurvature:
    def test_grim_reaper_is_weighted_minimal(self):
        p = assets.grim_reaper(65)
        Ht = cl.weighted_mean_curvature(p, gg.shape_operator(p, method="analytic"))
        assert np.nanmax(np.abs(Ht)) < 1e-10

    def test_scherk_is_not(self):
        p = assets.scherk(33)
        Ht = cl.weighted_mean_curvature(p, gg.shape_operator(p, method="analytic"))
        assert np.nanmin(Ht) > 0


@pytest.fixture(scope="module")
def patch():
    return assets.radial_translator(129, "euclidean")


class TestSecondVariation:
    def test_bump_vanishes_on_collar(self, patch):
        eta = cl.bump(patch)
        assert np.all(eta[:2, :] == 0) and np.all(eta[:, -2:] == 0)
        assert eta.max() > 0.9

    def test_identity(self, patch):
        f = gg.shape_operator(patch)
        sv = cl.second_variation_check(patch, f, cl.bump(patch))
        assert sv.rel_err < 5e-3
        assert sv.lhs > 0

    def test_collar_is_enforced(self, patch):
        f = gg.shape_operator(patch)
        with pytest.raises(cl.CollarError):
            cl.second_variation_check(patch, f, np.ones_like(f.theta))

    def test_random_functions_give_nonnegative_form(self, patch, rng):
        f = gg.shape_operator(patch)
        for _ in range(5):
            sv = cl.second_variation_check(patch, f, cl.random_test_function(patch, rng))
            assert sv.lhs >= -1e-8 * abs(sv.rhs)

    def test_coarse_grid_rejected(self):
        with pytest.raises(cl.CollarError):
            cl.bump(assets.radial_translator(9, "euclidean"))
