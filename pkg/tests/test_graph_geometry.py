import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translator_lab import assets
from translator_lab import graph_geometry as gg
from translator_lab import warped_surface as ws


def cart_chart(n=33, x=(-1.0, 1.0), y=(-1.0, 1.0)):
    return gg.Chart(ws.cartesian(), x[0], x[1], n, y[0], y[1], n)


class TestChart:
    def test_spacing_and_mesh(self):
        c = cart_chart(5)
        assert c.da == pytest.approx(0.5)
        A, B = c.mesh()
        assert A.shape == (5, 5) and A[1, 0] == pytest.approx(-0.5) and B[0, 1] == pytest.approx(-0.5)

    def test_polar_chart_off_pole(self):
        with pytest.raises(ValueError):
            gg.Chart(ws.catalog("euclidean"), 0.0, 1.0, 9, 0.0, 1.0, 9)

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            cart_chart(2)

    def test_refined_keeps_box(self):
        c = cart_chart(9).refined(17)
        assert (c.na, c.nb, c.a0, c.b1) == (17, 17, -1.0, 1.0)


class TestPatch:
    def test_non_finite_nodes_are_excluded(self):
        p = assets.hemisphere(33)
        assert np.all(np.isnan(p.u[p.mask == gg.EXCLUDED]))
        assert p.mask[16, 16] == gg.INTERIOR

    def test_offset_only_moves_heights(self):
        p = assets.grim_reaper(17)
        q = gg.GraphPatch(p.chart, p.values, p.mask, offset=3.0, closed_form=p.closed_form)
        np.testing.assert_allclose(q.u - p.u, 3.0, rtol=0, atol=1e-14)
        np.testing.assert_array_equal(gg.shape_operator(q).H, gg.shape_operator(p).H)
        assert q.height_at(0.0, 0.5) == pytest.approx(3.0)

    def test_write(self, tmp_path):
        assets.flat_slice(17).write(tmp_path / "flat")
        rows = (tmp_path / "flat.csv").read_text().splitlines()
        assert rows[0] == "a,b,u,mask" and len(rows) == 17 * 17 + 1


class TestAngleFunction:
    @settings(max_examples=25, deadline=None)
    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
    def test_theta_of_plane(self, p, q):
        patch = gg.make_patch(cart_chart(9), lambda A, B: p * A + q * B)
        theta = gg.angle_function(patch, method="grid")
        np.testing.assert_allclose(theta, 1.0 / math.sqrt(1 + p * p + q * q), rtol=1e-12)

    def test_theta_times_w_is_one(self):
        f = gg.shape_operator(assets.scherk(33))
        np.testing.assert_allclose(f.theta * f.W, 1.0, rtol=1e-14)


class TestResiduals:
    def test_grim_reaper_analytic(self):
        res = gg.translator_residual(assets.grim_reaper(65), method="analytic")
        assert np.nanmax(np.abs(res)) < 1e-10

    def test_scherk_analytic(self):
        res = gg.minimal_residual(assets.scherk(65), method="analytic")
        assert np.nanmax(np.abs(res)) < 1e-10

    def test_hemisphere_mean_curvature_sign(self):
        # H = -div(Du/W) = +2 for the upper unit hemisphere
        p = assets.hemisphere(65)
        res = gg.cmc_residual(p, 2.0, method="analytic")
        assert np.nanmax(np.abs(res)) < 1e-8
        wrong = gg.cmc_residual(p, -2.0, method="analytic")
        assert np.nanmin(np.abs(wrong)) > 3.9

    def test_grid_residual_is_second_order(self):
        errs = []
        for n in (33, 65, 129):
            res = gg.translator_residual(assets.grim_reaper(n), method="grid")
            A, _ = assets.grim_reaper(n).chart.mesh()
            errs.append(np.nanmax(np.abs(res[np.abs(A) < 1.0])))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 1.8)

    def test_boundary_nodes_are_nan(self):
        res = gg.translator_residual(assets.grim_reaper(17))
        assert np.all(np.isnan(res[0, :])) and np.all(np.isnan(res[:, -1]))


class TestShapeOperator:
    def test_plane_is_flat(self):
        f = gg.shape_operator(gg.make_patch(cart_chart(9), lambda A, B: 0.3 * A - 0.2 * B))
        assert np.nanmax(np.abs(f.h)) < 1e-14
        assert np.nanmax(np.abs(f.normA2)) < 1e-14

    def test_mean_curvature_consistency(self):
        p = assets.scherk(65)
        f = gg.shape_operator(p, method="analytic")
        div, _ = gg.divergence_term(p)
        A, B = p.chart.mesh()
        inner = np.isfinite(div) & (np.abs(A) < 1.0)
        # H = -div(Du/W); Scherk has H = 0 both ways up to discretisation
        assert np.max(np.abs(f.H[inner])) < 1e-10
        assert np.max(np.abs(div[inner])) < 5e-3

    def test_sphere_curvature(self):
        f = gg.shape_operator(assets.hemisphere(33), method="analytic")
        sel = np.isfinite(f.H)
        np.testing.assert_allclose(f.H[sel], 2.0, rtol=1e-9)
        np.testing.assert_allclose(f.normA2[sel], 2.0, rtol=1e-8)


class TestLaplaceBeltrami:
    def test_kills_constants(self):
        p = assets.random_graph(33, "hyperbolic", 3)
        lap = gg.laplace_beltrami(p, np.ones_like(p.values))
        assert np.nanmax(np.abs(lap)) < 1e-12

    def test_jacobi_needs_margin(self):
        p = assets.grim_reaper(17)
        out = gg.jacobi_apply(p, gg.shape_operator(p), np.ones_like(p.values))
        assert np.all(np.isnan(out[:2, :])) and np.isfinite(out[8, 8])


class TestGraphicIdentity:
    @pytest.mark.parametrize("surface", ["euclidean", "hyperbolic", "spherical"])
    def test_converges(self, surface):
        errs = []
        for n in (33, 65, 129):
            r = gg.graphic_identity_residual(assets.random_graph(n, surface, 1))
            k = (n - 1) // 32
            errs.append(np.nanmax(np.abs(r[::k, ::k][4:-4, 4:-4])))
        assert errs[-1] < errs[0] / 10


class TestDirichletSolver:
    def test_recovers_grim_reaper(self):
        chart = cart_chart(33, x=(-1.2, 1.2), y=(0.0, 1.0))
        exact = assets.grim_reaper(33).closed_form
        sol = gg.solve_dirichlet_translator(chart, exact, tol=1e-10)
        A, B = chart.mesh()
        assert np.max(np.abs(sol.values - exact(A, B))) < 1e-2
        hist = sol.meta["newton_history"]
        assert hist[-1] < 1e-10

    def test_maximum_principle(self):
        # constant boundary data c: the translator bulges downward, so u <= c inside
        chart = cart_chart(17)
        sol = gg.solve_dirichlet_translator(chart, lambda A, B: 0 * A + 1.0)
        assert np.max(sol.values) <= 1.0 + 1e-12
        assert sol.values[8, 8] < 1.0

    def test_refuses_excluded_nodes(self):
        chart = cart_chart(9)
        mask = gg.default_mask(chart)
        mask[4, 4] = gg.EXCLUDED
        with pytest.raises(gg.StencilError):
            gg.solve_dirichlet_translator(chart, np.zeros((9, 9)), mask=mask)

    def test_non_finite_boundary(self):
        with pytest.raises(ValueError):
            gg.solve_dirichlet_translator(cart_chart(9), np.full((9, 9), np.nan))
