import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translator_lab import warped_surface as ws


class TestCatalog:
    @pytest.mark.parametrize(
        "kind, K",
        [("euclidean", lambda r: 0.0), ("spherical", lambda r: 1.0), ("hyperbolic", lambda r: -1.0)],
    )
    def test_constant_curvature(self, kind, K):
        s = ws.catalog(kind)
        r = np.linspace(0.1, 1.5, 9)
        np.testing.assert_allclose(ws.gauss_curvature(s, r), [K(x) for x in r], atol=1e-12)

    def test_pole_conditions(self):
        for kind in ("euclidean", "spherical", "hyperbolic", "flared"):
            s = ws.catalog(kind)
            assert s.has_pole
            assert float(s.h(np.float64(0.0))) == pytest.approx(0.0, abs=1e-15)
            assert float(s.h_prime(np.float64(0.0))) == pytest.approx(1.0)

    def test_spherical_chart_stops_at_antipode(self):
        s = ws.catalog("spherical")
        assert s.r_max == pytest.approx(math.pi)
        with pytest.raises(ws.ChartError):
            ws.gauss_curvature(s, math.pi)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ws.catalog("torus")

    def test_radius_must_be_in_chart(self):
        s = ws.catalog("euclidean")
        with pytest.raises(ws.ChartError):
            s.check_radius(0.0)
        with pytest.raises(ws.ChartError):
            s.check_radius(float("nan"))

    def test_cartesian_chart_is_closed_at_its_ends(self):
        s = ws.cartesian((-1.0, 1.0))
        s.check_radius(np.array([-1.0, 1.0]))
        with pytest.raises(ws.ChartError):
            s.check_radius(1.0001)


class TestCircleCurvature:
    def test_hyperbolic_coth(self):
        s = ws.catalog("hyperbolic")
        r = np.linspace(0.2, 3.0, 11)
        np.testing.assert_allclose(ws.circle_geodesic_curvature(s, r), 1.0 / np.tanh(r), rtol=1e-13)

    def test_spherical_equator_is_geodesic(self):
        assert ws.circle_geodesic_curvature(ws.catalog("spherical"), math.pi / 2) == pytest.approx(0.0, abs=1e-15)

    @given(st.floats(1e-6, 1e-3))
    def test_pole_guard_matches_series(self, r):
        s = ws.catalog("spherical")
        got = float(s.kappa(np.float64(r)))
        assert got == pytest.approx(1.0 / math.tan(r), rel=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.05, 2.5))
    def test_riccati_relation(self, r):
        s = ws.catalog("hyperbolic")
        eps = 1e-5
        fd = (float(s.kappa(np.float64(r + eps))) - float(s.kappa(np.float64(r - eps)))) / (2 * eps)
        assert float(s.kappa_prime(np.float64(r))) == pytest.approx(fd, rel=1e-7)


class TestCustomSurfaces:
    def test_expression_matches_catalog(self):
        s = ws.custom_expression("sinh(r)", r_max=5.0)
        r = np.linspace(0.3, 2.0, 5)
        np.testing.assert_allclose(ws.gauss_curvature(s, r), -1.0, atol=1e-12)

    def test_tabulated_profile(self):
        r = np.linspace(0.0, 2.0, 401)
        s = ws.custom_tabulated(r, np.sin(r), name="tab")
        assert ws.gauss_curvature(s, 1.0) == pytest.approx(1.0, abs=1e-3)

    def test_load_toml_and_json(self, tmp_path):
        (tmp_path / "s.toml").write_text('[surface]\nkind = "custom"\nname = "sinh"\nr_max = 4.0\n[surface.params]\nexpression = "sinh(r)"\n')
        (tmp_path / "s.json").write_text(json.dumps({"kind": "hyperbolic"}))
        a = ws.load_surface(tmp_path / "s.toml")
        b = ws.load_surface(tmp_path / "s.json")
        assert a.label == "sinh"
        assert ws.circle_geodesic_curvature(a, 1.0) == pytest.approx(ws.circle_geodesic_curvature(b, 1.0), rel=1e-12)


class TestRicciNormal:
    def test_vertical_normal_sees_no_curvature(self):
        s = ws.catalog("spherical")
        assert ws.ricci_normal(s, 1.0, 1.0) == pytest.approx(0.0)
        assert ws.ricci_normal(s, 1.0, 0.0) == pytest.approx(1.0)

    def test_rejects_bad_angle(self):
        with pytest.raises(ValueError):
            ws.ricci_normal(ws.catalog("euclidean"), 1.0, 1.5)

    def test_metric_components(self):
        g_rr, g_tt = ws.metric_components(ws.catalog("spherical"), math.pi / 2)
        assert (g_rr, g_tt) == (1.0, pytest.approx(1.0))
