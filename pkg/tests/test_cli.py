import json

import pytest

from translator_lab import cli


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    return tmp_path / "out"


def run(out, *args):
    return cli.main([*args, "--out", str(out)])


def report(out):
    return json.loads((out / "report.json").read_text())


class TestProfile:
    def test_euclidean_regular(self, out):
        assert run(out, "profile", "--surface", "euclidean", "--mode", "translator", "--r-end", "10") == 0
        assert report(out)["profile"]["endpoint_class"]["kind"] == "regular"
        assert (out / "profile.csv").exists() and (out / "profile.json").exists() and (out / "plot.gp").exists()

    def test_spherical_vertical_tangent(self, out):
        assert run(out, "profile", "--surface", "spherical", "--mode", "translator", "--r-end", "3.0") == 0
        assert report(out)["profile"]["endpoint_class"]["kind"] == "vertical_tangent"

    def test_blowup_family(self, out):
        assert run(out, "profile", "--surface", "hyperbolic", "--mode", "cmc", "--h0=-1.4142", "--family", "blowup") == 0
        b = report(out)["branch"]
        assert b["r_star"] == pytest.approx(0.881374, abs=1e-4)
        assert b["kappa"] == pytest.approx(1.41421, abs=1e-4)

    def test_surface_file(self, out, tmp_path):
        cfg = tmp_path / "s.json"
        cfg.write_text(json.dumps({"kind": "custom", "params": {"expression": "sinh(r)", "r_max": 10.0}}))
        assert run(out, "profile", "--surface", str(cfg), "--r-end", "3") == 0

    def test_cmc_without_h0_is_config_error(self, out):
        assert run(out, "profile", "--mode", "cmc") == 3

    def test_outside_chart_fails(self, out):
        assert run(out, "profile", "--surface", "spherical", "--r-end", "4.0") != 0


class TestCheck:
    def test_grim_reaper_identities(self, out):
        assert run(out, "check", "--suite", "identities", "--asset", "grim-reaper") == 0
        rep = report(out)
        assert rep["status"] == "PASS" and rep["seed"] == 0
        assert (out / "checks.csv").exists()

    def test_flat_slice_zero_residuals(self, out):
        assert run(out, "check", "--suite", "identities", "--asset", "flat-slice") == 0
        res = next(c for c in report(out)["checks"] if c["check_name"] == "minimal_residual")
        assert max(res["max_error"]) == 0.0

    def test_hemisphere_monitor_fails_with_hypothesis_failure(self, out):
        assert run(out, "check", "--suite", "monitor", "--asset", "hemisphere") == 1
        assert report(out)["checks"][0]["monitor_status"] == "HYPOTHESIS_FAILURE"

    @pytest.mark.parametrize("grids", ["9,17", "65,33"])
    def test_bad_grids(self, out, grids):
        assert run(out, "check", "--grids", grids) == 3


class TestProbe:
    def test_grim_reaper(self, out):
        assert run(out, "probe", "--asset", "grim-reaper", "--levels", "2,4,6") == 0
        rep = report(out)
        assert rep["dichotomy"]["outcome"] == "AllPlus" and rep["pass"]
        assert (out / "level_curves.csv").exists()

    def test_catalog_cmc_branch_is_inconclusive(self, out):
        assert run(out, "probe", "--asset", "hyperbolic-cmc-blowup", "--h0=-1.4142") == 2
        assert "not allow a graph" in report(out)["diagnostic"]

    def test_unknown_edge(self, out):
        assert run(out, "probe", "--asset", "scherk", "--edge", "z") == 3

    def test_asset_without_edges(self, out):
        assert run(out, "probe", "--asset", "bowl") == 3


class TestSweep:
    def test_euclidean_radii(self, out):
        assert run(out, "sweep", "--kind", "cmc-blowup", "--surface", "euclidean", "--h0-list=-0.5,-1,-2", "--workers", "1") == 0
        radii = [e["r_star"] for e in report(out)["entries"]]
        assert radii == pytest.approx([2.0, 1.0, 0.5], abs=1e-6)
        assert (out / "entry-002" / "report.json").exists()
        assert len((out / "summary.csv").read_text().splitlines()) == 4

    def test_empty(self, out):
        assert run(out, "sweep", "--kind", "cmc-blowup", "--h0-list=") == 0
        assert (out / "summary.csv").read_text().splitlines() == ["H0,r_star,kappa,B,admissible,pass"]


class TestConfig:
    def test_file_then_flags(self, out, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text('surface = "spherical"\nr_end = 1.0\nseed = 7\n')
        assert cli.main(["profile", "--config", str(cfg), "--r-end", "1.2", "--out", str(out)]) == 0
        conf = report(out)["config"]
        assert conf["surface"] == "spherical" and conf["r_end"] == 1.2 and conf["seed"] == 7

    def test_env_overrides_out(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
        assert cli.main(["sweep", "--h0-list=", "--out", str(tmp_path / "flag")]) == 0
        assert (tmp_path / "env" / "report.json").exists()
        assert not (tmp_path / "flag").exists()

    def test_unknown_key(self, out, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"colour": "red"}))
        assert cli.main(["profile", "--config", str(cfg), "--out", str(out)]) == 3

    def test_negative_tolerance(self, out):
        assert run(out, "profile", "--tol", "-1") == 3

    def test_bad_flag(self, out):
        assert cli.main(["probe", "--nope"]) == 3

    def test_report_has_no_paths(self, out):
        run(out, "sweep", "--h0-list=-1")
        assert str(out) not in (out / "report.json").read_text()


def test_unparsable_config(tmp_path):
    bad = tmp_path / "x.toml"
    bad.write_text("= nope")
    assert cli.main(["profile", "--config", str(bad), "--out", str(tmp_path)]) == 3
