"""Command-line front end: ``translator-lab {profile,check,probe,sweep}``.

Exit codes: 0 pass, 1 failure, 2 inconclusive, 3 configuration error.
Reports are written with sorted keys and ``repr`` floats and carry no
timestamps, so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import assets as asset_registry
from . import boundary_probe as bp
from . import checks
from . import soliton_profiles as sp
from . import warped_surface as ws

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python < 3.11
    import tomli as tomllib

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_CONFIG = 0, 1, 2, 3
OUT_ENV = "TRANSLATOR_LAB_OUT"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    surface: str = "euclidean"
    mode: str = "translator"
    h0: float | None = None
    r_start: float = 0.0
    p_start: float = 0.0
    r_end: float = 10.0
    tol: float = 1e-10
    family: str = "none"
    suite: str = "identities"
    asset: str = "grim-reaper"
    edge: str | None = None
    levels: list | None = None
    grids: list = field(default_factory=lambda: [65, 129, 257])
    seed: int = 0
    count: int = 100
    kind: str = "cmc-blowup"
    h0_list: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    workers: int | None = None
    out: str = "translator_lab_out"

    def validate(self):
        if not self.tol > 0:
            raise ConfigError("tolerances must be positive")
        if any(int(n) < 17 for n in self.grids):
            raise ConfigError("grid sizes must be at least 17 per axis")
        if self.grids != sorted(self.grids):
            raise ConfigError("grids must be increasing")
        if self.count < 0:
            raise ConfigError("count must be nonnegative")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be positive")
        return self

    def public(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return d


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    text = str(text).strip()
    return [float(x) for x in text.split(",") if x.strip()] if text else []


def _ints(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    text = str(text).strip()
    return [int(x) for x in text.split(",") if x.strip()] if text else []


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="translator-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML or JSON file with option defaults")
        p.add_argument("--out", help=f"output directory (overridden by ${OUT_ENV})")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("profile", help="solve a radial profile")
    common(p)
    p.add_argument("--surface", help="catalog name or surface config file")
    p.add_argument("--mode", choices=["translator", "minimal", "cmc"])
    p.add_argument("--h0", type=float)
    p.add_argument("--r-start", type=float)
    p.add_argument("--p-start", type=float)
    p.add_argument("--r-end", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--family", choices=["none", "blowup"])

    p = sub.add_parser("check", help="run an identity suite on an asset")
    common(p)
    p.add_argument("--suite", choices=["identities", "conformal", "sectional", "monitor"])
    p.add_argument("--asset", choices=asset_registry.ASSET_NAMES)
    p.add_argument("--surface")
    p.add_argument("--grids", type=_ints)
    p.add_argument("--count", type=int, help="number of random test functions")

    p = sub.add_parser("probe", help="probe level curves near a blow-up arc")
    common(p)
    p.add_argument("--asset", choices=asset_registry.ASSET_NAMES)
    p.add_argument("--edge")
    p.add_argument("--levels", type=_floats)
    p.add_argument("--h0", type=float)

    p = sub.add_parser("sweep", help="parameter sweep with a worker pool")
    common(p)
    p.add_argument("--kind", choices=["cmc-blowup", "graphic-identity"])
    p.add_argument("--surface")
    p.add_argument("--h0-list", type=_floats)
    p.add_argument("--seeds", type=_ints)
    p.add_argument("--grids", type=_ints)
    p.add_argument("--workers", type=int)
    return parser


def _load_config_file(path: str) -> dict:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode()) if p.suffix.lower() == ".toml" else json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a table/object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags, then ``$TRANSLATOR_LAB_OUT``."""
    cfg = RunConfig(args.command)
    known = set(RunConfig.__dataclass_fields__) - {"command"}
    file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    converters = {"grids": _ints, "seeds": _ints, "levels": _floats, "h0_list": _floats}
    for key, value in file_values.items():
        setattr(cfg, key, converters[key](value) if key in converters and value is not None else value)
    for key in known:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if os.environ.get(OUT_ENV):
        cfg.out = os.environ[OUT_ENV]
    try:
        cfg.tol = float(cfg.tol)
        cfg.seed = int(cfg.seed)
        cfg.count = int(cfg.count)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


# --- output helpers -------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def write_plot(path: Path, title: str, series) -> None:
    """Gnuplot script; ``series`` is a list of ``(csv_name, using, label)``."""
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "plot " + ", \\\n     ".join(f"'{name}' using {using} with linespoints title '{label}'" for name, using, label in series),
        "",
    ]
    path.write_text("\n".join(lines))


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _surface(name: str) -> ws.WarpedSurface:
    p = Path(name)
    if p.suffix.lower() in (".toml", ".json"):
        try:
            return ws.load_surface(p)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad surface file {name}: {exc}") from exc
    try:
        return ws.catalog(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _mode(cfg: RunConfig) -> sp.Mode:
    try:
        return sp.mode_from_name(cfg.mode, cfg.h0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --- commands -------------------------------------------------------------------------


def cmd_profile(cfg: RunConfig) -> int:
    s = _surface(cfg.surface)
    mode = _mode(cfg)
    out = _outdir(cfg)
    report = {"command": "profile", "config": cfg.public(), "surface": s.label, "mode": mode.to_dict()}
    if cfg.family == "blowup":
        if mode.kind != "cmc":
            raise ConfigError("--family blowup needs --mode cmc")
        try:
            branch = sp.cmc_blowup_family(s, mode.H0)
        except ValueError as exc:
            report.update({"status": "FAIL", "error": str(exc)})
            write_json(out / "report.json", report)
            return EXIT_FAIL
        report["branch"] = branch._asdict()
        report["kappa_minus_abs_h0"] = branch.kappa - abs(mode.H0)
        if branch.admissible:
            r_a = cfg.r_start if cfg.r_start > 0 else 0.75 * branch.r_star
            try:
                prof = sp.blowup_branch_profile(s, mode.H0, r_a, cfg.tol)
            except sp.NotAGraphError as exc:
                report["branch_profile"] = {"error": str(exc)}
            else:
                prof.write(out / "profile")
                report["branch_profile"] = prof.sidecar()
                write_plot(out / "plot.gp", "blow-up branch", [("profile.csv", "1:2", "u")])
        else:
            report["branch_profile"] = {"note": "tangency branch is not a graph near r*; the circle is still computed"}
        report["status"] = "PASS"
        write_json(out / "report.json", report)
        print(f"r* = {branch.r_star!r}  kappa = {branch.kappa!r}  B = {branch.B!r}  admissible = {branch.admissible}")
        return EXIT_PASS
    try:
        prof = sp.solve_radial(s, mode, cfg.r_start, cfg.p_start, cfg.r_end, cfg.tol)
    except sp.InconclusiveError as exc:
        report.update({"status": "INCONCLUSIVE", "error": str(exc), "fit": exc.report})
        write_json(out / "report.json", report)
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (sp.IntegrationError, ws.ChartError) as exc:
        report.update({"status": "FAIL", "error": str(exc)})
        write_json(out / "report.json", report)
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    prof.write(out / "profile")
    report.update({"status": "PASS", "profile": prof.sidecar()})
    write_json(out / "report.json", report)
    write_plot(out / "plot.gp", f"{mode} profile on {s.label}", [("profile.csv", "1:2", "u"), ("profile.csv", "1:3", "u_r")])
    ep = prof.endpoint
    print(f"endpoint {ep.kind} at r = {ep.r!r}; max residual {prof.max_residual:.3e}")
    return EXIT_PASS


def _asset(cfg: RunConfig, surface=None):
    try:
        return asset_registry.get_asset(cfg.asset, surface=surface, seed=cfg.seed, H0=cfg.h0)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


def _exit_for(status: str) -> int:
    return {"PASS": EXIT_PASS, "FAIL": EXIT_FAIL, "INCONCLUSIVE": EXIT_INCONCLUSIVE}[status]


def cmd_check(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    surface = cfg.surface if cfg.asset in ("radial-translator", "random-graph") and cfg.surface != "euclidean" else None
    if cfg.asset == "radial-translator" and surface is None:
        surface = "euclidean"
    try:
        if cfg.suite == "sectional":
            results = checks.sectional_suite(cfg.seed)
            name = "catalog"
        else:
            asset = _asset(cfg, surface)
            name = asset.name
            if cfg.suite == "identities":
                results = checks.identities_suite(asset, cfg.grids)
            elif cfg.suite == "conformal":
                results = checks.conformal_suite(asset, cfg.grids, cfg.seed, cfg.count)
            else:
                results = [checks.monitor_check(asset, cfg.grids[-1] if len(cfg.grids) else 129)]
    except sp.InconclusiveError as exc:
        results = [{"check_name": cfg.suite, "status": "INCONCLUSIVE", "pass": False, "error": str(exc)}]
        name = cfg.asset
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    status = checks.overall(results)
    report = {"command": "check", "suite": cfg.suite, "asset": name, "seed": cfg.seed, "config": cfg.public(), "checks": results, "status": status}
    write_json(out / "report.json", report)
    rows = []
    for c in results:
        errs = c.get("max_error") or [c.get("max_rel_err", c.get("min_lhs", ""))]
        rows.append([c["check_name"], c["status"], c.get("order_estimate", ""), errs[-1] if errs else ""])
    write_csv(out / "checks.csv", ["check_name", "status", "order_estimate", "final_error"], rows)
    for c in results:
        order = c.get("order_estimate")
        extra = f" order {order:.3f}" if isinstance(order, float) else ""
        print(f"{c['check_name']}: {c['status']}{extra}")
    print(f"overall: {status}")
    return _exit_for(status)


def _probe_report(cfg, asset, levels):
    return {"command": "probe", "asset": asset.name, "mode": asset.mode.to_dict(), "seed": cfg.seed, "config": cfg.public(), "levels": levels}


def cmd_probe(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    asset = None
    try:
        asset = _asset(cfg)
        source = asset.radial() if asset.radial is not None else asset.build(257)
    except sp.NotAGraphError as exc:
        name = asset.name if asset else cfg.asset
        report = {"command": "probe", "asset": name, "config": cfg.public(), "seed": cfg.seed, "status": "INCONCLUSIVE", "diagnostic": str(exc)}
        write_json(out / "report.json", report)
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    if not asset.edges:
        raise ConfigError(f"asset {asset.name!r} has no blow-up arc to probe")
    edge_name = cfg.edge or next(iter(asset.edges))
    if edge_name not in asset.edges:
        raise ConfigError(f"asset {asset.name!r} has edges {sorted(asset.edges)}")
    edge = asset.edges[edge_name]
    if cfg.levels:
        levels = [float(c) for c in cfg.levels]
    elif isinstance(source, sp.RadialProfile):
        top = float(source.u[-1])
        levels = [top - 3.0, top - 2.0, top - 1.0]
    else:
        levels = [edge.sign * c for c in asset.default_levels]
    report = _probe_report(cfg, asset, levels)
    report["edge"] = edge_name
    status = "PASS"
    dich = bp.sign_dichotomy_check(source, edge.gamma, edge.inward)
    report["dichotomy"] = dich.to_dict()
    expected = bp.Dichotomy.ALL_PLUS if edge.sign > 0 else bp.Dichotomy.ALL_MINUS
    if dich.outcome is not expected:
        status = "FAIL"
    curves = []
    try:
        fit = bp.limit_curvature_classify(source, levels, asset.mode, window=edge.window)
    except sp.InconclusiveError as exc:
        report.update({"status": "INCONCLUSIVE", "diagnostic": str(exc), "data": exc.report})
        write_json(out / "report.json", report)
        return EXIT_INCONCLUSIVE
    except bp.ProbeError as exc:
        report["limit"] = {"error": str(exc)}
        status = "FAIL"
    else:
        report.update(
            {
                "kappa_per_level": fit.kappa_per_level,
                "kappa_inf": fit.kappa_inf,
                "target": fit.target,
                "tol": fit.tol,
                "fit": fit.to_dict(),
            }
        )
        curves = [cv for group in fit.curves for cv in group]
        if not fit.passed:
            status = "FAIL"
    if isinstance(source, bp.GraphPatch) and status != "FAIL":
        from .graph_geometry import angle_function

        report["theta_bands"] = bp.theta_level_bands(source, angle_function(source), [0.0] + [abs(c) for c in levels] if edge.sign > 0 else sorted(levels) + [0.0])
    report["pass"] = status == "PASS"
    report["status"] = status
    write_json(out / "report.json", report)
    write_csv(out / "level_curves.csv", ["level", "a", "b", "arclength", "kappa_g"], (row for cv in curves for row in cv.to_rows()))
    write_plot(out / "plot.gp", f"level curves of {asset.name}", [("level_curves.csv", "2:3", "level curves")])
    kinf = report.get("kappa_inf")
    print(f"kappa_inf = {kinf!r}  dichotomy = {dich.outcome.value}  {status}")
    return _exit_for(status)


def _sweep_entry(args):
    kind, index, value, surface, grids, out = args
    entry_dir = Path(out) / f"entry-{index:03d}"
    entry_dir.mkdir(parents=True, exist_ok=True)
    if kind == "cmc-blowup":
        s = ws.catalog(surface)
        b = sp.cmc_blowup_family(s, value)
        rec = {"H0": value, "r_star": b.r_star, "kappa": b.kappa, "B": b.B, "admissible": b.admissible}
        rec["pass"] = abs(b.kappa - abs(value)) < 1e-6
    else:
        asset = asset_registry.get_asset("random-graph", surface=surface, seed=int(value))
        c = checks.graphic_identity_check(asset, grids)
        rec = {"seed": int(value), "order": c["order_estimate"], "max_error": c["max_error"][-1], "pass": c["pass"]}
    write_json(entry_dir / "report.json", rec)
    return rec


def cmd_sweep(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    if cfg.kind == "cmc-blowup":
        values = list(cfg.h0_list)
        columns = ["H0", "r_star", "kappa", "B", "admissible", "pass"]
    else:
        values = list(cfg.seeds)
        columns = ["seed", "order", "max_error", "pass"]
    surface = cfg.surface
    _surface(surface)
    tasks = [(cfg.kind, i, v, surface, list(cfg.grids), str(out)) for i, v in enumerate(values)]
    if tasks and (cfg.workers or os.cpu_count() or 1) > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers or os.cpu_count()) as pool:
            rows = list(pool.map(_sweep_entry, tasks))
    else:
        rows = [_sweep_entry(t) for t in tasks]
    status = "PASS" if all(r["pass"] for r in rows) else "FAIL"
    write_json(out / "report.json", {"command": "sweep", "kind": cfg.kind, "surface": surface, "seed": cfg.seed, "config": cfg.public(), "entries": rows, "status": status})
    write_csv(out / "summary.csv", columns, ([r[c] for c in columns] for r in rows))
    for r in rows:
        print("  ".join(f"{c}={r[c]!r}" for c in columns))
    print(f"{len(rows)} entries: {status}")
    return _exit_for(status)


COMMANDS = {"profile": cmd_profile, "check": cmd_check, "probe": cmd_probe, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
