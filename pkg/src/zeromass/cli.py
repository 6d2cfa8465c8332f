"""Command-line front end: config parsing, artifact persistence, and the
sequential experiment pipeline.

Every artifact starts with a config-hash header so reruns are attributable;
deterministic stages are bit-identical for a fixed seed. Exit codes follow
the convention 0 success, 1 scientific failure, 2 usage or config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ConfigError, NumericalError
from .fields import kernel_overlap_scan
from .functionals import rho_lower_bound, sobolev_constant
from .limit_problem import ground_state, ode_residual
from .nonlinearity import builtin_model, check_f_hypotheses
from .potential import check_V_hypotheses, model_potential
from .projection import project, projection_landscape, two_bump_projection_scan
from .search import (SearchOpts, VERDICT_CONVERGED, grid_field_from_profile,
                     level_diagnostics, minimize_on_manifold)
from .two_bump import TwoBumpConfig, interaction_suite

_GEOMETRIES = ("collinear", "perpendicular", "custom")


@dataclass(frozen=True)
class RunConfig:
    n: int = 3
    model: str = "rational_asymlinear"
    potential_kind: str = "model"
    potential_scale: float = 1.0
    potential_decay: float = 3.0
    tol_root: float = 1e-10
    tol_resid: float = 6e-3
    r_scan: tuple = (8.0, 16.0, 32.0, 64.0)
    lambda_points: int = 17
    geometry: str = "collinear"
    y_point: tuple = ()
    out: str = "runs"
    seed: int = 12345
    jobs: int = 1
    search_separation: float = 2.0
    search_max_iter: int = 4000

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError(f"need N >= 3, got {self.n}")
        for key in ("tol_root", "tol_resid"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        if not self.r_scan:
            raise ConfigError("R-scan must not be empty")
        if list(self.r_scan) != sorted(self.r_scan):
            raise ConfigError("R-scan must be sorted ascending")
        if self.lambda_points < 3:
            raise ConfigError("lambda grid needs at least 3 points")
        if self.geometry not in _GEOMETRIES:
            raise ConfigError(f"geometry must be one of {_GEOMETRIES}")
        if self.geometry == "custom":
            y = np.asarray(self.y_point, dtype=float)
            if y.shape != (self.n,):
                raise ConfigError("custom geometry needs scan.y with N entries")
            e1 = np.zeros(self.n)
            e1[0] = 1.0
            if abs(np.linalg.norm(y - e1) - 2.0) > 1e-9:
                raise ConfigError("scan.y must satisfy |y - e1| = 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.search_max_iter < 1:
            raise ConfigError("search.max_iter must be >= 1")

    def pair_directions(self):
        """Unit y0 plus the second direction at center distance exactly 2."""
        y0 = np.zeros(self.n)
        y0[0] = 1.0
        if self.geometry == "collinear":
            y = -y0
        elif self.geometry == "perpendicular":
            y = np.zeros(self.n)
            y[1] = math.sqrt(3.0)
        else:
            y = np.asarray(self.y_point, dtype=float)
        return tuple(y0), tuple(y)


_KEY_MAP = {
    "run.n": ("n", int),
    "run.seed": ("seed", int),
    "run.out": ("out", str),
    "run.jobs": ("jobs", int),
    "model.name": ("model", str),
    "potential.kind": ("potential_kind", str),
    "potential.scale": ("potential_scale", float),
    "potential.decay": ("potential_decay", float),
    "tol.root": ("tol_root", float),
    "tol.residual": ("tol_resid", float),
    "scan.r": ("r_scan", "floats"),
    "scan.lambda_points": ("lambda_points", int),
    "scan.geometry": ("geometry", str),
    "scan.y": ("y_point", "floats"),
    "search.separation": ("search_separation", float),
    "search.max_iter": ("search_max_iter", int),
}


def parse_config_text(text: str) -> dict:
    """Flat dotted key = value lines; '#' starts a comment."""
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_MAP:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in updates:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        attr, kind = _KEY_MAP[key]
        try:
            if kind == "floats":
                parsed = tuple(float(tok) for tok in val.split(",") if tok.strip())
            elif kind is int:
                parsed = int(val)
            elif kind is float:
                parsed = float(val)
            else:
                parsed = val
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for '{key}': {exc}")
        updates[attr] = parsed
    return updates


def load_config(path: str | None, **overrides) -> RunConfig:
    updates = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        updates = parse_config_text(p.read_text())
    for key, val in overrides.items():
        if val is not None:
            updates[key] = val
    return RunConfig(**updates)


def config_hash(cfg: RunConfig) -> str:
    """Hash of the result-determining keys only; where the artifacts land
    and how many workers ran must not change their identity."""
    parts = []
    for f in sorted(dc_fields(cfg), key=lambda f: f.name):
        if f.name in ("out", "jobs"):
            continue
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join("%.17g" % v for v in val)
        parts.append(f"{f.name}={val}")
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()


def _version_line() -> str:
    return (f"zeromass={__version__} numpy={np.__version__} "
            f"scipy={scipy.__version__}")


def write_csv(path: Path, columns, rows, cfg_hash: str) -> None:
    lines = [f"# config_hash={cfg_hash}", f"# versions {_version_line()}",
             ",".join(columns)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (bool, np.bool_)):
                cells.append(str(bool(v)))
            else:
                cells.append("%.17g" % float(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict, cfg_hash: str) -> None:
    doc = {"config_hash": cfg_hash, "versions": _version_line(), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True,
                               default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _nl(cfg: RunConfig):
    return builtin_model(cfg.model)


def _pot(cfg: RunConfig):
    if cfg.potential_kind == "none":
        return None
    if cfg.potential_kind == "model":
        return model_potential(cfg.potential_decay, cfg.potential_scale,
                               N=cfg.n)
    raise ConfigError(f"unknown potential kind '{cfg.potential_kind}'")


class _Workspace:
    """Shared lazily-computed objects so subcommands compose cheaply."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.hash = config_hash(cfg)
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self._cache = {}

    def nl(self):
        if "nl" not in self._cache:
            self._cache["nl"] = _nl(self.cfg)
        return self._cache["nl"]

    def pot(self):
        if "pot" not in self._cache:
            self._cache["pot"] = _pot(self.cfg)
        return self._cache["pot"]

    def ground(self):
        if "ground" not in self._cache:
            self._cache["ground"] = ground_state(self.nl(), N=self.cfg.n)
        return self._cache["ground"]


def stage_check(ws: _Workspace) -> bool:
    cfg = ws.cfg
    rep_f = check_f_hypotheses(ws.nl())
    write_json(ws.out / "check_model.json",
               {"name": rep_f.name, "pass": rep_f.passed,
                "items": rep_f.as_dict()}, ws.hash)
    pot = ws.pot()
    ok_v = True
    if pot is not None:
        S = sobolev_constant(cfg.n)
        rep_v = check_V_hypotheses(pot, cfg.n, S, seed=cfg.seed,
                                   n_mc=200_000)
        ok_v = rep_v.passed
        write_json(ws.out / "check_potential.json",
                   {"name": rep_v.name, "pass": rep_v.passed,
                    "sobolev_constant": S, "items": rep_v.as_dict()}, ws.hash)
    return rep_f.passed and ok_v


def stage_limit(ws: _Workspace) -> dict:
    gs = ws.ground()
    prof = gs.profile
    resid = ode_residual(prof, ws.nl())
    write_csv(ws.out / "limit_profile.csv", ("r", "w", "dw"),
              zip(prof.nodes, prof.values, prof.derivs), ws.hash)
    summary = {
        "u0": gs.u0, "m": gs.m, "grad_norm_sq": gs.grad_norm_sq,
        "sup_norm": prof.sup_norm, "ode_residual": resid,
        "decay_exponent": prof.decay_exponent,
        "grad_decay_exponent": prof.grad_decay_exponent,
        "envelope_c": prof.envelope_c, "plateau_stat": prof.plateau_stat,
        "classification": prof.classification,
    }
    write_json(ws.out / "limit_summary.json", summary, ws.hash)
    return summary


def stage_interaction(ws: _Workspace) -> dict:
    cfg = ws.cfg
    gs = ws.ground()
    y0, y = cfg.pair_directions()
    cfgs = [TwoBumpConfig(y0=y0, y=y, lam=0.5, R=R) for R in cfg.r_scan]
    rep = interaction_suite(gs.profile, ws.nl(), cfgs)
    write_csv(ws.out / "interaction.csv",
              ("R", "epsilon", "grad_overlap", "cross", "cross_over_eps"),
              [(r.R, r.epsilon, r.grad_overlap, r.cross, r.cross_over_eps)
               for r in rep.rows], ws.hash)

    proj_rows = two_bump_projection_scan(gs.profile, None, ws.nl(),
                                         cfg.r_scan, lam=0.5)
    write_csv(ws.out / "projection_scan.csv",
              ("R", "s_star", "projected_energy"), proj_rows, ws.hash)

    scans = {}
    for alpha, beta in ((4.0, 2.0), (2.0, 2.0)):
        scan = kernel_overlap_scan(alpha, beta, y0, y, cfg.r_scan, N=cfg.n,
                                   seed=cfg.seed, jobs=cfg.jobs)
        tag = f"kernel_{alpha:g}_{beta:g}"
        write_csv(ws.out / f"{tag}.csv", ("R", "value", "err_est"),
                  [(row.R, row.value, row.err_est) for row in scan.rows],
                  ws.hash)
        scans[tag] = {"fitted_slope": scan.fit.slope,
                      "predicted_slope": scan.predicted_slope,
                      "method": scan.method}

    mc = kernel_overlap_scan(4.0, 2.0, y0, y, cfg.r_scan, N=cfg.n,
                             method="mc", seed=cfg.seed, jobs=cfg.jobs)
    scans["kernel_4_2_mc"] = {"fitted_slope": mc.fit.slope,
                              "predicted_slope": mc.predicted_slope,
                              "method": mc.method}
    write_csv(ws.out / "kernel_4_2_mc.csv", ("R", "value", "err_est"),
              [(row.R, row.value, row.err_est) for row in mc.rows], ws.hash)

    summary = rep.as_dict()
    summary["s_scan"] = [{"R": R, "s_star": s, "energy": e}
                         for R, s, e in proj_rows]
    summary["kernel_scans"] = scans
    summary["mc_vs_quadrature_slope_gap"] = abs(
        scans["kernel_4_2"]["fitted_slope"]
        - scans["kernel_4_2_mc"]["fitted_slope"])
    write_json(ws.out / "interaction_summary.json", summary, ws.hash)
    return summary


def stage_project(ws: _Workspace) -> dict:
    cfg = ws.cfg
    gs = ws.ground()
    fld = gs.field()
    free = project(fld, None, ws.nl())
    held = project(fld, ws.pot(), ws.nl())
    t = 1.7
    covariance_gap = abs(project(fld.dilate(t), None, ws.nl()).s_star * t
                         - free.s_star)
    summary = {
        "s_star_limit": free.s_star,
        "s_star_potential": held.s_star,
        "projected_energy_limit": free.projected_energy,
        "projected_energy_potential": held.projected_energy,
        "dilation_covariance_gap": covariance_gap,
        "unique_certificate": held.unique,
    }
    write_json(ws.out / "projection_summary.json", summary, ws.hash)
    return summary


def stage_landscape(ws: _Workspace) -> object:
    cfg = ws.cfg
    gs = ws.ground()
    grid = np.linspace(0.0, 1.0, cfg.lambda_points)
    rep = projection_landscape(gs.profile, ws.pot(), ws.nl(),
                               R=cfg.r_scan[-1], lambda_grid=grid)
    write_csv(ws.out / "landscape.csv",
              ("lambda", "s_star", "energy", "grad_norm", "barycenter_z",
               "unique"),
              [(c.lam, c.s_star, c.energy, c.grad_norm, c.barycenter_z,
                c.unique) for c in rep.cells if c.ok], ws.hash)
    doc = rep.as_dict()
    doc["rho_lower_bound"] = rho_lower_bound(ws.nl(), cfg.n)
    write_json(ws.out / "landscape_summary.json", doc, ws.hash)
    return rep


def stage_minimize(ws: _Workspace) -> tuple:
    cfg = ws.cfg
    gs = ws.ground()
    sep = cfg.search_separation
    u0 = grid_field_from_profile(gs.profile, ws.nl(), (-sep, sep),
                                 (1.0, 1.0), refine_z=(-sep / 2, sep / 2))
    opts = SearchOpts(max_iter=cfg.search_max_iter, tol_r=cfg.tol_resid,
                      symmetrize=True)
    state, verdict = minimize_on_manifold(u0, ws.pot(), ws.nl(), opts)
    write_csv(ws.out / "search_history.csv",
              ("iteration", "energy", "residual_norm", "barycenter_abs"),
              state.history, ws.hash)
    p0 = gs.m
    lo, hi = 1.001 * p0, 0.999 * 2.0 * p0
    converged = verdict == VERDICT_CONVERGED
    in_window = lo < state.energy < hi
    summary = {
        "verdict": verdict, "iterations": state.iteration,
        "energy": state.energy, "residual_norm": state.residual_norm,
        "barycenter": list(state.barycenter),
        "window": [lo, hi], "in_window": in_window,
        "existence_evidence": ("verified" if converged and in_window
                               else "inconclusive"),
    }
    write_json(ws.out / "search_summary.json", summary, ws.hash)
    return state, verdict, summary


def stage_level(ws: _Workspace, landscape_rep, runs) -> dict:
    cfg = ws.cfg
    rho = rho_lower_bound(ws.nl(), cfg.n)
    rep = level_diagnostics(ws.ground(), landscape_rep, runs, rho)
    write_json(ws.out / "level_report.json", rep.as_dict(), ws.hash)
    return rep.as_dict()


def cmd_check(ws: _Workspace) -> int:
    ok = stage_check(ws)
    print(f"hypothesis check: {'pass' if ok else 'FAIL'} "
          f"(reports in {ws.out})")
    return 0 if ok else 1


def cmd_limit(ws: _Workspace) -> int:
    summary = stage_limit(ws)
    print(f"limit solve: u0={summary['u0']:.12g} m={summary['m']:.12g} "
          f"residual={summary['ode_residual']:.3e}")
    return 0


def cmd_scan_interaction(ws: _Workspace) -> int:
    summary = stage_interaction(ws)
    print(f"interaction scan: eps_slope={summary['eps_slope']:+.4f} "
          f"grad_slope={summary['grad_slope']:+.4f} "
          f"ratio_decreasing={summary['ratio_decreasing']}")
    return 0


def cmd_project(ws: _Workspace) -> int:
    summary = stage_project(ws)
    print(f"projection: s*(V=0)={summary['s_star_limit']:.12g} "
          f"s*(V)={summary['s_star_potential']:.12g}")
    return 0


def cmd_landscape(ws: _Workspace) -> int:
    rep = stage_landscape(ws)
    print(f"landscape R={rep.R:g}: max={rep.max_energy:.6g} "
          f"eta={rep.eta:.6g} endpoints<={rep.endpoint_max:.6g}")
    return 0


def cmd_minimize(ws: _Workspace) -> int:
    _, verdict, summary = stage_minimize(ws)
    print(f"minimize: verdict={verdict} E={summary['energy']:.6g} "
          f"evidence={summary['existence_evidence']}")
    return 0


def cmd_pipeline(ws: _Workspace, force: bool) -> int:
    checks_ok = _tagged("check", stage_check, ws)
    if not checks_ok and not force:
        print("pipeline: hypothesis check failed; rerun with --force to "
              "continue anyway")
        return 1
    _tagged("limit", stage_limit, ws)
    _tagged("interaction", stage_interaction, ws)
    _tagged("project", stage_project, ws)
    landscape_rep = _tagged("landscape", stage_landscape, ws)
    state, verdict, search_summary = _tagged("minimize", stage_minimize, ws)
    level = _tagged("level", stage_level, ws, landscape_rep,
                    [(state, verdict)])
    ok = checks_ok and all(level["checks"].values())
    print(f"pipeline: checks={'pass' if ok else 'FAIL'} "
          f"evidence={search_summary['existence_evidence']} "
          f"artifacts in {ws.out}")
    return 0 if ok else 1


def cmd_report(out_dir: str) -> int:
    out = Path(out_dir)
    if not out.is_dir():
        raise ConfigError(f"no artifact directory at {out}")
    docs = sorted(out.glob("*.json"))
    if not docs:
        raise ConfigError(f"no JSON artifacts in {out}")
    for path in docs:
        doc = json.loads(path.read_text())
        keys = [k for k in doc if k not in ("config_hash", "versions")]
        print(f"{path.name}: " + ", ".join(
            _short(k, doc[k]) for k in keys[:6]))
    return 0


def _short(key, val):
    if isinstance(val, float):
        return f"{key}={val:.6g}"
    if isinstance(val, (list, dict)):
        return f"{key}[{len(val)}]"
    return f"{key}={val}"


def _tagged(tag, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except NumericalError as exc:
        raise type(exc)(f"[stage:{tag}] {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeromass",
        description="Variational solver and verification harness for "
                    "zero-mass nonlinear Schrodinger equations")
    parser.add_argument("--config", default=None, help="key = value file")
    parser.add_argument("--out", default=None, help="artifact directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--force", action="store_true",
                        help="run the pipeline past a failed hypothesis check")
    parser.add_argument("command",
                        choices=("check", "limit", "scan-interaction",
                                 "project", "landscape", "minimize",
                                 "pipeline", "report"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config, out=args.out, seed=args.seed,
                          jobs=args.jobs)
        if args.command == "report":
            return cmd_report(cfg.out)
        ws = _Workspace(cfg)
        dispatch = {
            "check": lambda: cmd_check(ws),
            "limit": lambda: cmd_limit(ws),
            "scan-interaction": lambda: cmd_scan_interaction(ws),
            "project": lambda: cmd_project(ws),
            "landscape": lambda: cmd_landscape(ws),
            "minimize": lambda: cmd_minimize(ws),
            "pipeline": lambda: cmd_pipeline(ws, args.force),
        }
        return dispatch[args.command]()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
