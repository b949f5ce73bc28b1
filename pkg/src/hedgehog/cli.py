"""Command-line front end.

    hedgehog solve|verify|scan|signchange|plot [--config FILE | --preset NAME]
             [--out DIR] [--jobs K] [--seed S]

Exit codes: 0 success / pass, 1 computation failure, 2 usage or config error.
The environment variable HEDGEHOG_OUT overrides --out.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import asymptotics as asy
from . import energy as en
from . import plotting
from . import qtensor as qt
from . import signchange as sc
from . import solve as slv
from . import verify as vf
from .grid import DiscreteProblem, build_grid, nodal_derivative, residual
from .nonlinearity import InvalidModelError, NonlinearityModel

log = logging.getLogger("hedgehog")

SCHEMA = 1


class ConfigError(ValueError):
    pass


PRESETS = {
    "physical-a0": {
        "schema": 1,
        "problem": {"p": 2.0, "q": 6.0, "domain": {"kind": "infinite", "R_max": 600.0},
                    "model": {"kind": "physical-cubic", "a2": 0.0, "b2": 1.0, "c2": 1.0,
                              "elastic_rescale": 1.0}},
        "solver": {"method": "newton", "N": 2000, "grading": "geometric", "r_first": None,
                   "tol": None, "far_bc": "robin", "origin_bc": "frobenius-ratio"},
        "scan": {"parameter": "a2", "start": 0.0, "stop": 1.0, "steps": 11},
        "outputs": {"directory": "hedgehog-out", "formats": ["csv", "json", "svg", "txt"]},
        "seed": 0,
    },
    "physical-a1": {
        "schema": 1,
        "problem": {"p": 2.0, "q": 6.0, "domain": {"kind": "infinite", "R_max": 600.0},
                    "model": {"kind": "physical-cubic", "a2": 1.0, "b2": 1.0, "c2": 1.0,
                              "elastic_rescale": 1.0}},
        "solver": {"method": "newton", "N": 2000, "grading": "geometric", "r_first": None,
                   "tol": None, "far_bc": "robin", "origin_bc": "frobenius-ratio"},
        "scan": {"parameter": "a2", "start": 0.0, "stop": 1.0, "steps": 11},
        "outputs": {"directory": "hedgehog-out", "formats": ["csv", "json", "svg", "txt"]},
        "seed": 0,
    },
    "pneg-multi": {
        "schema": 1,
        "problem": {"p": -1.0, "q": 3.0, "domain": {"kind": "finite", "R": 10.0},
                    "model": {"kind": "custom-polynomial",
                              "coefficients": [0.0, -1.0, 0.0, 0.6666666666666666],
                              "s_plus": 1.224744871391589}},
        "solver": {"method": "shoot", "N": 2000, "grading": "uniform", "r_first": None,
                   "tol": None, "far_bc": "robin", "origin_bc": "frobenius-ratio"},
        "signchange": {"mode": "multi-shoot", "samples": 240, "decades": 5.0},
        "outputs": {"directory": "hedgehog-out", "formats": ["csv", "json", "svg", "txt"]},
        "seed": 0,
    },
    "quartic-mp": {
        "schema": 1,
        "problem": {"p": 2.0, "q": 6.0, "domain": {"kind": "finite", "R": 5.0},
                    "model": {"kind": "quartic-mp", "coefficients": [0.0, -1.0, 0.0, 0.0, 1.0],
                              "s_plus": 1.0}},
        "solver": {"method": "newton", "N": 2000, "grading": "uniform", "r_first": None,
                   "tol": None, "far_bc": "robin", "origin_bc": "frobenius-ratio"},
        "signchange": {"mode": "deflation", "attempts": 3},
        "outputs": {"directory": "hedgehog-out", "formats": ["csv", "json", "svg", "txt"]},
        "seed": 0,
    },
}

METHODS = ("newton", "shoot", "energy-descent")


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing config field: {where}{key}")
    return d[key]


def _num(x, where, cast=float):
    try:
        v = cast(x)
    except (TypeError, ValueError):
        raise ConfigError(f"config field {where} must be numeric, got {x!r}") from None
    if isinstance(v, float) and not math.isfinite(v):
        raise ConfigError(f"config field {where} must be finite")
    return v


@dataclass
class RunConfig:
    """Validated run configuration; ``raw`` keeps the exact file content."""
    raw: dict
    p: float = 2.0
    q: float = 6.0
    infinite: bool = True
    R: Optional[float] = None
    model: Optional[NonlinearityModel] = None
    solver: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        schema = _req(d, "schema", "")
        if schema != SCHEMA:
            raise ConfigError(f"unsupported schema {schema!r} (expected {SCHEMA})")
        prob = _req(d, "problem", "")
        p = _num(_req(prob, "p", "problem."), "problem.p")
        q = _num(_req(prob, "q", "problem."), "problem.q")
        if not q > 0:
            raise ConfigError("config field problem.q must be positive")
        dom = _req(prob, "domain", "problem.")
        kind = _req(dom, "kind", "problem.domain.")
        if kind == "infinite":
            R = _num(_req(dom, "R_max", "problem.domain."), "problem.domain.R_max")
            infinite = True
        elif kind == "finite":
            R = _num(_req(dom, "R", "problem.domain."), "problem.domain.R")
            infinite = False
        else:
            raise ConfigError(f"config field problem.domain.kind must be finite|infinite, got {kind!r}")
        if not R > 0:
            raise ConfigError("domain radius must be positive")
        md = _req(prob, "model", "problem.")
        _req(md, "kind", "problem.model.")
        try:
            model = NonlinearityModel.from_dict(md)
        except KeyError as exc:
            raise ConfigError(f"missing config field: problem.model.{exc.args[0]}") from None
        except (InvalidModelError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid model: {exc}") from None
        solver = dict(_req(d, "solver", ""))
        method = _req(solver, "method", "solver.")
        if method not in METHODS:
            raise ConfigError(f"config field solver.method must be one of {METHODS}")
        solver["N"] = _num(_req(solver, "N", "solver."), "solver.N", int)
        if solver["N"] < 16:
            raise ConfigError("config field solver.N must be >= 16")
        solver.setdefault("grading", "geometric")
        for key in ("r_first", "tol"):
            if solver.get(key) is not None:
                solver[key] = _num(solver[key], f"solver.{key}")
        solver.setdefault("far_bc", "robin")
        solver.setdefault("origin_bc", "frobenius-ratio")
        outputs = dict(d.get("outputs", {}))
        outputs.setdefault("directory", "hedgehog-out")
        outputs.setdefault("formats", ["csv", "json", "svg", "txt"])
        seed = _num(d.get("seed", 0), "seed", int)
        return cls(d, p, q, infinite, R, model, solver, outputs, seed)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(d)

    def dump(self, path) -> None:
        Path(path).write_text(dumps_json(self.raw))

    # -- problem construction ---------------------------------------------------

    def grid(self):
        s = self.solver
        far = asy.far_field_beta(self.model, self.q) if self.infinite else None
        try:
            return build_grid(self.R, s["N"], s["grading"], infinite=self.infinite,
                              r_first=s.get("r_first"), far_field=far)
        except ValueError as exc:
            raise ConfigError(f"invalid grid settings: {exc}") from None

    def problem(self) -> DiscreteProblem:
        s = self.solver
        try:
            return DiscreteProblem(self.grid(), self.p, self.q, self.model, s["far_bc"],
                                   s["origin_bc"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def fmt(x) -> str:
    """Shortest round-trip decimal; missing values as nan."""
    if x is None:
        return "nan"
    return repr(float(x))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer))
                                                        and not isinstance(v, bool) else fmt(v))
                         for v in row])


# -- solving ---------------------------------------------------------------------


def run_solver(cfg: RunConfig) -> slv.ProfileSolution:
    dp = cfg.problem()
    method = cfg.solver["method"]
    if method == "newton":
        sol = slv.solve_newton(dp, tol=cfg.solver.get("tol"))
    elif method == "energy-descent":
        sol = slv.solve_energy_descent(dp)
    else:
        sol = slv.solve_shoot(cfg.model, cfg.p, cfg.q, R=None if cfg.infinite else cfg.R,
                              grid=dp.grid)
    try:
        sol.energy = en.energy(sol).E
    except ValueError:
        sol.energy = None
    return sol


def solution_rows(sol):
    r = sol.grid.nodes
    u = sol.values
    rf = sol.grid.with_origin()
    du = nodal_derivative(rf, np.concatenate(([0.0], u)))[1:]
    w = r * du / np.where(u != 0, u, np.nan)
    dp = sol.problem or DiscreteProblem(sol.grid, sol.p, sol.q, sol.model)
    res = residual(dp, u)
    header = ["r", "u", "u_prime", "w", "residual"]
    cols = [r, u, du, w, res]
    if sol.model.is_zero and not sol.grid.infinite:
        g = asy.fuchsian_indices(sol.p, sol.q).gamma_plus
        header.append("u_exact")
        cols.append(sol.model.s_plus * (r / sol.grid.R) ** g)
    return header, list(zip(*cols))


def summary_of(sol, cfg: RunConfig) -> dict:
    d = sol.summary()
    d.update({"p": sol.p, "q": sol.q, "s_plus": sol.model.s_plus, "model": sol.model.to_dict(),
              "grid": sol.grid.to_dict()})
    if sol.grid.infinite:
        d["beta_far_field"] = asy.far_field_beta(sol.model, sol.q).beta
    if sol.model.is_zero and not sol.grid.infinite:
        g = asy.fuchsian_indices(sol.p, sol.q).gamma_plus
        exact = sol.model.s_plus * (sol.grid.nodes / sol.grid.R) ** g
        d["max_error_vs_exact"] = float(np.max(np.abs(sol.values - exact)))
    meta = {k: v for k, v in sol.meta.items() if isinstance(v, (int, float, str, bool))}
    if meta:
        d["meta"] = meta
    return d


# -- commands -----------------------------------------------------------------------


def _out_dir(cfg: RunConfig, args) -> Path:
    d = os.environ.get("HEDGEHOG_OUT") or args.out or cfg.outputs.get("directory")
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _wants(cfg, fmt_name):
    return fmt_name in cfg.outputs.get("formats", [])


def cmd_solve(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    sol = run_solver(cfg)
    header, rows = solution_rows(sol)
    write_csv(out / "solution.csv", header, rows)
    summary = summary_of(sol, cfg)
    (out / "summary.json").write_text(dumps_json(summary))
    if _wants(cfg, "svg"):
        plotting.plot_solution(out / "solution.csv", out, summary)
    print(f"solved: method={sol.method} iterations={sol.iterations} "
          f"residual_norm={sol.residual_norm:.3e} alpha={sol.alpha_origin} beta={sol.beta}")
    return 0


def _load_solution_csv(path, cfg: RunConfig) -> slv.ProfileSolution:
    header, rows = plotting.read_csv(path)
    if "r" not in header or "u" not in header:
        raise ConfigError(f"{path} is not a solution CSV")
    r = np.array([float(row[header.index("r")]) for row in rows])
    u = np.array([float(row[header.index("u")]) for row in rows])
    kind = "truncated-infinite" if cfg.infinite else "finite"
    ratio = r[1:] / r[:-1]
    geometric = np.allclose(ratio, ratio[0], rtol=1e-9)
    from .grid import RadialGrid
    grid = RadialGrid(r, kind, "geometric" if geometric else "uniform",
                      float(ratio[0]) if geometric else None)
    dp = DiscreteProblem(grid, cfg.p, cfg.q, cfg.model, cfg.solver["far_bc"], cfg.solver["origin_bc"])
    return slv._finish(dp, u, float(np.linalg.norm(residual(dp, u))), "file", 0)


def radial_symmetry_check(sol, seed: int, samples: int = 16, rotations: int = 4):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(samples, 3))
    radii = rng.uniform(0.0, sol.grid.R, size=samples)
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * radii[:, None]
    fld = qt.RadialQField(sol, pts)
    rots = [qt.random_rotation(rng) for _ in range(rotations)]
    return qt.check_radial_symmetry(fld, rots, tol_rel=1e-10)


def cmd_verify(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    if args.files:
        sol = _load_solution_csv(args.files[0], cfg)
    else:
        sol = run_solver(cfg)
    rep = vf.run_all(sol)
    rep.checks.append(radial_symmetry_check(sol, cfg.seed if args.seed is None else args.seed))
    (out / "verify_report.json").write_text(rep.to_json() + "\n")
    table = rep.to_table()
    (out / "verify_report.txt").write_text(table + "\n")
    print(table)
    return 0 if rep.overall else 1


def _scan_values(cfg: RunConfig, args):
    sc_cfg = dict(cfg.raw.get("scan", {}))
    if args.parameter:
        sc_cfg["parameter"] = args.parameter
    if args.range:
        sc_cfg["start"], sc_cfg["stop"] = args.range
        sc_cfg.pop("values", None)
    if args.steps:
        sc_cfg["steps"] = args.steps
        sc_cfg.pop("values", None)
    par = sc_cfg.get("parameter")
    if par is None:
        raise ConfigError("missing config field: scan.parameter")
    if "values" in sc_cfg:
        vals = [float(v) for v in sc_cfg["values"]]
    else:
        for k in ("start", "stop", "steps"):
            if k not in sc_cfg:
                raise ConfigError(f"missing config field: scan.{k}")
        vals = [float(v) for v in np.linspace(float(sc_cfg["start"]), float(sc_cfg["stop"]),
                                              int(sc_cfg["steps"]))]
    return par, vals


def cmd_scan(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    par, vals = _scan_values(cfg, args)
    try:
        sols = slv.continuation_scan(cfg.problem(), par, vals, jobs=args.jobs)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    rows = []
    for v, s in zip(vals, sols):
        bff = asy.far_field_beta(s.model, s.q).beta if s.grid.infinite else None
        rows.append([v, s.alpha_origin, s.beta, bff, s.energy, s.lambda_min])
    write_csv(out / "scan.csv", [par, "alpha", "beta", "beta_far_field", "energy", "lambda_min"],
              rows)
    if _wants(cfg, "svg"):
        plotting.plot_scan(out / "scan.csv", out)
    print(f"scan over {par}: {len(sols)} points written")
    return 0


def cmd_signchange(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    opts = cfg.raw.get("signchange", {})
    mode = opts.get("mode", "multi-shoot" if cfg.p < 0 else "deflation")
    if cfg.infinite:
        raise ConfigError("sign-changing searches need a finite domain")
    if mode == "deflation":
        dp = cfg.problem()
        sset = sc.deflated_newton_search(dp, attempts=int(opts.get("attempts", 3)))
        ok = any(c > 0 for c in sset.sign_change_counts)
    elif mode == "multi-shoot":
        alphas = None
        if "samples" in opts or "decades" in opts:
            alphas = sc.default_alpha_samples(cfg.model, cfg.p, cfg.q, cfg.R,
                                              int(opts.get("samples", 240)),
                                              float(opts.get("decades", 5.0)))
        sset = sc.multi_shoot_scan(cfg.model, cfg.p, cfg.q, cfg.R, alphas,
                                   N=cfg.solver["N"], grading=cfg.solver["grading"],
                                   jobs=args.jobs)
        ok = len(sset) >= 2
    else:
        raise ConfigError(f"config field signchange.mode must be deflation|multi-shoot, got {mode!r}")
    rows, summary = [], []
    for k, s in enumerate(sset.solutions):
        e = en.energy(s).E
        summary.append([k, sc.count_sign_changes(s), e, s.residual_norm, s.alpha_origin])
        rows.extend([k, float(r), float(u)] for r, u in zip(s.grid.nodes, s.values))
    write_csv(out / "branches.csv", ["branch_id", "r", "u"], rows)
    write_csv(out / "branches_summary.csv",
              ["branch_id", "sign_changes", "energy", "residual_norm", "alpha"], summary)
    if _wants(cfg, "svg") and rows:
        plotting.plot_branches(out / "branches.csv", out)
    for line in summary:
        print(f"branch {line[0]}: sign_changes={line[1]} energy={line[2]:.6g} "
              f"residual={line[3]:.2e}")
    for note in sset.notes:
        print(f"note: {note}")
    return 0 if ok else 1


def cmd_plot(cfg: Optional[RunConfig], args) -> int:
    if not args.files:
        raise ConfigError("plot needs at least one CSV file")
    for f in args.files:
        path = Path(f)
        if not path.exists():
            raise ConfigError(f"no such file: {f}")
        out = Path(os.environ.get("HEDGEHOG_OUT") or args.out or path.parent)
        out.mkdir(parents=True, exist_ok=True)
        header, _ = plotting.read_csv(path)
        try:
            kind = plotting.detect_kind(header)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if kind == "solution":
            sp = path.parent / "summary.json"
            summary = json.loads(sp.read_text()) if sp.exists() else None
            written = plotting.plot_solution(path, out, summary, stem=path.stem)
        elif kind == "branches":
            written = plotting.plot_branches(path, out, stem=path.stem)
        else:
            written = plotting.plot_scan(path, out, stem=path.stem)
        for w in written:
            print(f"wrote {w}")
    return 0


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "scan": cmd_scan,
            "signchange": cmd_signchange, "plot": cmd_plot}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hedgehog", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("files", nargs="*", help="solution CSV (verify) or CSV files to plot")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON run configuration (schema 1)")
    src.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--out", help="output directory (HEDGEHOG_OUT overrides)")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--parameter", choices=slv.SCAN_PARAMETERS, help="scan parameter")
    ap.add_argument("--range", nargs=2, type=float, metavar=("START", "STOP"))
    ap.add_argument("--steps", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> Optional[RunConfig]:
    if args.config:
        cfg = RunConfig.load(args.config)
    elif args.preset:
        cfg = RunConfig.from_dict(copy.deepcopy(PRESETS[args.preset]))
    else:
        return None
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args)
        if cfg is None and args.command != "plot":
            raise ConfigError("one of --config or --preset is required")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (slv.SolverError, asy.ExtractionUnstableError, en.IterationStallError,
            ArithmeticError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
