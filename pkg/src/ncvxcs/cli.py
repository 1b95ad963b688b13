"""Command-line driver: ``ncvxcs <subcommand> [options]``.

Every run resolves its configuration as defaults < config file < flags, writes
results to ``--out`` (stdout when omitted) and emits a manifest JSON
(``<out>.manifest.json``, or one line on stderr without ``--out``).

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from ._io import text_sink
from .penalty import Family, PenaltySpec, threshold_field
from .replica import SaddleError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
N_WARN = 20_000


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- option groups ------------------------------------------------------------------

def _grid_list(text: str) -> list[float]:
    """``start:end:step`` (inclusive) or a comma list."""
    text = str(text).strip()
    if ":" not in text:
        return [float(v) for v in text.split(",") if v.strip()]
    parts = [float(v) for v in text.split(":")]
    if len(parts) != 3:
        raise ValueError(f"grid {text!r} must read start:end:step")
    start, end, step = parts
    if step == 0 or (end - start) * step < 0:
        raise ValueError(f"grid step {step} does not move {start} towards {end}")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


_PENALTY = [("--family", dict(type=str, help="scad, mcp or l1")),
            ("--lambda", dict(dest="lam", type=float, help="penalty strength lambda")),
            ("--a", dict(type=float, help="nonconvexity parameter a (ignored for l1)"))]
_MODEL = [("--alpha", dict(type=float, help="measurement ratio M/N")),
          ("--rho", dict(type=float, help="signal density")),
          ("--sigma-x2", dict(dest="sigma_x2", type=float, help="variance of nonzero entries"))]
_GRID = [("--v-max", dict(dest="v_max", type=float)), ("--eps-max", dict(dest="eps_max", type=float)),
         ("--v-min", dict(dest="v_min", type=float)), ("--eps-min", dict(dest="eps_min", type=float)),
         ("--nv", dict(type=int)), ("--ne", dict(type=int)),
         ("--spacing", dict(type=str, choices=["linear", "log"]))]

_BASE = {"family": "scad", "lam": None, "a": 3.0, "sigma_x2": 1.0, "out": None,
         "format": "csv", "jobs": 1, "dry_run": False}
_GRID_DEFAULTS = {"v_max": None, "eps_max": None, "v_min": 0.0, "eps_min": 0.0,
                  "nv": 50, "ne": 50, "spacing": "linear"}

COMMANDS = {
    "prox": dict(help="evaluate a threshold operator",
                 opts=_PENALTY + [("--s", dict(type=float)), ("--w", dict(type=float))],
                 defaults={"s": 1.0, "w": None, "format": "text"},
                 required=["lam", "w"]),
    "amp": dict(help="run AMP on a synthetic instance",
                opts=_PENALTY + _MODEL + [
                    ("--n", dict(type=int, help="signal dimension N")),
                    ("--seed", dict(type=int)),
                    ("--schedule", dict(type=str, help='"start:step:end@k" or JSON segment list')),
                    ("--max-iters", dict(dest="max_iters", type=int)),
                    ("--tol", dict(type=float)),
                    ("--damping", dict(type=float)),
                    ("--v-init", dict(dest="v_init", type=float)),
                    ("--instance", dict(type=str, help="load a dumped instance instead of generating")),
                    ("--dump-instance", dict(dest="dump_instance", type=str)),
                    ("--require-success", dict(dest="require_success", action="store_true"))],
                defaults={"n": 10_000, "seed": 0, "schedule": None, "max_iters": 1000, "tol": 1e-12,
                          "damping": 1.0, "v_init": None, "instance": None, "dump_instance": None,
                          "require_success": False, "alpha": None, "rho": None},
                required=["alpha", "rho"]),
    "se-run": dict(help="iterate state evolution",
                   opts=_PENALTY + _MODEL + [
                       ("--v0", dict(type=float)), ("--eps0", dict(type=float)),
                       ("--init", dict(type=str, choices=["caption", "matched"])),
                       ("--schedule", dict(type=str)),
                       ("--max-iters", dict(dest="max_iters", type=int))],
                   defaults={"v0": None, "eps0": None, "init": "caption", "schedule": None,
                             "max_iters": 5000, "alpha": None, "rho": None},
                   required=["alpha", "rho"]),
    "se-flow": dict(help="SE flow field on a grid", opts=_PENALTY + _MODEL + _GRID,
                    defaults={**_GRID_DEFAULTS, "alpha": None, "rho": None},
                    required=["lam", "alpha", "rho"]),
    "basin": dict(help="basin-of-attraction map",
                  opts=_PENALTY + _MODEL + _GRID + [("--max-iters", dict(dest="max_iters", type=int)),
                                                    ("--summary", dict(type=str))],
                  defaults={**_GRID_DEFAULTS, "alpha": None, "rho": None, "max_iters": 5000,
                            "summary": None},
                  required=["lam", "alpha", "rho"]),
    "continue": dict(help="fixed-point continuation in lambda",
                     opts=_PENALTY[:1] + _PENALTY[2:] + _MODEL + [
                         ("--lam-start", dict(dest="lam_start", type=float)),
                         ("--lam-end", dict(dest="lam_end", type=float)),
                         ("--lam-step", dict(dest="lam_step", type=float)),
                         ("--max-iters", dict(dest="max_iters", type=int))],
                     defaults={"lam_start": 1.0, "lam_end": 0.1, "lam_step": 0.002,
                               "max_iters": 5000, "alpha": None, "rho": None},
                     required=["alpha", "rho"]),
    "saddle": dict(help="solve the replica saddle-point equations",
                   opts=_PENALTY + _MODEL + [("--damping", dict(type=float)),
                                             ("--max-sweeps", dict(dest="max_sweeps", type=int))],
                   defaults={"damping": 0.5, "max_sweeps": 100_000, "format": "json",
                             "alpha": None, "rho": None},
                   required=["lam", "alpha", "rho"]),
    "success": dict(help="success-solution variance and stability", opts=_PENALTY + _MODEL,
                    defaults={"format": "json", "alpha": None, "rho": None},
                    required=["lam", "alpha", "rho"]),
    "phase": dict(help="alpha_c over a rho grid, or rho_c over an alpha grid",
                  opts=_PENALTY + [("--sigma-x2", dict(dest="sigma_x2", type=float)),
                                   ("--rho-grid", dict(dest="rho_grid", type=str)),
                                   ("--alpha-grid", dict(dest="alpha_grid", type=str)),
                                   ("--tol", dict(type=float))],
                  defaults={"rho_grid": None, "alpha_grid": None, "tol": 1e-5},
                  required=["lam"]),
    "boundary": dict(help="a_c over a lambda grid, or lambda_c over a rho grid",
                     opts=[_PENALTY[0]] + _MODEL + [
                         ("--kind", dict(type=str, choices=["a_c", "lambda_c"])),
                         ("--lambda-grid", dict(dest="lambda_grid", type=str)),
                         ("--rho-grid", dict(dest="rho_grid", type=str))],
                     defaults={"kind": "a_c", "lambda_grid": None, "rho_grid": None,
                               "alpha": None, "rho": None},
                     required=["alpha"]),
    "ncc": dict(help="reconstruction limit under nonconvexity control",
                opts=[_PENALTY[0], _PENALTY[2]] + [
                    ("--alpha", dict(type=float)), ("--sigma-x2", dict(dest="sigma_x2", type=float)),
                    ("--a-values", dict(dest="a_values", type=str, help="comma list; maximise over a")),
                    ("--lam-start", dict(dest="lam_start", type=float)),
                    ("--lam-end", dict(dest="lam_end", type=float)),
                    ("--lam-step", dict(dest="lam_step", type=float)),
                    ("--tol", dict(type=float))],
                defaults={"a_values": None, "lam_start": 1.0, "lam_end": 0.1, "lam_step": 0.002,
                          "tol": 1e-3, "format": "json", "alpha": None},
                required=["alpha"]),
}


def build_parser() -> argparse.ArgumentParser:
    sup = argparse.SUPPRESS
    parser = _Parser(prog="ncvxcs", description="Nonconvex compressed sensing experiments.")
    parser.add_argument("--version", action="version", version=f"ncvxcs {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, spec in COMMANDS.items():
        sp = sub.add_parser(name, help=spec["help"], argument_default=sup)
        for flag, kw in spec["opts"]:
            sp.add_argument(flag, **kw)
        sp.add_argument("--config", type=str, help="flat key=value file (overridden by flags)")
        sp.add_argument("--out", type=str, help="output path (default stdout)")
        sp.add_argument("--format", type=str, choices=["csv", "json", "text"])
        sp.add_argument("--jobs", type=int, help="worker processes for grid commands")
        sp.add_argument("--dry-run", dest="dry_run", action="store_true",
                        help="validate and print the resolved plan only")
    return parser


# -- config resolution ----------------------------------------------------------------

def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{k}: expected key=value, got {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _coerce(sub: argparse.ArgumentParser, key: str, raw: str):
    for act in sub._actions:
        if act.dest == key:
            if isinstance(act, argparse._StoreTrueAction):
                return str(raw).lower() in ("1", "true", "yes", "on")
            value = act.type(raw) if act.type else raw
            if act.choices and value not in act.choices:
                raise ConfigError(f"config {key}={raw!r}: choose one of {list(act.choices)}")
            return value
    raise ConfigError(f"unknown config key {key!r}")


def resolve(argv) -> tuple[str, dict]:
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    cmd = ns.pop("command", None)
    if cmd is None:
        raise ConfigError("missing subcommand; run `ncvxcs --help` for the list")
    spec = COMMANDS[cmd]
    cfg = {**_BASE, **spec["defaults"]}
    path = ns.pop("config", None)
    if path:
        sub = parser._subparsers._group_actions[0].choices[cmd]
        aliases = {"lambda": "lam"}
        for key, raw in read_config(path).items():
            key = aliases.get(key, key)
            try:
                cfg[key] = _coerce(sub, key, raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config {key}={raw!r}: {exc}") from None
    cfg.update(ns)
    if path:
        cfg["config"] = path
    for key in spec["required"]:
        if cfg.get(key) is None:
            flag = "--lambda" if key == "lam" else "--" + key.replace("_", "-")
            raise ConfigError(f"missing required parameter {flag} for `{cmd}`")
    cfg["family"] = Family.parse(cfg["family"]).value
    if cfg["jobs"] < 1:
        raise ConfigError("--jobs must be at least 1")
    return cmd, cfg


def _penalty(cfg, lam=None) -> PenaltySpec:
    fam = Family.parse(cfg["family"])
    lam = cfg["lam"] if lam is None else lam
    return PenaltySpec(fam, lam, math.inf if fam is Family.L1 else cfg["a"])


def _schedule(cfg):
    from .schedule import ControlSchedule
    a = math.inf if cfg["family"] == "l1" else cfg["a"]
    if cfg.get("schedule"):
        if cfg.get("lam") is not None:
            raise ConfigError("--schedule and --lambda conflict; give one of them")
        return ControlSchedule.parse(cfg["schedule"], a=a)
    if cfg.get("lam") is None:
        raise ConfigError("give --lambda or --schedule")
    return ControlSchedule.constant(cfg["lam"], a)


# -- output ---------------------------------------------------------------------------

def _sink(path):
    return text_sink(path or sys.stdout)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_rows(cfg, header, rows) -> None:
    with _sink(cfg["out"]) as fh:
        if cfg["format"] == "json":
            json.dump([dict(zip(header, r)) for r in rows], fh, indent=2, default=_json_default)
            fh.write("\n")
            return
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _write_json(cfg, obj) -> None:
    with _sink(cfg["out"]) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _emit_via(cfg, writer) -> None:
    """Run a ``write_csv``-style ``writer`` on ``--out`` or stdout."""
    writer(cfg["out"] or sys.stdout)


def write_manifest(cmd, cfg, wall) -> dict:
    man = {"command": cmd, "resolved_config": cfg, "seed": cfg.get("seed"),
           "version": __version__, "wall_time_s": wall}
    text = json.dumps(man, sort_keys=True, default=_json_default)
    if cfg["out"]:
        with open(cfg["out"] + ".manifest.json", "w") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=sys.stderr)
    return man


def _pmap(fn, items, jobs):
    """Order-preserving map, in worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
        return list(ex.map(fn, items))


# -- subcommands -------------------------------------------------------------------

def run_prox(cfg):
    p = _penalty(cfg)
    if not cfg["s"] > 0:
        raise ConfigError("--s must be positive")
    r = threshold_field(cfg["s"], cfg["w"], p)
    if cfg["format"] == "text":
        with _sink(cfg["out"]) as fh:
            fh.write(f"x*={r.x_star!r}, region={r.region.value}, sigma={r.sigma_factor!r}\n")
    else:
        _write_json(cfg, {"x_star": r.x_star, "region": r.region.value,
                          "sigma_factor": r.sigma_factor})


def run_amp(cfg):
    from .amp import AmpOptions, amp_run, success_indicator
    from .instance import EnsembleParams, dump_instance, gen_instance, load_instance
    sched = _schedule(cfg)
    if cfg["instance"]:
        inst = load_instance(cfg["instance"])
    else:
        if cfg["n"] > N_WARN:
            warnings.warn(f"N={cfg['n']} exceeds {N_WARN}; the dense matrix needs "
                          f"{8 * cfg['alpha'] * cfg['n'] ** 2 / 2 ** 30:.1f} GiB")
        inst = gen_instance(EnsembleParams(cfg["n"], cfg["alpha"], cfg["rho"],
                                           cfg["sigma_x2"], cfg["seed"]))
    if cfg["dump_instance"]:
        dump_instance(inst, cfg["dump_instance"])
    opts = AmpOptions(max_iters=cfg["max_iters"], tol=cfg["tol"], damping=cfg["damping"],
                      v_init=cfg["v_init"])
    rep = amp_run(inst, sched, cfg["family"], opts)
    _emit_via(cfg, rep.write_csv)
    print(f"status={rep.status.value} iterations={rep.iterations} final_mse={rep.final_mse:.6g}",
          file=sys.stderr)
    if cfg["require_success"] and not success_indicator(rep):
        raise NumericalFailure(f"AMP did not reach mse <= 1e-8 ({rep.status.value})")


def run_se(cfg):
    from .state_evolution import SeOptions, SePoint, se_run, se_trajectory
    a, r, sx2 = cfg["alpha"], cfg["rho"], cfg["sigma_x2"]
    if cfg["init"] == "matched":
        v0, e0 = r * sx2, r * sx2
    else:
        v0, e0 = r / a, r / a
    start = SePoint(cfg["v0"] if cfg["v0"] is not None else v0,
                    cfg["eps0"] if cfg["eps0"] is not None else e0)
    if cfg["schedule"]:
        sched = _schedule(cfg)
        traj = se_trajectory(start, sched, cfg["family"], a, r, sx2, n_iters=cfg["max_iters"])
        rows = [(0, sched.segments[0].lam, sched.segments[0].a, start.V, start.eps)]
        rows += [(t, pen.lam, pen.a, pt.V, pt.eps) for t, pen, pt in traj]
        _write_rows(cfg, ["t", "lambda", "a", "V", "eps"], rows)
        return
    p = _penalty(cfg)
    out = se_run(start, p, a, r, sx2, SeOptions(max_iters=cfg["max_iters"], keep_trace=True))
    rows = [(t, p.lam, p.a, pt.V, pt.eps) for t, pt in enumerate(out.trace)]
    _write_rows(cfg, ["t", "lambda", "a", "V", "eps"], rows)
    print(f"class={out.classification.value} iterations={out.iters} {out.reason}".rstrip(),
          file=sys.stderr)


def _grid(cfg):
    from .state_evolution import GridSpec, default_grid
    d = default_grid(cfg["alpha"], cfg["rho"], cfg["sigma_x2"])
    return GridSpec(v_hi=cfg["v_max"] or d.v_hi, e_hi=cfg["eps_max"] or d.e_hi,
                    nv=cfg["nv"], ne=cfg["ne"], v_lo=cfg["v_min"], e_lo=cfg["eps_min"],
                    spacing=cfg["spacing"])


def run_flow(cfg):
    from .state_evolution import flow_field
    ff = flow_field(_grid(cfg), _penalty(cfg), cfg["alpha"], cfg["rho"], cfg["sigma_x2"])
    _emit_via(cfg, ff.write_csv)


def run_basin(cfg):
    from .state_evolution import SeOptions, basin_map
    bm = basin_map(_grid(cfg), _penalty(cfg), cfg["alpha"], cfg["rho"], cfg["sigma_x2"],
                   SeOptions(max_iters=cfg["max_iters"]))
    _emit_via(cfg, bm.write_csv)
    summary = cfg["summary"] or (cfg["out"] + ".summary.json" if cfg["out"] else None)
    if summary:
        bm.write_json(summary)
    print(f"volume={bm.volume:.6g} eps_max={bm.eps_max:.6g}", file=sys.stderr)


def run_continue(cfg):
    from .schedule import lambda_path
    from .state_evolution import SeOptions, fixed_point_continuation
    a = math.inf if cfg["family"] == "l1" else cfg["a"]
    lams = lambda_path(cfg["lam_start"], cfg["lam_end"], cfg["lam_step"])
    cont = fixed_point_continuation(lams, a, cfg["family"], cfg["alpha"], cfg["rho"],
                                    cfg["sigma_x2"], opts=SeOptions(max_iters=cfg["max_iters"]))
    _emit_via(cfg, cont.write_csv)
    gaps = ", ".join(f"({u:g}, {lo:g})" for u, lo in cont.gap_intervals()) or "none"
    print(f"gaps={gaps} reached_success={cont.reached_success}", file=sys.stderr)


def run_saddle(cfg):
    from .replica import SaddleOptions, solve_saddle
    sol = solve_saddle(_penalty(cfg), cfg["alpha"], cfg["rho"], cfg["sigma_x2"],
                       opts=SaddleOptions(damping=cfg["damping"], max_sweeps=cfg["max_sweeps"]))
    _write_json(cfg, sol.to_dict())
    if sol.status in ("diverged", "max_sweeps", "inadmissible"):
        raise NumericalFailure(f"saddle-point iteration ended with status {sol.status}")


def run_success(cfg):
    from .replica import BracketError, solve_success
    try:
        s = solve_success(_penalty(cfg), cfg["alpha"], cfg["rho"], cfg["sigma_x2"])
        obj = {"exists": True, "chit": s.chit, "theta_minus": s.theta_minus,
               "theta_plus": s.theta_plus, "stable": s.stable,
               "stability_lhs": s.stability_lhs, "method": s.method}
    except BracketError as exc:
        obj = {"exists": False, "stable": False, "reason": str(exc)}
    _write_json(cfg, obj)


def _phase_point(args):
    from .replica import alpha_c, rho_c
    kind, x, p, sx2, tol = args
    f = alpha_c if kind == "alpha_c" else rho_c
    return f(x, p, sx2, tol=tol)


def run_phase(cfg):
    if bool(cfg["rho_grid"]) == bool(cfg["alpha_grid"]):
        raise ConfigError("give exactly one of --rho-grid and --alpha-grid")
    p = _penalty(cfg)
    kind, xs = (("alpha_c", _grid_list(cfg["rho_grid"])) if cfg["rho_grid"]
                else ("rho_c", _grid_list(cfg["alpha_grid"])))
    vals = _pmap(_phase_point, [(kind, x, p, cfg["sigma_x2"], cfg["tol"]) for x in xs], cfg["jobs"])
    head = ["rho", "alpha_c"] if kind == "alpha_c" else ["alpha", "rho_c"]
    rows = [(x, v, p.family.value, p.lam, p.a) for x, v in zip(xs, vals)]
    _write_rows(cfg, head + ["family", "lambda", "a"], rows)


def _boundary_point(args):
    from .replica import a_c_of_lambda, lambda_c
    kind, x, alpha, rho, fam, sx2 = args
    if kind == "a_c":
        return a_c_of_lambda(x, alpha, rho, fam, sx2)
    return lambda_c(alpha, x, fam, sx2)


def run_boundary(cfg):
    fam = cfg["family"]
    if fam == "l1":
        raise ConfigError("boundary needs a nonconvex family (scad or mcp)")
    if cfg["kind"] == "a_c":
        if not cfg["lambda_grid"] or cfg["rho"] is None:
            raise ConfigError("a_c needs --lambda-grid and --rho")
        if cfg["rho_grid"]:
            raise ConfigError("--rho-grid conflicts with --kind a_c; use --rho")
        xs = _grid_list(cfg["lambda_grid"])
        jobs = [("a_c", x, cfg["alpha"], cfg["rho"], fam, cfg["sigma_x2"]) for x in xs]
        vals = _pmap(_boundary_point, jobs, cfg["jobs"])
        _write_rows(cfg, ["lambda", "a_c", "family", "alpha", "rho"],
                    [(x, v, fam, cfg["alpha"], cfg["rho"]) for x, v in zip(xs, vals)])
    else:
        if not cfg["rho_grid"]:
            raise ConfigError("lambda_c needs --rho-grid")
        if cfg["lambda_grid"]:
            raise ConfigError("--lambda-grid conflicts with --kind lambda_c")
        xs = _grid_list(cfg["rho_grid"])
        jobs = [("lambda_c", x, cfg["alpha"], None, fam, cfg["sigma_x2"]) for x in xs]
        vals = _pmap(_boundary_point, jobs, cfg["jobs"])
        _write_rows(cfg, ["rho", "lambda_c", "family", "alpha"],
                    [(x, v, fam, cfg["alpha"]) for x, v in zip(xs, vals)])


def _ncc_point(args):
    from .replica import ncc_limit
    alpha, a, fam, kw = args
    return ncc_limit(alpha, a, fam, detail=True, **kw)


def run_ncc(cfg):
    fam = cfg["family"]
    kw = dict(sigma_x2=cfg["sigma_x2"], lam_start=cfg["lam_start"], lam_end=cfg["lam_end"],
              lam_step=cfg["lam_step"], tol=cfg["tol"])
    a_values = _float_list(cfg["a_values"]) if cfg["a_values"] else [cfg["a"]]
    if fam == "l1":
        a_values = [math.inf]
    res = _pmap(_ncc_point, [(cfg["alpha"], a, fam, kw) for a in a_values], cfg["jobs"])
    per_a = {("inf" if math.isinf(a) else _fmt(a)): {"ncc_limit": r.value, "history": r.history}
             for a, r in zip(a_values, res)}
    best = max(r.value for r in res)
    _write_json(cfg, {"family": fam, "alpha": cfg["alpha"], "ncc_limit": best, "per_a": per_a})


RUNNERS = {"prox": run_prox, "amp": run_amp, "se-run": run_se, "se-flow": run_flow,
           "basin": run_basin, "continue": run_continue, "saddle": run_saddle,
           "success": run_success, "phase": run_phase, "boundary": run_boundary, "ncc": run_ncc}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cmd, cfg = resolve(argv)
        if cmd in ("amp", "se-run"):
            _schedule(cfg)   # surface schedule conflicts before any work
        elif cmd not in ("continue", "phase", "boundary", "ncc"):
            _penalty(cfg)
        if cfg["dry_run"]:
            print(json.dumps({"command": cmd, "plan": cfg}, indent=2, sort_keys=True,
                             default=_json_default))
            return EXIT_OK
        t0 = time.perf_counter()
        RUNNERS[cmd](cfg)
        write_manifest(cmd, cfg, time.perf_counter() - t0)
        return EXIT_OK
    except (NumericalFailure, SaddleError) as exc:
        print(f"ncvxcs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OSError) as exc:
        print(f"ncvxcs: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
