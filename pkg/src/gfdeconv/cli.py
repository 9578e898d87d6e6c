"""gfdeconv command line.

    gfdeconv COMMAND [--config PATH] [--out DIR] [--seed INT] [--n INT]
                     [--grid-N INT] [--grid-L FLOAT] [--reps INT]

Settings resolve flag > config file > built-in default. Exit status: 0 on
success, 1 on unknown command or failed selftest, 2 on invalid input, 3 when
a solver rejects the problem.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys

import numpy as np

from . import checks, studies
from .errors import SolverRejected, ValidationError
from .estimators import SampleSet, default_bandwidth, ecf
from .gf import GeneralizedFunction, PolyBound, weak_distance
from .grid import Grid
from .sim import DistributionSpec, RegressionSpec, error_cf, sample_classical, sample_model
from .solvers import SolverConfig, deconvolve_known_cf, metrics, solve_system

SCHEMA_VERSION = 1
COMMANDS = ("simulate", "deconvolve", "solve-system", "wellposed-demo", "convergence-study", "selftest")

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "n": 1000,
    "reps": 25,
    "out": "gfdeconv-out",
    "grid": {"dim": 1},  # L and N default per dimension
    "model": "regression",
    "regression": {"kind": "GaussianBump", "amplitude": 1.0, "center": 0.0, "width": 1.0},
    "errors": {"u": {"family": "Laplace", "scale": 1.0}},
    "law": {"family": "Gaussian", "scale": 1.0},
    "error": {"family": "Laplace", "scale": 1.0},
    "sigma_z": 2.0,
    "heteroskedastic": True,
    "bandwidth_c": 1.0,
    "estimate_bound": None,
    "solver": {"zeta": None, "tau": 1e-8, "T": None, "c": 1.0, "bound": None, "outside_window": "zero"},
    "mode": "known",
    "ladder": [250, 1000, 4000],
    "input": None,
    "steps": 5,
    "orders": [2, 3, 4, 5],
}

FLAG_KEYS = {"seed": "seed", "n": "n", "reps": "reps", "out": "out"}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"config schema_version must be {SCHEMA_VERSION}, got {version!r}")
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ValidationError(f"unknown config keys {sorted(unknown)}")
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = _merge(DEFAULTS, load_config(args.config))
    for flag, key in FLAG_KEYS.items():
        val = getattr(args, flag)
        if val is not None:
            cfg[key] = val
    if args.grid_N is not None:
        cfg["grid"]["N"] = args.grid_N
    if args.grid_L is not None:
        cfg["grid"]["L"] = args.grid_L
    if int(cfg["reps"]) < 1:
        raise ValidationError("reps must be >= 1")
    if int(cfg["n"]) < 1:
        raise ValidationError("n must be >= 1")
    return cfg


# --------------------------------------------------------------------------
# config -> domain objects


def _grid(cfg) -> Grid:
    g = cfg["grid"]
    unknown = set(g) - {"L", "N", "dim"}
    if unknown:
        raise ValidationError(f"unknown grid keys {sorted(unknown)}")
    base = Grid.default(int(g.get("dim", 1))) if g.get("dim", 1) in (1, 2) else None
    if base is None:
        raise ValidationError(f"grid dim must be 1 or 2, got {g.get('dim')!r}")
    return Grid(base.dim, float(g.get("L", base.half_width)), int(g.get("N", base.points)))


def _bound(d) -> PolyBound | None:
    if d is None:
        return None
    if not isinstance(d, dict) or set(d) - {"m", "V"}:
        raise ValidationError("a bound is {\"m\": int or list, \"V\": float}")
    return PolyBound(d.get("m", 0), float(d["V"]))


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise ValidationError("c must be a number or [re, im]")


def _solver(cfg) -> SolverConfig:
    s = cfg["solver"]
    unknown = set(s) - set(DEFAULTS["solver"])
    if unknown:
        raise ValidationError(f"unknown solver keys {sorted(unknown)}")
    return SolverConfig(zeta=s.get("zeta"), bound=_bound(s.get("bound")), tau=float(s.get("tau", 1e-8)),
                        cutoff=s.get("T"), c=_complex(s.get("c", 1.0)),
                        outside_window=s.get("outside_window", "zero"))


def _dist(d) -> DistributionSpec:
    if not isinstance(d, dict):
        raise ValidationError("a distribution is a JSON object with a 'family' key")
    return DistributionSpec.from_dict(d)


def _errors(cfg) -> dict:
    return {k: _dist(v) for k, v in cfg["errors"].items()}


def _regression(cfg) -> RegressionSpec:
    if not isinstance(cfg["regression"], dict):
        raise ValidationError("regression must be a JSON object")
    return RegressionSpec.from_dict(cfg["regression"])


def _design(cfg) -> studies.StudyDesign:
    return studies.StudyDesign(
        mode=cfg["mode"],
        grid=_grid(cfg),
        regression=_regression(cfg),
        errors=_errors(cfg),
        law=_dist(cfg["law"]),
        error=_dist(cfg["error"]),
        solver=_solver(cfg),
        estimate_bound=_bound(cfg["estimate_bound"]),
        bandwidth_c=float(cfg["bandwidth_c"]),
        sigma_z=float(cfg["sigma_z"]),
    )


# --------------------------------------------------------------------------
# output helpers


def _finite(v):
    """JSON-safe value: non-finite floats become None."""
    if isinstance(v, dict):
        return {k: _finite(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_finite(x) for x in v]
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_metrics(out_dir: str, payload: dict) -> str:
    path = os.path.join(out_dir, "metrics.json")
    text = json.dumps(_finite(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return path


def write_rows(path: str, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _public(cfg) -> dict:
    """Resolved config minus the output location, for metrics."""
    return {k: v for k, v in cfg.items() if k != "out"}


def _read_z(path: str) -> np.ndarray:
    """The z column (z1, z2 in 2-D) of a CSV with a header row."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path} holds no data rows")
    cols = ["z"] if "z" in rows[0] else [c for c in ("z1", "z2") if c in rows[0]]
    if not cols:
        raise ValidationError(f"{path} has no z column")
    try:
        return np.array([[float(r[c]) for c in cols] for r in rows]).squeeze(axis=1 if len(cols) == 1 else ())
    except ValueError as exc:
        raise ValidationError(f"non-numeric z value in {path}") from exc


def _load_samples(path: str) -> SampleSet:
    try:
        return SampleSet.from_csv(path)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except (KeyError, IndexError) as exc:
        raise ValidationError(f"{path} is not a dataset CSV: {exc}") from exc


# --------------------------------------------------------------------------
# commands


def cmd_simulate(cfg, out):
    grid = _grid(cfg)
    n, seed = int(cfg["n"]), int(cfg["seed"])
    if cfg["model"] == "classical":
        z = sample_classical(_dist(cfg["law"]), _dist(cfg["error"]), n, seed)
        write_rows(os.path.join(out, "dataset.csv"), ["z"], ([v] for v in z))
        summary = {"z_mean": float(z.mean()), "z_sd": float(z.std(ddof=1)) if n > 1 else 0.0}
    elif cfg["model"] == "regression":
        data = sample_model(_regression(cfg), _errors(cfg), n, seed, float(cfg["sigma_z"]), grid.dim,
                            bool(cfg["heteroskedastic"]))
        data.to_csv(os.path.join(out, "dataset.csv"))
        summary = {"y_mean": float(data.y.mean()), "z_sd": float(np.std(data.z, ddof=1)) if n > 1 else 0.0}
    else:
        raise ValidationError("model must be 'regression' or 'classical'")
    return {"command": "simulate", "config": _public(cfg), "summary": summary}


def cmd_deconvolve(cfg, out):
    grid = _grid(cfg)
    if grid.dim != 1:
        raise ValidationError("deconvolve works on the line")
    freq = grid.dual()
    truth = None
    if cfg["input"]:
        z = _read_z(cfg["input"])
    else:
        law = _dist(cfg["law"])
        z = sample_classical(law, _dist(cfg["error"]), int(cfg["n"]), int(cfg["seed"]))
        write_rows(os.path.join(out, "dataset.csv"), ["z"], ([v] for v in z))
        truth = law.as_generalized(grid)
    g_hat = deconvolve_known_cf(ecf(z, freq), error_cf(_dist(cfg["error"]), freq), _solver(cfg))
    g_hat.to_json(os.path.join(out, "ghat.json"))
    g_hat.regular.to_csv(os.path.join(out, "ghat.csv"))
    wd = weak_distance(g_hat, truth) if truth is not None else None
    return {"command": "deconvolve", "config": _public(cfg), "n": int(np.size(z)), **metrics(wd)}


def cmd_solve_system(cfg, out):
    grid = _grid(cfg)
    truth = None
    if cfg["input"]:
        data = _load_samples(cfg["input"])
    else:
        g = _regression(cfg)
        data = sample_model(g, _errors(cfg), int(cfg["n"]), int(cfg["seed"]), float(cfg["sigma_z"]), grid.dim,
                            bool(cfg["heteroskedastic"]))
        data.to_csv(os.path.join(out, "dataset.csv"))
        if g.kind != "Polynomial":
            truth = g.as_generalized(grid)
    kspec = default_bandwidth(data.z, float(cfg["bandwidth_c"]))
    sol = solve_system(data, _solver(cfg), grid, kspec, _bound(cfg["estimate_bound"]))
    sol.g_hat.to_json(os.path.join(out, "ghat.json"))
    sol.g_hat.regular.to_csv(os.path.join(out, "ghat.csv"))
    sol.phi_hat.to_csv(os.path.join(out, "phihat.csv"))
    wd = weak_distance(sol.g_hat, truth) if truth is not None else None
    rec = metrics(wd, sol.window, sol.clipped_fraction, sol.masked_fraction)
    return {"command": "solve-system", "config": _public(cfg), "n": data.n, "bandwidth": kspec.bandwidth,
            "zeta": sol.zeta, **rec}


def cmd_wellposed_demo(cfg, out):
    ill = studies.illposed_table(tuple(int(n) for n in cfg["orders"]))
    well = studies.wellposed_sequence(int(cfg["steps"]), int(cfg["seed"]), _dist(cfg["error"]), _grid(cfg))
    keys = ["n", "eps_functional", "eps_weak_distance", "gamma_functional", "lower_bound"]
    write_rows(os.path.join(out, "study.csv"), keys, ([r[k] for k in keys] for r in ill))
    wkeys = ["step", "eps_weak_distance", "gamma_weak_distance", "within_bound"]
    write_rows(os.path.join(out, "wellposed.csv"), wkeys, ([r[k] for k in wkeys] for r in well))
    g = [r["gamma_functional"] for r in ill]
    e = [r["eps_weak_distance"] for r in ill]
    wg = [r["gamma_weak_distance"] for r in well]
    return {
        "command": "wellposed-demo",
        "config": _public(cfg),
        "illposed": ill,
        "wellposed": well,
        "illposed_exceeds_bound": all(r["gamma_functional"] > r["lower_bound"] for r in ill),
        "illposed_gamma_increasing": all(b > a for a, b in zip(g, g[1:])),
        "illposed_eps_decreasing": all(b < a for a, b in zip(e, e[1:])),
        "wellposed_gamma_decreasing": all(b < a for a, b in zip(wg, wg[1:])),
        "wellposed_within_bound": all(r["within_bound"] for r in well),
    }


def cmd_convergence_study(cfg, out):
    res = studies.convergence_study(_design(cfg), cfg["ladder"], int(cfg["reps"]), int(cfg["seed"]))
    write_rows(os.path.join(out, "study.csv"), ["n", "rep", "seed", "weak_distance"], res.rows)
    return {
        "command": "convergence-study",
        "config": _public(cfg),
        "ladder": list(res.ladder),
        "median_weak_distance": list(res.medians),
        "rejected": list(res.rejected),
        "monotone_decreasing": res.monotone,
    }


def cmd_selftest(cfg, out):
    results = checks.run_all()
    rows = [(k, v["passed"], v["detail"]) for k, v in results.items()]
    write_rows(os.path.join(out, "selftest.csv"), ["check", "passed", "detail"], rows)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return {"command": "selftest", "checks": results, "passed": all(v["passed"] for v in results.values())}


HANDLERS = {
    "simulate": cmd_simulate,
    "deconvolve": cmd_deconvolve,
    "solve-system": cmd_solve_system,
    "wellposed-demo": cmd_wellposed_demo,
    "convergence-study": cmd_convergence_study,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gfdeconv", description="Deconvolution and errors-in-variables solvers.")
    p.add_argument("command", nargs="?", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--config", metavar="PATH", help="JSON run config (schema_version 1)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--grid-N", dest="grid_N", type=int, help="grid points per axis (power of two)")
    p.add_argument("--grid-L", dest="grid_L", type=float, help="grid half-width")
    p.add_argument("--reps", type=int, help="replications per sample size")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command not in HANDLERS:
        parser.print_usage(sys.stderr)
        print(f"gfdeconv: unknown command {args.command!r}; choose from {', '.join(COMMANDS)}", file=sys.stderr)
        return 1
    try:
        cfg = resolve(args)
        out = str(cfg["out"])
        os.makedirs(out, exist_ok=True)
        payload = HANDLERS[args.command](cfg, out)
    except ValidationError as exc:
        print(f"gfdeconv: invalid input: {exc}", file=sys.stderr)
        return 2
    except SolverRejected as exc:
        print(f"gfdeconv: solver rejected the problem: {exc}", file=sys.stderr)
        return 3
    except (TypeError, KeyError) as exc:
        print(f"gfdeconv: invalid config: {exc}", file=sys.stderr)
        return 2
    path = write_metrics(out, payload)
    print(path)
    if args.command == "selftest" and not payload["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
