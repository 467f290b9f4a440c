"""Command-line front end: ``corrdyn <command> [options]``.

Every command takes a correspondence (``--example``, ``--g/--f``, ``--Q`` or
the ``correspondence`` entry of a JSON config file), writes its files under
``--out`` with the prefix ``--prefix``, and embeds the resolved config, the
degrees, the Lojasiewicz estimate, the tool version and the wall time in a
``<prefix>.report.json``. Values in the config file are overridden by flags
given on the command line.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import branches as br
from . import correspondence as cr
from . import equilibrium as eq
from . import exceptional as ex
from . import periodic as pe
from . import uniqueness as un
from .correspondence import Correspondence
from .errors import CorrDynError
from .polycore import BiPoly, UniPoly, chebyshev

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


class NumericFailure(Exception):
    def __init__(self, op: str, exc: Exception):
        super().__init__(f"{op}: {type(exc).__name__}: {exc}")
        self.op = op


def _z() -> UniPoly:
    return UniPoly.identity()


def example(name: str) -> Correspondence:
    """Built-in test correspondences."""
    z = _z()
    table = {
        "E1": lambda: Correspondence.parametrized(z, z**2, name="E1"),
        "E2": lambda: Correspondence.parametrized(z**2 - z, z**3, name="E2"),
        "CH": lambda: Correspondence.parametrized(chebyshev(2), chebyshev(6), name="CH"),
        "CUSP": lambda: Correspondence.implicit(BiPoly.from_dict({(0, 2): 1, (3, 0): -1}),
                                                name="CUSP"),
    }
    if name not in table:
        raise ConfigError(f"unknown example {name!r}; choose from {sorted(table)}")
    return table[name]()


EXAMPLES = ("E1", "E2", "CH", "CUSP")


def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if isinstance(text, (list, tuple)) and len(text) == 2:
        return complex(float(text[0]), float(text[1]))
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}") from None


def parse_poly(obj) -> UniPoly:
    """Ascending coefficients as a JSON list of numbers or [re, im] pairs."""
    if isinstance(obj, UniPoly):
        return obj
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError:
            raise ConfigError(f"polynomial must be a JSON list, got {obj!r}") from None
    if not isinstance(obj, list) or not obj:
        raise ConfigError("polynomial must be a non-empty list of coefficients")
    return UniPoly(np.array([parse_complex(c) for c in obj]))


def _resolve_correspondence(cfg: dict) -> Correspondence:
    desc = cfg.get("correspondence")
    if desc is None:
        raise ConfigError("no correspondence given (use --example, --g/--f, --Q or a config)")
    try:
        if "example" in desc:
            return example(desc["example"])
        if "repr" in desc:
            return Correspondence.from_dict(desc)
        if "Q" in desc:
            terms = desc["Q"]
            if isinstance(terms, str):
                terms = json.loads(terms)
            return Correspondence.implicit(BiPoly.from_dict(
                {tuple(int(k) for k in key.split(",")): parse_complex(v)
                 for key, v in terms.items()}))
        return Correspondence.parametrized(parse_poly(desc["g"]), parse_poly(desc["f"]))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"invalid correspondence: {exc}") from None
    except CorrDynError as exc:
        raise ConfigError(f"invalid correspondence: {exc}") from None


# ---------------------------------------------------------------------------
# argument handling

COMMON_DEFAULTS = {"out": ".", "prefix": None, "seed": None, "threads": None, "grid": 64,
                   "no_timing": False}

DEFAULTS = {
    "measure": {"method": "brolin", "samples": 100000, "burn_in": 50, "chains": 256,
                "start": "0.3+0.2j", "depth": 8, "pgm_bits": 8},
    "periodic": {"n_max": 4, "mu_samples": 50000, "minimal_only": False},
    "mixing": {"n_max": 5, "atoms": 4000, "observable": "re", "start": "0.3+0.2j"},
    "branches": {"z": "2", "r": 0.05, "m_max": 6, "n_boundary": 128, "n_spoke": 8},
    "exceptional": {"test": [], "depth": 10, "mu_samples": 100000, "orbit_steps": 1,
                    "start": "0.3+0.2j"},
    "uniqueness": {"set": "circles:1", "set_samples": 256, "uf": None, "ug": None,
                   "candidates": [], "m_max": 12},
}

STOCHASTIC = {"measure", "periodic", "mixing", "exceptional"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--example", choices=EXAMPLES, help="built-in correspondence")
    p.add_argument("--g", help="JSON coefficient list of g (ascending)")
    p.add_argument("--f", help="JSON coefficient list of f (ascending)")
    p.add_argument("--Q", help='JSON map "i,j" -> coefficient of x^i y^j')
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--prefix", default=None, help="output file prefix (default: command)")
    p.add_argument("--threads", type=int, default=None, help="worker pool size")
    p.add_argument("--grid", type=int, default=None, help="grid cells per side")
    p.add_argument("--no-timing", action="store_true", default=None,
                   help="omit wall time so reports are byte-identical across runs")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corrdyn", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"corrdyn {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="equilibrium measure estimate")
    _common(p)
    p.add_argument("--method", choices=["brolin", "tree"], default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--chains", type=int, default=None)
    p.add_argument("--start", default=None, help="start point, e.g. 0.3+0.2j")
    p.add_argument("--depth", type=int, default=None, help="tree depth for --method tree")
    p.add_argument("--pgm-bits", type=int, choices=[8, 16], default=None)

    p = sub.add_parser("periodic", help="periodic points and repelling equidistribution")
    _common(p)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--mu-samples", type=int, default=None)
    p.add_argument("--minimal-only", action="store_true", default=None)

    p = sub.add_parser("mixing", help="decay of correlations")
    _common(p)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--atoms", type=int, default=None)
    p.add_argument("--observable", choices=["re", "abs2"], default=None)
    p.add_argument("--start", default=None)

    p = sub.add_parser("branches", help="inverse branch diameters")
    _common(p)
    p.add_argument("--z", default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--m-max", type=int, default=None)
    p.add_argument("--n-boundary", type=int, default=None)
    p.add_argument("--n-spoke", type=int, default=None)

    p = sub.add_parser("exceptional", help="exceptional set search and tests")
    _common(p)
    p.add_argument("--test", action="append", default=None, help="point to test (repeatable)")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--mu-samples", type=int, default=None)
    p.add_argument("--orbit-steps", type=int, default=None)
    p.add_argument("--start", default=None)

    p = sub.add_parser("uniqueness", help="preimage sets and uniqueness obstructions")
    _common(p)
    p.add_argument("--set", default=None,
                   help="circles:R1,R2 | segment:A,B | julia:<JSON poly> | raw:<file.csv>")
    p.add_argument("--set-samples", type=int, default=None)
    p.add_argument("--uf", default=None, help="JSON poly f for preimage_equal")
    p.add_argument("--ug", default=None, help="JSON poly g for preimage_equal")
    p.add_argument("--candidate", dest="candidates", action="append", default=None,
                   help="JSON poly P for the Julia-like check (repeatable)")
    p.add_argument("--m-max", type=int, default=None)
    return ap


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults < config file < command-line flags."""
    cmd = args.command
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(DEFAULTS[cmd])
    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    unknown = set(file_cfg) - set(cfg) - {"correspondence", "command"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg.update({k: v for k, v in file_cfg.items() if k != "command"})
    for key, val in vars(args).items():
        if key in cfg and val is not None:
            cfg[key] = val
    if args.example:
        cfg["correspondence"] = {"example": args.example}
    elif args.g or args.f:
        if not (args.g and args.f):
            raise ConfigError("--g and --f must be given together")
        cfg["correspondence"] = {"g": args.g, "f": args.f}
    elif args.Q:
        cfg["correspondence"] = {"Q": args.Q}
    if cmd == "uniqueness" and cfg.get("correspondence") is None:
        cfg["correspondence"] = None
    if cmd in STOCHASTIC and cfg["seed"] is None:
        raise ConfigError(f"'{cmd}' is stochastic and needs --seed")
    if cfg["prefix"] is None:
        cfg["prefix"] = cmd
    cfg["command"] = cmd
    return cfg


def pool_size(cfg: dict) -> int:
    """--threads, else CORRDYN_THREADS, else available parallelism."""
    if cfg.get("threads"):
        return max(1, int(cfg["threads"]))
    env = os.environ.get("CORRDYN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"CORRDYN_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# helpers


def _op(name: str, fn, *args, **kwargs):
    """Run one analysis step; numeric errors carry the step name."""
    try:
        return fn(*args, **kwargs)
    except CorrDynError as exc:
        raise NumericFailure(name, exc) from exc
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        raise NumericFailure(name, exc) from exc


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return _pair(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, UniPoly):
        return obj.to_literal()
    return obj


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _header(cfg: dict, F: Correspondence | None) -> dict:
    head = {"version": __version__, "config": cfg}
    if F is not None:
        head["correspondence"] = F.to_dict()
        head["degrees"] = list(F.degrees)
        try:
            head["lojasiewicz"] = cr.lojasiewicz_exponent(F).to_dict()
        except CorrDynError as exc:
            head["lojasiewicz"] = {"value": None, "method": "failed", "error": str(exc)}
    return head


def _mu_hat(F, cfg, n_samples, workers, start=None):
    sc = eq.SamplerConfig(seed=int(cfg["seed"]), n_samples=int(n_samples),
                          start_point=parse_complex(start if start is not None
                                                    else cfg.get("start", "0.3+0.2j")))
    return sc, _op("brolin_sample", eq.brolin_sample, F, sc, workers=workers)


# ---------------------------------------------------------------------------
# commands


def cmd_measure(cfg: dict, F: Correspondence, out: Path, workers: int) -> dict:
    start = parse_complex(cfg["start"])
    if cfg["method"] == "brolin":
        sc = eq.SamplerConfig(seed=int(cfg["seed"]), n_samples=int(cfg["samples"]),
                              burn_in=int(cfg["burn_in"]), start_point=start,
                              n_chains=int(cfg["chains"]))
        mu, restarts = _op("brolin_sample", eq.brolin_sample, F, sc, workers=workers,
                           return_restarts=True)
        extra = {"sampler": sc.to_dict(), "restarts": restarts}
    else:
        mu = _op("preimage_tree", eq.preimage_tree, F, start, int(cfg["depth"]))
        extra = {"depth": int(cfg["depth"])}
    e0 = _op("find_e0", ex.find_e0, F)
    tol = 1e-6 * (1 + abs(start))
    exceptional_start = bool(e0.e0) and min(abs(start - e) for e in e0.e0) <= tol
    prefix = cfg["prefix"]
    mu.to_csv(out / f"{prefix}.measure.csv")
    bbox = eq.common_bbox(mu)
    dens = eq.grid_density(mu, bbox, int(cfg["grid"]), int(cfg["grid"]))
    side = dens.to_pgm(out / f"{prefix}.density.pgm", bits=int(cfg["pgm_bits"]))
    m = eq.moments(mu)
    return {"measure": {"atoms": len(mu), "total_mass": mu.total_mass,
                        "moments": m.to_dict(), "bbox": list(bbox),
                        "density_overflow": dens.overflow, **extra},
            "pgm": side,
            "exceptional": {"e0": e0.to_dict()["e0"], "certified": e0.certified,
                            "start_is_exceptional": exceptional_start}}


def cmd_periodic(cfg: dict, F: Correspondence, out: Path, workers: int) -> dict:
    n_max = int(cfg["n_max"])
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    sc, mu = _mu_hat(F, cfg, cfg["mu_samples"], workers, start="0.3+0.2j")
    pairs, reports = _op("repelling_equidistribution", pe.repelling_equidistribution, F, n_max,
                         mu, minimal_only=bool(cfg["minimal_only"]), n_grid=int(cfg["grid"]))
    reports[-1].to_csv(out / f"{cfg['prefix']}.periodic.csv")
    trend = pe.spearman_trend(pairs) if len(pairs) >= 3 else None
    return {"mu_hat": sc.to_dict(),
            "counts": [{"n": r.n, "d2_pow_n": r.d2_pow_n,
                        "count_with_multiplicity": r.count_with_multiplicity,
                        "distinct": len(r.points), "flags": r.flags} for r in reports],
            "nu_distances": [[n, d] for n, d in pairs], "spearman": trend,
            "reports": [r.to_dict() for r in reports]}


def cmd_mixing(cfg: dict, F: Correspondence, out: Path, workers: int) -> dict:
    sc, mu = _mu_hat(F, cfg, cfg["atoms"], workers)
    phi = (lambda w: np.real(w)) if cfg["observable"] == "re" else (lambda w: np.abs(w) ** 2)
    curve = _op("mixing_curve", eq.mixing_curve, F, mu, phi, phi, range(int(cfg["n_max"]) + 1))
    fit = eq.fit_decay(curve)
    return {"mu_hat": sc.to_dict(), "observable": cfg["observable"],
            "curve": [{"n": p.n, "abs_I": p.value, "stderr": p.stderr} for p in curve],
            "fit": {"slope": fit.slope if np.isfinite(fit.slope) else str(fit.slope),
                    "intercept": fit.intercept, "used": list(fit.used),
                    "noise_floor": fit.noise_floor, "collapsed": fit.collapsed}}


def cmd_branches(cfg: dict, F: Correspondence, out: Path, workers: int) -> dict:
    stats = _op("branch_diameter_stats", br.branch_diameter_stats, F, parse_complex(cfg["z"]),
                float(cfg["r"]), int(cfg["m_max"]), n_boundary=int(cfg["n_boundary"]),
                n_spoke=int(cfg["n_spoke"]))
    stats.to_csv(out / f"{cfg['prefix']}.branches.csv")
    d2 = F.degrees.d2
    res = stats.to_dict()
    res["alive_fraction"] = [row[1] / d2 ** row[0] for row in stats.rows]
    return {"branches": res}


def cmd_exceptional(cfg: dict, F: Correspondence, out: Path, workers: int) -> dict:
    rep = _op("find_e0", ex.find_e0, F, orbit_steps=int(cfg["orbit_steps"]))
    res = {"exceptional": rep.to_dict(), "tests": []}
    tests = cfg["test"] or []
    if tests:
        sc, mu = _mu_hat(F, cfg, cfg["mu_samples"], workers)
        res["mu_hat"] = sc.to_dict()
        for t in tests:
            r = _op("exceptional_test", ex.exceptional_test, F, parse_complex(t),
                    int(cfg["depth"]), mu)
            res["tests"].append({"z": parse_complex(t), "distance": r.distance,
                                 "baseline": r.baseline, "control": r.control,
                                 "flagged": r.flagged})
    return res


def _parse_set(cfg: dict) -> un.CompactSet:
    desc = str(cfg["set"])
    kind, _, arg = desc.partition(":")
    n = int(cfg["set_samples"])
    try:
        if kind == "circles":
            return un.CompactSet.circles([float(r) for r in arg.split(",")], n)
        if kind == "segment":
            a, b = (float(v) for v in (arg or "-1,1").split(","))
            return un.CompactSet.segment(a, b, n)
        if kind == "julia":
            if cfg["seed"] is None:
                raise ConfigError("julia sets are sampled and need --seed")
            return un.CompactSet.julia_like(parse_poly(arg), n, seed=int(cfg["seed"]))
        if kind == "raw":
            return un.CompactSet.raw(eq.PointMeasure.from_csv(arg).locs)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"bad --set {desc!r}: {exc}") from None
    raise ConfigError(f"unknown set kind {kind!r}")


def cmd_uniqueness(cfg: dict, F, out: Path, workers: int) -> dict:
    K = _parse_set(cfg)
    res = {"set": {"descriptor": K.descriptor, "samples": len(K)}}
    if cfg["uf"] is not None or cfg["ug"] is not None:
        if cfg["uf"] is None or cfg["ug"] is None:
            raise ConfigError("--uf and --ug must be given together")
        f, g = parse_poly(cfg["uf"]), parse_poly(cfg["ug"])
        eqv, dist = un.preimage_equal(f, g, K)
        fac = un.factor_compose(f, g) if g.degree >= 1 else None
        res["preimage_equal"] = {"equal": eqv, "distance": dist,
                                 "factor": fac.to_literal() if fac is not None else None}
    cands = [parse_poly(c) for c in (cfg["candidates"] or [])]
    res["verdict"] = un.uniqueness_verdict(K, cands, int(cfg["m_max"]))
    return res


COMMANDS = {"measure": cmd_measure, "periodic": cmd_periodic, "mixing": cmd_mixing,
            "branches": cmd_branches, "exceptional": cmd_exceptional,
            "uniqueness": cmd_uniqueness}


def run(cfg: dict) -> dict:
    """Execute a resolved config; returns the report written to disk."""
    t0 = time.perf_counter()
    workers = pool_size(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    F = None
    if cfg.get("correspondence") is not None:
        F = _resolve_correspondence(cfg)
    elif cfg["command"] != "uniqueness":
        raise ConfigError("no correspondence given (use --example, --g/--f, --Q or a config)")
    report = _header(cfg, F)
    report["workers"] = workers
    report.update(COMMANDS[cfg["command"]](cfg, F, out, workers))
    report["wall_time"] = None if cfg["no_timing"] else time.perf_counter() - t0
    _write_json(out / f"{cfg['prefix']}.report.json", report)
    return report


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        run(cfg)
    except ConfigError as exc:
        print(f"corrdyn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"corrdyn: numeric failure in {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"corrdyn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
