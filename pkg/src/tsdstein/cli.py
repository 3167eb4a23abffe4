"""Command-line front end: ``tsdstein <command> [options]``.

Exit codes: 0 success, 1 computation failure (or a failed verification),
2 configuration error. Outputs go to stdout unless ``--out`` is given; a
relative ``--out`` path is resolved against ``$TSDSTEIN_OUTPUT_DIR`` when set.
Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import TsdError

OUTPUT_DIR_ENV = "TSDSTEIN_OUTPUT_DIR"
EXCLUDED_KEYS = ("timestamp",)


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    obj = _plain(obj) if _level == 0 else obj
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{inner}{dumps(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)


def to_csv(columns: dict) -> str:
    names = list(columns)
    rows = zip(*(np.atleast_1d(columns[n]) for n in names))
    buf = io.StringIO(newline="")
    buf.write(",".join(names) + "\n")
    for row in rows:
        # a missing value (a sweep gap) is an empty field
        buf.write(",".join("" if v is None else _fmt_float(float(v)) for v in row) + "\n")
    return buf.getvalue()


def comparable(report: dict) -> dict:
    """The report without fields that legitimately differ between runs."""
    return {k: v for k, v in report.items() if k not in EXCLUDED_KEYS}


def resolve_output(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _load_json(text: str):
    p = Path(text)
    try:
        if not text.lstrip().startswith(("{", "[")) and p.exists():
            text = p.read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON from {text[:60]!r}: {exc}") from exc


def _params(text, stable_ok: bool = False):
    from .model import StableParams, TsdParams, parse_params

    if text is None:
        raise ConfigError("parameters are required (--params)")
    data = _load_json(text) if isinstance(text, str) else text
    if not isinstance(data, dict):
        raise ConfigError("parameters must be a JSON object")
    try:
        p = parse_params(data)
    except (TsdError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc
    if isinstance(p, StableParams) and not stable_ok:
        raise ConfigError("this command needs tempered (six-field) parameters")
    assert isinstance(p, (TsdParams, StableParams))
    return p


def _floats(text: str | None, name: str) -> np.ndarray:
    if text is None:
        raise ConfigError(f"--{name} is required")
    try:
        return np.array([float(v) for v in str(text).split(",") if v.strip()], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"--{name} must be comma-separated numbers") from exc


def _law(p):
    from .charfn import cf_stable
    from .inversion import NumericLaw, tsd_law
    from .model import StableParams

    return NumericLaw.from_cf(cf_stable(p)) if isinstance(p, StableParams) else tsd_law(p)


def _cf(p):
    from .charfn import cf_stable, cf_tempered
    from .model import StableParams

    return cf_stable(p) if isinstance(p, StableParams) else cf_tempered(p)


# ---------------------------------------------------------------------------
# Commands; each returns (result, csv_columns or None, passed)
# ---------------------------------------------------------------------------


def cmd_cumulants(args):
    from .model import cumulants

    p = _params(args.params)
    if args.order < 1:
        raise ConfigError("--order must be >= 1")
    c = cumulants(p, args.order)
    result = {f"C{n}": c[n] for n in range(1, args.order + 1)}
    return result, {"n": np.arange(1, args.order + 1), "cumulant": [c[n] for n in range(1, args.order + 1)]}, True


def cmd_cf(args):
    z = _floats(args.z, "z")
    vals = np.asarray(_cf(_params(args.params, stable_ok=True))(z))
    result = {"z": z, "re": vals.real, "im": vals.imag}
    return result, result, True


def cmd_density(args):
    x = _floats(args.x, "x")
    law = _law(_params(args.params, stable_ok=True))
    vals = np.atleast_1d(law.pdf(x))
    return {"x": x, "pdf": vals}, {"x": x, "pdf": vals}, True


def cmd_cdf(args):
    x = _floats(args.x, "x")
    law = _law(_params(args.params, stable_ok=True))
    vals = np.atleast_1d(law.cdf(x))
    return {"x": x, "cdf": vals}, {"x": x, "cdf": vals}, True


def cmd_sample(args):
    from .sampling import RngStream, sample_cpd_approximant, sample_tempered

    if args.size < 1:
        raise ConfigError("--size must be positive")
    p = _params(args.params)
    rng = RngStream(args.seed, args.stream)
    if args.n is None:
        batch = sample_tempered(p, args.size, rng, method=args.method)
    elif args.n < 1:
        raise ConfigError("--n must be >= 1")
    else:
        batch = sample_cpd_approximant(p, args.n, args.size, rng)
    if args.binary or args.format is None:
        return batch.values, None, True
    result = {"values": batch.values, "mean": batch.mean(), "meta": batch.meta}
    return result, {"value": batch.values}, True


def cmd_bias(args):
    from .bias import BiasDistribution, bias_moment, mean_abs_bias, mean_abs_bias_exact
    from .sampling import RngStream

    p = _params(args.params)
    if args.moments < 1:
        raise ConfigError("--moments must be >= 1")
    law = BiasDistribution(p)
    u, F = law.table
    table = {"u": u, "pdf": law.pdf(u), "cdf": F}
    result = {
        "moments": {str(n): bias_moment(p, n) for n in range(1, args.moments + 1)},
        "mean_abs_closed_expression": mean_abs_bias(p),
        "mean_abs_exact": mean_abs_bias_exact(p),
        "table": table,
    }
    if args.size:
        result["values"] = law.sample(args.size, RngStream(args.seed, args.stream)).values
    return result, table, True


def cmd_stein(args):
    from .stein import get_test_function, solve_stein, stein_solution_residual, verify_derivative_bounds

    p = _params(args.params)
    try:
        h = get_test_function(args.h)
    except (TsdError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    x = _floats(args.x, "x")
    sol = solve_stein(p, h)
    f0 = sol.derivative(x, 0)
    res = stein_solution_residual(sol, x)
    reports = [verify_derivative_bounds(p, h, r).to_dict() for r in (0, 1)]
    passed = bool(np.max(np.abs(res)) < 1e-3) and all(r["passed"] for r in reports)
    result = {"h": h.name, "x": x, "f": f0, "residual": res, "derivative_bounds": reports}
    return result, {"x": x, "f": f0, "residual": res}, passed


def cmd_distance(args):
    from .distance import kolmogorov, smooth_h3_lower

    from .charfn import cf_compound_poisson
    from .inversion import NumericLaw

    pa = _params(args.a, stable_ok=args.n is None)
    if args.n is None:
        a = _law(pa)
    elif args.n < 1:
        raise ConfigError("--n must be >= 1")
    else:
        a = NumericLaw.from_cf(cf_compound_poisson(pa, args.n))
    b = _law(_params(args.b, stable_ok=True))
    d = kolmogorov(a, b) if args.kind == "kolmogorov" else smooth_h3_lower(a, b)
    return d.to_dict(), None, True


def cmd_bounds(args):
    from . import bounds

    kind = args.kind
    if kind == "cpd":
        p = _params(args.params)
        value = bounds.bound_cpd(p, args.n, args.c)
        return {"bound": value, "n": args.n, "c": args.c}, None, True
    if kind == "stable":
        p = _params(args.params)
        return {"bound": bounds.bound_stable(p, args.c1, args.c2)}, None, True
    if kind == "h3":
        a, b = _params(args.a), _params(args.b)
        return {"bound": bounds.bound_h3_two_tsd(a, b), "cumulant_gap": bounds.cumulant_gap(a, b)}, None, True
    if kind == "normal":
        return {"bound": bounds.bound_normal_example(_params(args.params), args.lam)}, None, True
    if kind == "vg":
        p = _params(args.params)
        return {"bound": bounds.bound_vg_example(p, args.m, args.lam1, args.lam2)}, None, True
    if kind == "malpha":
        return {"alpha": args.alpha, "M": bounds.M_alpha(args.alpha)}, None, True
    spec = {}
    if args.spec:
        spec = _load_json(args.spec)
        if not isinstance(spec, dict):
            raise ConfigError("--spec must be a JSON object")
        for key in ("params", "target"):
            if key in spec:
                spec[key] = _params(spec[key])
    try:
        rep = bounds.rate_sweep(args.theorem, seed=args.seed, **spec)
    except TypeError as exc:
        raise ConfigError(f"bad sweep spec: {exc}") from exc
    except TsdError as exc:
        if "unknown theorem" in str(exc):
            raise ConfigError(str(exc)) from exc
        raise
    out = rep.to_dict()
    label = {"cpd": "n", "stable": "lambda", "normal": "m", "continuity": "k"}.get(args.theorem)
    cols = None
    if label:
        cols = {label: [p[label] for p in rep.points], "distance": [p["distance"] for p in rep.points], "error": [p["error"] for p in rep.points]}
    return out, cols, rep.passed


def cmd_verify(args):
    from .verify import CHECKS, run_all

    if args.which == "all":
        ks = sorted(CHECKS)
    else:
        try:
            ks = sorted({int(v) for v in args.which.split(",")})
        except ValueError as exc:
            raise ConfigError("verify takes 'all' or a comma list of criterion numbers") from exc
        bad = [k for k in ks if k not in CHECKS]
        if bad:
            raise ConfigError(f"unknown criteria {bad}")
    results = run_all(args.seed, args.threads, ks)
    for r in results:
        print(f"criterion {r.criterion:2d} {'PASS' if r.passed else 'FAIL'} {r.name} ({r.runtime:.1f}s)", file=sys.stderr)
    passed = all(r.passed for r in results)
    result = {"passed": passed, "criteria": [r.to_dict() for r in results]}
    cols = {"criterion": [r.criterion for r in results], "passed": [int(r.passed) for r in results]}
    return result, cols, passed


COMMANDS = {
    "cumulants": cmd_cumulants,
    "cf": cmd_cf,
    "density": cmd_density,
    "cdf": cmd_cdf,
    "sample": cmd_sample,
    "bias": cmd_bias,
    "stein": cmd_stein,
    "distance": cmd_distance,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys override these flags")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads (default: logical cores)")
    common.add_argument("--out", help=f"output file (default stdout; relative paths go under ${OUTPUT_DIR_ENV})")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json; sample defaults to one value per line)")

    parser = argparse.ArgumentParser(prog="tsdstein", description="Tempered stable laws: Stein's method toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    params_help = "TSD params as JSON or a JSON file: m1, alpha1, lambda1, m2, alpha2, lambda2"
    p = add("cumulants", "closed-form cumulants C1..C_order")
    p.add_argument("--params", help=params_help)
    p.add_argument("--order", type=int, default=4)

    for name, flag in (("cf", "z"), ("density", "x"), ("cdf", "x")):
        p = add(name, f"evaluate the {name} at comma-separated --{flag}")
        p.add_argument("--params", help=params_help + " (stable: m1, m2, alpha)")
        p.add_argument(f"--{flag}")

    p = add("sample", "draw variates")
    p.add_argument("--params", help=params_help)
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--method", choices=("auto", "rejection", "truncation"), default="auto")
    p.add_argument("--n", type=int, help="sample the compound Poisson approximant X_n instead")
    p.add_argument("--binary", action="store_true", help="raw little-endian float64 values")

    p = add("bias", "zero-bias law moments and optional variates")
    p.add_argument("--params", help=params_help)
    p.add_argument("--moments", type=int, default=4)
    p.add_argument("--size", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)

    p = add("stein", "solve the Stein equation and check residuals and derivative bounds")
    p.add_argument("action", choices=("verify",))
    p.add_argument("--params", help=params_help)
    p.add_argument("--h", default="tanh", help="tanh, xgauss or sin:<omega>[:<phase>]")
    p.add_argument("--x", default="-2,0,2")

    p = add("distance", "distance between two laws")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--n", type=int, help="replace --a by its compound Poisson approximant X_n")
    p.add_argument("--kind", choices=("kolmogorov", "h3"), default="kolmogorov")

    p = add("bounds", "theoretical bounds and empirical rate sweeps")
    p.add_argument("kind", choices=("cpd", "stable", "h3", "normal", "vg", "malpha", "sweep"))
    p.add_argument("--params", help=params_help)
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--lam1", type=float, default=1.0)
    p.add_argument("--lam2", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--theorem", default="cpd", help="sweep: cpd, stable, normal, continuity or h3")
    p.add_argument("--spec", help="sweep keyword arguments as JSON")

    p = add("verify", "run acceptance criteria")
    p.add_argument("which", nargs="?", default="all", help="'all' or a comma list of criterion numbers")
    return parser


def _apply_config(parser, args):
    if not args.config:
        return args
    data = _load_json(args.config)
    if not isinstance(data, dict):
        raise ConfigError("--config must hold a JSON object")
    known = vars(args)
    unknown = sorted(set(data) - set(known) - {"command"})
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    for key, value in data.items():
        if key == "command":
            if value != args.command:
                raise ConfigError(f"config is for {value!r}, not {args.command!r}")
            continue
        if key in ("params", "a", "b", "spec") and isinstance(value, (dict, list)):
            value = json.dumps(value)
        setattr(args, key, value)
    return args


def _config_of(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("out", "threads"):
            continue
        if isinstance(v, str) and v.lstrip().startswith("{"):
            v = json.loads(v)
        out[k] = v
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        args = _apply_config(parser, args)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        result, cols, passed = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TsdError, ArithmeticError, ValueError) as exc:
        print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    out = resolve_output(args.out)
    if getattr(args, "binary", False):
        data = np.asarray(result, dtype="<f8").tobytes()
        if out is None:
            sys.stdout.buffer.write(data)
        else:
            write_atomic(out, data)
        return 0
    if cols is None and args.format is None and args.command == "sample":
        text = "".join(_fmt_float(v) + "\n" for v in result)
    elif args.format == "csv":
        if cols is None:
            print("config error: this command has no CSV form", file=sys.stderr)
            return 2
        text = to_csv(cols)
    else:
        report = {
            "command": args.command,
            "version": __version__,
            "config": _config_of(args),
            "seed": args.seed,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "result": result,
        }
        text = dumps(report) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text.encode())
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
