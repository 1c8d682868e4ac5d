"""Command-line entry point.

Every subcommand prints one JSON result document on stdout and, when an
output directory is configured, writes it (plus any convergence CSV) there.
Exit status is 0 on success, 1 on a computation error or failed check and 2
on a usage error.  ``CONFIGINT_OUTPUT`` may name the output directory; no other
setting is read from the environment.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import inspect
import io
import json
import os
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import metadata
from pathlib import Path

from . import checks
from .curves import builtin_knot, circle, hopf_pair, load_curve, torus_link_pair
from .errors import ConfigIntError, ParseError, UnknownName
from .graphs import cocycle_basis
from .integrate import SamplerSettings, linking_number, self_linking
from .invariants import (CocycleSpec, a_gamma, calibrate_cocycle, dumps, file_ref,
                         format_number, i_gamma, result_document)
from .oracles import crossing_linking, project_gauss_code, pv_v2, writhe_oracle

OUTPUT_ENV = "CONFIGINT_OUTPUT"


class ConfigOverride(UserWarning):
    """A command-line flag replaced a value given in the configuration file."""


class UsageError(Exception):
    pass


@dataclass
class Config:
    seed: int = 0
    workers: int = 1
    samples: int = 1_000_000
    reject_cutoff: float = 1e-9
    output: str | None = None
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ParseError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ParseError(f"workers must be ≥ 1, got {self.workers!r}")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ParseError(f"samples must be ≥ 1, got {self.samples!r}")
        if not self.reject_cutoff >= 0:
            raise ParseError(f"reject_cutoff must be ≥ 0, got {self.reject_cutoff!r}")
        if not isinstance(self.tolerances, dict):
            raise ParseError("tolerances must be a table of name = value")
        self.tolerances = {str(k): float(v) for k, v in self.tolerances.items()}

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name for f in dataclasses.fields(Config)}


def _read_config_file(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError:
        return {}
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a table of settings")
    unknown = set(doc) - _FIELDS
    if unknown:
        raise ParseError(f"{path}: unknown settings {sorted(unknown)}")
    return doc


def load_config(path=None, flags: dict | None = None, env=None) -> Config:
    """Resolve settings: defaults < file < ``CONFIGINT_OUTPUT`` (output only) < flags.

    A missing file is treated as empty.  A flag that disagrees with the file
    wins and raises a ``ConfigOverride`` warning.
    """
    env = os.environ if env is None else env
    values = _read_config_file(path) if path else {}
    if env.get(OUTPUT_ENV):
        values["output"] = env[OUTPUT_ENV]
    for key, val in (flags or {}).items():
        if val is None:
            continue
        if key == "tolerances":
            merged = dict(values.get("tolerances", {}))
            for k, v in val.items():
                if k in merged and float(merged[k]) != v:
                    warnings.warn(f"tolerance {k}: flag value {v} overrides {merged[k]}",
                                  ConfigOverride, stacklevel=2)
                merged[k] = v
            values["tolerances"] = merged
            continue
        if key in values and values[key] != val:
            warnings.warn(f"{key}: flag value {val!r} overrides {values[key]!r}",
                          ConfigOverride, stacklevel=2)
        values[key] = val
    try:
        return Config(**values)
    except TypeError as exc:
        raise ParseError(str(exc)) from exc


# -- argument parsing -----------------------------------------------------------

def _count(text: str) -> int:
    """Positive integer, also accepting float notation such as ``2e7``."""
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if x != int(x) or x < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(x)


def _tolerance(text: str) -> tuple[str, float]:
    key, sep, val = text.partition("=")
    try:
        if not sep or not key:
            raise ValueError
        return key, float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}") from None


def _vector(text: str) -> tuple[float, float, float]:
    try:
        v = tuple(float(x) for x in text.split(","))
    except ValueError:
        v = ()
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    S = argparse.SUPPRESS
    g.add_argument("--config", default=S, help="JSON settings file")
    g.add_argument("--seed", type=int, default=S)
    g.add_argument("--workers", type=int, default=S)
    g.add_argument("--samples", type=_count, default=S, help="Monte-Carlo samples, e.g. 2e7")
    g.add_argument("--reject-cutoff", type=float, default=S, dest="reject_cutoff")
    g.add_argument("--output", default=S, help=f"output directory (or ${OUTPUT_ENV})")
    g.add_argument("--tol", type=_tolerance, action="append", default=S, metavar="NAME=VALUE",
                   help="override a check tolerance")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="configint", parents=[common],
                     description="Graph cocycles and configuration-space integrals for knots.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cocycles", parents=[common], help="cocycle basis of the graph complex")
    p.add_argument("--variant", choices=("closed", "knot"), default="closed")
    p.add_argument("--order", type=int, required=True)
    f = p.add_mutually_exclusive_group()
    f.add_argument("--prime", dest="filter", action="store_const", const="prime")
    f.add_argument("--connected", dest="filter", action="store_const", const="connected")
    f.add_argument("--all-graphs", dest="filter", action="store_const", const="none")
    p.add_argument("--numbered", action="store_true", help="no quotient by relabelings")

    p = sub.add_parser("integrate", parents=[common], help="A_Γ or I_Γ of a knot")
    p.add_argument("--cocycle", required=True)
    p.add_argument("--knot", required=True)
    p.add_argument("--quantity", choices=("a_gamma", "i_gamma"), default="i_gamma")
    p.add_argument("--mu", help="anomaly coefficient for odd order, e.g. 1/3")
    p.add_argument("--calibration", type=float)
    p.add_argument("--mesh", type=int, default=128)
    p.add_argument("--no-quadrature", action="store_true")

    p = sub.add_parser("lk", parents=[common], help="linking number of two curves")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--mesh", type=int, default=256)

    p = sub.add_parser("sln", parents=[common], help="self-linking number of a knot")
    p.add_argument("--knot", required=True)
    p.add_argument("--mesh", type=int, default=512)
    p.add_argument("--writhe-directions", type=int, default=0,
                   help="also average the projected writhe over this many directions")

    p = sub.add_parser("oracle-v2", parents=[common], help="Gauss code and v₂ from a projection")
    p.add_argument("--knot", required=True)
    p.add_argument("--direction", type=_vector, default=(0.0, 0.0, 1.0))

    p = sub.add_parser("check", parents=[common], help="built-in verification runs")
    p.add_argument("name", choices=sorted(checks.CHECKS))

    p = sub.add_parser("calibrate", parents=[common], help="scale a cocycle on a reference knot")
    p.add_argument("--cocycle", required=True)
    p.add_argument("--reference", default="trefoil")
    p.add_argument("--value", default="1")
    p.add_argument("--write", help="where to store the calibrated cocycle")
    return parser


# -- inputs ---------------------------------------------------------------------

def _named_curves():
    ha, hb = hopf_pair()
    ta, tb = torus_link_pair()
    return {"unknot": lambda: builtin_knot("unknot"), "trefoil": lambda: builtin_knot("trefoil"),
            "figure8": lambda: builtin_knot("figure8"), "circle": circle,
            "hopf_a": lambda: ha, "hopf_b": lambda: hb, "torus_a": lambda: ta,
            "torus_b": lambda: tb, "far_circle": lambda: circle(center=(10.0, 0.0, 0.0))}


def _curve(arg: str, flag: str):
    """A curve file, or one of the named built-in curves; returns (curve, provenance)."""
    if Path(arg).is_file():
        return load_curve(arg), file_ref(path=arg)
    named = _named_curves()
    if arg in named:
        c = named[arg]()
        ref = file_ref(obj=c)
        ref["builtin"] = arg
        return c, ref
    raise UsageError(f"{flag}: no such file or built-in curve {arg!r} "
                     f"(built-ins: {', '.join(sorted(named))})")


def _cocycle(arg: str, flag: str = "--cocycle"):
    try:
        text = Path(arg).read_text()
    except OSError as exc:
        raise UsageError(f"{flag}: cannot read {arg!r}: {exc.strerror}") from None
    try:
        spec = CocycleSpec.from_json(text)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{arg}: {exc}") from exc
    return spec, file_ref(path=arg)


# -- subcommands ----------------------------------------------------------------

def _settings(cfg: Config) -> SamplerSettings:
    return SamplerSettings(reject_cutoff=cfg.reject_cutoff)


def cmd_cocycles(args, cfg):
    n = 2 * args.order
    variant = args.variant
    filt = args.filter or ("prime" if variant == "knot" else "connected")
    basis = cocycle_basis(n, variant, filt, quotient=not args.numbered)
    docs = []
    for v in basis:
        spec = CocycleSpec(v)
        docs.append(json.loads(spec.to_json()))
    files = {}
    if cfg.output:
        for k, d in enumerate(docs):
            name = f"cocycle_{variant}_order{args.order}_{k}.json"
            files[name] = json.dumps(d, indent=2, sort_keys=True) + "\n"
    return {"status": "ok", "quantity": "cocycle_basis", "variant": variant,
            "order": args.order, "filter": filt, "quotient": not args.numbered,
            "dimension": len(basis), "cocycles": docs}, files


def cmd_integrate(args, cfg):
    spec, ref = _cocycle(args.cocycle)
    knot, kref = _curve(args.knot, "--knot")
    if args.mu is not None:
        try:
            spec.mu = Fraction(args.mu)
        except ValueError:
            raise UsageError(f"--mu: not a fraction: {args.mu!r}") from None
    if args.calibration is not None:
        spec.calibration = args.calibration
    kw = dict(n_samples=cfg.samples, seed=cfg.seed, workers=cfg.workers, mesh=args.mesh,
              settings=_settings(cfg), quadrature=not args.no_quadrature, checkpoints=True)
    if args.quantity == "a_gamma":
        est = a_gamma(spec, knot, **kw)
    else:
        est = i_gamma(spec, knot, **kw)
    terms = est.meta.get("terms", [])
    rows = []
    for k, t in enumerate(terms):
        for r in t.pop("convergence", []):
            rows.append({"term": k, **r})
    extra = {"status": "ok", "mu": None if spec.mu is None else str(spec.mu), "terms": terms}
    for key in ("a_gamma", "sln"):
        if key in est.meta:
            extra[key] = est.meta[key]
    doc = _result(args.quantity, est, ref, kref, spec.calibration, extra)
    return doc, {f"{args.quantity}_convergence.csv": _csv(rows)}


def cmd_lk(args, cfg):
    a, aref = _curve(args.a, "--a")
    b, bref = _curve(args.b, "--b")
    est = linking_number(a, b, args.mesh)
    oracle = crossing_linking(a, b)
    doc = _result("linking_number", est, None, {"a": aref, "b": bref}, None,
                  {"status": "ok", "crossing_oracle": oracle, "mesh": args.mesh})
    return doc, {}


def cmd_sln(args, cfg):
    knot, kref = _curve(args.knot, "--knot")
    est = self_linking(knot, args.mesh)
    extra = {"status": "ok", "mesh": args.mesh}
    if args.writhe_directions:
        w = writhe_oracle(knot, args.writhe_directions, cfg.seed)
        extra["writhe_oracle"] = {"value": w.value, "std_error": w.std_error,
                                  "n_directions": w.n_samples}
    return _result("self_linking", est, None, kref, None, extra), {}


def cmd_oracle_v2(args, cfg):
    knot, kref = _curve(args.knot, "--knot")
    code = project_gauss_code(knot, args.direction)
    doc = {"status": "ok", "quantity": "v2_oracle", "knot": kref,
           "direction": list(args.direction), "gauss_code": str(code),
           "crossings": len(code), "writhe": code.writhe, "v2": pv_v2(code)}
    return format_number(doc), {}


def cmd_check(args, cfg):
    fn = checks.CHECKS[args.name]
    params = inspect.signature(fn).parameters
    kw = {}
    if "n_samples" in params:
        kw["n_samples"] = cfg.samples
    if "seed" in params:
        kw["seed"] = cfg.seed
    for k, v in cfg.tolerances.items():
        if k not in params or k in ("n_samples", "seed"):
            raise UsageError(f"--tol: check {args.name} has no tolerance {k!r}")
        kw[k] = v
    doc = fn(**kw)
    doc.pop("seconds", None)
    doc["quantity"] = f"check:{args.name}"
    return format_number(doc), {}


def cmd_calibrate(args, cfg):
    spec, ref = _cocycle(args.cocycle)
    knot, kref = _curve(args.reference, "--reference")
    try:
        target = Fraction(args.value)
    except ValueError:
        raise UsageError(f"--value: not a number: {args.value!r}") from None
    c = calibrate_cocycle(spec, knot, target, n_samples=cfg.samples, seed=cfg.seed,
                          workers=cfg.workers, settings=_settings(cfg))
    doc = {"status": "ok", "quantity": "calibration", "calibration": c,
           "calibration_rel_error": spec.meta["calibration_rel_error"],
           "reference_value": str(target), "cocycle": ref, "reference": kref,
           "n_samples": cfg.samples, "seed": cfg.seed}
    files = {}
    text = spec.to_json() + "\n"
    if args.write:
        Path(args.write).write_text(text)
        doc["written"] = file_ref(path=args.write)
    elif cfg.output:
        files["calibrated_cocycle.json"] = text
    return format_number(doc), files


def _result(quantity, est, cocycle_ref, knot_ref, calibration, extra):
    return result_document(quantity, est, cocycle_ref, knot_ref, calibration, extra=extra)


def _csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


COMMANDS = {"cocycles": cmd_cocycles, "integrate": cmd_integrate, "lk": cmd_lk,
            "sln": cmd_sln, "oracle-v2": cmd_oracle_v2, "check": cmd_check,
            "calibrate": cmd_calibrate}


def _version() -> str:
    try:
        return metadata.version("configint")
    except metadata.PackageNotFoundError:
        return "unknown"


def _emit(doc: dict, files: dict, cfg: Config, out, name: str) -> None:
    text = dumps(doc)
    out.write(text)
    if cfg.output:
        d = Path(cfg.output)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{name}.json").write_text(text)
        for fname, content in files.items():
            if content:
                (d / fname).write_text(content)


def run(argv=None, out=None, err=None) -> int:
    """Parse ``argv``, run one subcommand and return the exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        flags = {k: getattr(args, k) for k in ("seed", "workers", "samples", "reject_cutoff",
                                                "output") if hasattr(args, k)}
        if hasattr(args, "tol"):
            flags["tolerances"] = dict(args.tol)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConfigOverride)
            cfg = load_config(getattr(args, "config", None), flags)
        for w in caught:
            err.write(f"warning: {w.message}\n")
    except UsageError as exc:
        err.write(f"{exc}\n")
        return 2
    except ParseError as exc:
        err.write(f"configuration error: {exc}\n")
        return 2
    name = args.command if args.command != "check" else f"check_{args.name}"
    try:
        doc, files = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return 2
    except (ParseError, UnknownName) as exc:
        err.write(f"input error: {exc}\n")
        return 2
    except (ConfigIntError, ValueError, ArithmeticError) as exc:
        doc = {"status": "error", "command": args.command,
               "error": f"{type(exc).__name__}: {exc}"}
        files = {}
    doc["command"] = args.command
    doc["config"] = cfg.to_dict()
    doc["version"] = _version()
    _emit(format_number(doc), files, cfg, out, name)
    return 0 if doc.get("status") in ("ok", "pass") else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
