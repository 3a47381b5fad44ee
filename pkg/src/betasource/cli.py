"""Command-line driver.

Every subcommand reads optional defaults from ``--config`` (a flat JSON
document); flags given on the command line override the file.  Results go to
``--out`` (or stdout) as CSV or JSON.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from typing import Iterable

import numpy as np

from . import __version__
from .charpoly import (
    CharPolyQuery,
    duality_check_gaussian,
    duality_check_laguerre,
    log_exact_k_gaussian,
    log_exact_k_laguerre,
    mc_charpoly_avg,
)
from .combinatorics import DomainError, JackParams, jack_eval, jack_polynomial
from .ensembles import EnsembleSpec, Family, density, sample_many
from .hyperfun import DEFAULT_MAX_DEGREE, HypergeometricSpec, TruncationPolicy, hyperg_one_set, hyperg_two_set
from .scalinglimits import LimitKind, LimitSpec, limit_function
from .transition import ExperimentConfig, classify_regime, render, run_convergence_scan, scan_metadata

MC_SAMPLES = 100_000


class UsageError(Exception):
    pass


# --- parsing helpers ------------------------------------------------------------------------------


def _numbers(text, kind=float) -> tuple:
    if text is None:
        return ()
    if isinstance(text, (list, tuple)):
        return tuple(kind(v) for v in text)
    if isinstance(text, (int, float)):
        return (kind(text),)
    return tuple(kind(v.strip().replace(" ", "")) for v in str(text).split(",") if v.strip())


def _complexes(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in text)
    return _numbers(text, complex)


def _merge(args: argparse.Namespace) -> dict:
    """Config-file values overlaid by the flags the user actually gave."""
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values.update(json.load(fh))
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from exc
    for key, val in vars(args).items():
        if key in ("config", "command", "handler", "jack_command") or val is None:
            continue
        values[key] = val
    return values


def _need(values: dict, *keys) -> None:
    missing = [k for k in keys if values.get(k) is None]
    if missing:
        raise UsageError("missing required settings: " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _seed(values: dict) -> int:
    if values.get("seed") is None:
        raise UsageError("--seed is required for Monte Carlo paths")
    return int(values["seed"])


def _spec(values: dict, N: int | None = None) -> EnsembleSpec:
    _need(values, "family", "beta", "t")
    f = _numbers(values.get("f"))
    N = N or values.get("N") or len(f)
    if not N:
        raise UsageError("give --N or a source vector --f")
    return EnsembleSpec(values["family"], float(values["beta"]), int(N), float(values["t"]), f,
                        a=None if values.get("a") is None else float(values["a"]))


def _cnum(z: complex) -> dict:
    return {"re": f"{z.real:.17g}", "im": f"{z.imag:.17g}"}


def _write(records: list[dict], values: dict) -> str:
    fmt = values.get("format") or "csv"
    if fmt == "json":
        text = json.dumps({"schema_version": "1", "rows": records}, indent=1) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        fields = list(records[0]) if records else []
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
        text = buf.getvalue()
    else:
        raise UsageError(f"unknown format {fmt!r}")
    return _emit_text(text, values)


def _emit_text(text: str, values: dict) -> str:
    out = values.get("out")
    if out:
        try:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write results to {out!r}: {exc}") from exc
    else:
        sys.stdout.write(text)
    return text


def _num(x: float) -> str:
    return f"{x:.17g}"


# --- subcommands --------------------------------------------------------------------------------


def cmd_jack_eval(values: dict) -> str:
    _need(values, "kappa", "alpha", "x")
    x = np.array(_complexes(values["x"]))
    alpha = values["alpha"]
    poly = jack_polynomial(_numbers(values["kappa"], int), JackParams(float(alpha), len(x)))
    val = complex(jack_eval(poly, x))
    return _write([{"kappa": str(tuple(poly.kappa.parts)), "alpha": _num(float(alpha)), **_cnum(val)}], values)


def cmd_hyperg(values: dict) -> str:
    _need(values, "alpha", "x")
    x = np.array(_complexes(values["x"]))
    spec = HypergeometricSpec(_complexes(values.get("upper")), _complexes(values.get("lower")),
                              float(values["alpha"]), len(x))
    policy = TruncationPolicy(int(values.get("max_degree") or DEFAULT_MAX_DEGREE),
                              float(values.get("tail_tol") or 1e-10))
    if values.get("y") is not None:
        res = hyperg_two_set(spec, x, np.array(_complexes(values["y"])), policy)
    else:
        res = hyperg_one_set(spec, x, policy)
    return _write([{**_cnum(res.value), "degrees_used": res.degrees_used, "converged": res.converged,
                    "tail_estimate": _num(res.tail_estimate)}], values)


def cmd_density(values: dict) -> str:
    _need(values, "x")
    x = np.array(_numbers(values["x"]))
    spec = _spec(values, N=len(x))
    policy = TruncationPolicy(int(values.get("max_degree") or DEFAULT_MAX_DEGREE))
    return _write([{"density": _num(density(spec, x, policy))}], values)


def cmd_sample(values: dict) -> str:
    spec = _spec(values)
    seed = _seed(values)
    draws = sample_many(spec, int(values.get("samples") or 1), seed, values.get("sampler") or "matrix",
                        workers=int(values.get("workers") or 1))
    records = [{f"x{k + 1}": _num(v) for k, v in enumerate(row)} for row in draws]
    return _write(records, values)


def cmd_kavg(values: dict) -> str:
    _need(values, "s")
    spec = _spec(values)
    query = CharPolyQuery(_complexes(values["s"]), spec)
    method = values.get("method") or "exact"
    if method == "exact":
        fn = log_exact_k_gaussian if spec.family is Family.GAUSSIAN else log_exact_k_laguerre
        res = fn(query, float(values.get("rtol") or 1e-9), int(values.get("max_degree") or DEFAULT_MAX_DEGREE))
        record = {"method": "exact", **_cnum(res.value), "log_re": _num(res.log_value.real),
                  "log_im": _num(res.log_value.imag), "rel_error": _num(res.rel_error)}
    else:
        est = mc_charpoly_avg(query, values.get("sampler") or "matrix", int(values.get("samples") or MC_SAMPLES),
                              _seed(values), int(values.get("workers") or 1))
        record = {"method": "mc", **_cnum(est.mean), "stderr": _num(est.stderr), "samples": est.samples,
                  "seed": est.seed}
    return _write([record], values)


def cmd_duality(values: dict) -> str:
    _need(values, "family", "beta", "t", "s", "f")
    s, f = _complexes(values["s"]), _numbers(values["f"])
    lhs_m, rhs_m = values.get("lhs_method") or "auto", values.get("rhs_method") or "auto"
    uses_mc = "mc" in (lhs_m, rhs_m) or (lhs_m == "auto" and len(f) > 2) or (rhs_m == "auto" and len(s) > 2)
    seed = _seed(values) if uses_mc else int(values.get("seed") or 0)
    kw = dict(samples=int(values.get("samples") or MC_SAMPLES), seed=seed, workers=int(values.get("workers") or 1),
              lhs_method=lhs_m, rhs_method=rhs_m)
    if Family(values["family"]) is Family.GAUSSIAN:
        res = duality_check_gaussian(len(s), len(f), float(values["beta"]), float(values["t"]), s, f, **kw)
    else:
        _need(values, "a")
        res = duality_check_laguerre(len(s), len(f), float(values["a"]), float(values["beta"]), float(values["t"]),
                                     s, f, **kw)
    records = []
    for side, est, method in (("lhs", res.lhs, res.lhs_method), ("rhs", res.rhs, res.rhs_method)):
        records.append({"side": side, "method": method, **_cnum(est.mean), "stderr": _num(est.stderr),
                        "samples": est.samples, "seed": est.seed})
    records.append({"side": "consistent", "method": "", "re": str(res.consistent()), "im": "", "stderr": "",
                    "samples": "", "seed": ""})
    return _write(records, values)


def cmd_limit(values: dict) -> str:
    _need(values, "kind", "alpha", "y")
    spec = LimitSpec(LimitKind(values["kind"]), float(values["alpha"]), _complexes(values["y"]),
                     _complexes(values.get("sigma")), None if values.get("a") is None else float(values["a"]),
                     float(values.get("tau") or 0.0))
    seed = _seed(values) if spec.n > 3 else int(values.get("seed") or 0)
    lv = limit_function(spec, max_degree=int(values.get("max_degree") or DEFAULT_MAX_DEGREE),
                        samples=int(values.get("samples") or 200_000), seed=seed)
    return _write([{"kind": spec.kind.value, **_cnum(lv.value), "est_error": _num(lv.est_error),
                    "method": lv.method.value}], values)


def cmd_classify(values: dict) -> str:
    _need(values, "family", "t", "b")
    rep = classify_regime(values["family"], float(values["t"]), float(values["b"]))
    record = {"family": rep.family.value, "regime": rep.regime.value}
    for k, z in enumerate(rep.saddle_points):
        record[f"saddle{k + 1}_re"] = _num(z.real)
        record[f"saddle{k + 1}_im"] = _num(z.imag)
    return _write([record], values)


def cmd_scan(values: dict) -> str:
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    cfg_values = {k: v for k, v in values.items() if k in names}
    for key in ("N_list", "sigma", "f_fixed"):
        if isinstance(cfg_values.get(key), str):
            cfg_values[key] = _numbers(cfg_values[key], int if key == "N_list" else float)
    if isinstance(cfg_values.get("y_grid"), str):
        cfg_values["y_grid"] = [_numbers(y) for y in cfg_values["y_grid"].split(";")]
    if cfg_values.get("n") is None and cfg_values.get("y_grid"):
        cfg_values["n"] = len(np.atleast_1d(cfg_values["y_grid"][0]))
    try:
        config = ExperimentConfig(**cfg_values)
    except TypeError as exc:
        raise UsageError(f"incomplete scan config: {exc}") from exc
    if config.n > 3:
        _seed(values)
    rows = run_convergence_scan(config, workers=int(values.get("workers") or 1))
    return _emit_text(render(rows, config.format, config.n, config.m, scan_metadata(config)), values)


# --- parser ------------------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON file with default settings")
    p.add_argument("--seed", type=int, help="RNG seed (required for Monte Carlo paths)")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--max-degree", dest="max_degree", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int)


def _ensemble_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("--beta", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--f", help="comma-separated source eigenvalues")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="betasource", description="beta-ensembles with external source")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    jack = sub.add_parser("jack", help="Jack polynomials")
    jack_sub = jack.add_subparsers(dest="jack_command", required=True)
    ev = jack_sub.add_parser("eval", help="evaluate P_kappa^(alpha) at a point")
    _common(ev)
    ev.add_argument("--kappa", help="partition, e.g. 2,1")
    ev.add_argument("--alpha", type=float)
    ev.add_argument("--x", help="comma-separated (complex allowed, e.g. 1+2j)")
    ev.set_defaults(handler=cmd_jack_eval)

    hg = sub.add_parser("hyperg", help="one- or two-set hypergeometric series")
    _common(hg)
    hg.add_argument("--upper")
    hg.add_argument("--lower")
    hg.add_argument("--alpha", type=float)
    hg.add_argument("--x")
    hg.add_argument("--y", help="second argument set (two-set series)")
    hg.add_argument("--tail-tol", dest="tail_tol", type=float)
    hg.set_defaults(handler=cmd_hyperg)

    de = sub.add_parser("density", help="joint eigenvalue density at a point")
    _common(de)
    _ensemble_flags(de)
    de.add_argument("--x")
    de.set_defaults(handler=cmd_density)

    sa = sub.add_parser("sample", help="draw eigenvalue samples")
    _common(sa)
    _ensemble_flags(sa)
    sa.add_argument("--sampler", choices=["matrix", "sde"])
    sa.set_defaults(handler=cmd_sample)

    ka = sub.add_parser("kavg", help="average product of characteristic polynomials")
    _common(ka)
    _ensemble_flags(ka)
    ka.add_argument("--s")
    ka.add_argument("--method", choices=["exact", "mc"])
    ka.add_argument("--sampler", choices=["matrix", "sde"])
    ka.add_argument("--rtol", type=float)
    ka.set_defaults(handler=cmd_kavg)

    du = sub.add_parser("duality", help="both sides of the duality identity")
    _common(du)
    _ensemble_flags(du)
    du.add_argument("--s")
    du.add_argument("--lhs-method", dest="lhs_method", choices=["auto", "quad", "mc"])
    du.add_argument("--rhs-method", dest="rhs_method", choices=["auto", "quad", "mc"])
    du.set_defaults(handler=cmd_duality)

    li = sub.add_parser("limit", help="limit functions P, G, B, W")
    _common(li)
    li.add_argument("--kind", choices=[k.value for k in LimitKind])
    li.add_argument("--alpha", type=float)
    li.add_argument("--a", type=float)
    li.add_argument("--tau", type=float)
    li.add_argument("--y")
    li.add_argument("--sigma")
    li.set_defaults(handler=cmd_limit)

    cl = sub.add_parser("classify", help="regime and saddle points")
    _common(cl)
    cl.add_argument("--family", choices=[f.value for f in Family])
    cl.add_argument("--t", type=float)
    cl.add_argument("--b", type=float)
    cl.set_defaults(handler=cmd_classify)

    sc = sub.add_parser("scan", help="convergence scan toward a limit theorem")
    _common(sc)
    sc.add_argument("--family", choices=[f.value for f in Family])
    sc.add_argument("--beta", type=float)
    sc.add_argument("--n", type=int)
    sc.add_argument("--r", type=int)
    sc.add_argument("--m", type=int)
    sc.add_argument("--b", type=float)
    sc.add_argument("--a", type=float)
    sc.add_argument("--t", type=float)
    sc.add_argument("--tau", type=float)
    sc.add_argument("--regime", choices=["subcritical", "critical", "supercritical"])
    sc.add_argument("--N-list", dest="N_list", help="comma-separated sizes")
    sc.add_argument("--y-grid", dest="y_grid", help="points separated by ';', coordinates by ','")
    sc.add_argument("--sigma")
    sc.add_argument("--f-fixed", dest="f_fixed")
    sc.add_argument("--const-form", dest="const_form", choices=["derived", "printed"])
    sc.set_defaults(handler=cmd_scan)
    return parser


def main(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.handler(_merge(args))
    except (UsageError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
