"""Command line front end: ``analyze``, ``poisson``, ``maximal`` and ``zoo``.

Each run reads one optional JSON config; command-line flags override its
fields. Reports embed the resolved config (minus output locations and the
thread cap, which never change results) and the package version.

Exit codes
    0  success
    1  a certificate failed, or an unexpected numerical failure
    2  the chain is not Wasserstein contractive
    3  I/O, parse, usage or input-validation error
    4  direct and Neumann Poisson solutions disagree by more than 1e-6
    5  a Monte Carlo dominance check failed beyond 3 sigma
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, io, zoo
from .core import StateFunction, check_reversibility, stationary_distribution
from .errors import (
    InfiniteDiameter,
    InvalidInput,
    MarkovPoissonError,
    NotContractive,
    NotReversible,
    Reducible,
    WrongKind,
    ZeroDenominator,
)
from .poisson import certificates_csv, certify_lipschitz_bounds, solve_direct, solve_neumann
from .simulate import mc_maximal_experiment, sample_trajectory
from .spectral import check_gap_vs_tau, l2_gap, solve_with_lp_bound
from .transport import coarse_diffusion, contraction_profile, diameter, eccentricity_norm

log = logging.getLogger("markov_poisson")

EXIT_OK, EXIT_CERT, EXIT_NOT_CONTRACTIVE, EXIT_INPUT, EXIT_DISAGREE, EXIT_DOMINANCE = range(6)
AGREEMENT_TOL = 1e-6
INPUT_ERRORS = (InvalidInput, Reducible, ZeroDenominator, WrongKind, NotReversible,
                InfiniteDiameter)

DEFAULTS = {
    "m_max": 64,
    "lambda_tol": 1e-8,
    "p": [1.5, 2.0, 4.0],
    "p0": None,
    "q": 2.0,
    "neumann_tol": 1e-12,
    "nu": None,
    "n": 1000,
    "replicas": 10000,
    "seed": 0,
    "t_grid": None,
}
_BASE = ("kernel", "metric", "m_max", "lambda_tol")
EMBEDDED = {
    "analyze": _BASE + ("p",),
    "poisson": _BASE + ("function", "nu", "p", "p0", "neumann_tol"),
    "maximal": _BASE + ("function", "nu", "n", "replicas", "seed", "t_grid", "q"),
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 3 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="markov-poisson", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def common(p, function=False):
        p.add_argument("--config", help="JSON config; flags override its fields")
        p.add_argument("--kernel", help="kernel JSON document")
        p.add_argument("--metric", help="metric JSON document")
        if function:
            p.add_argument("--function", help="forcing function JSON document")
            p.add_argument("--nu", help="initial distribution JSON (default: stationary)")
        p.add_argument("--m-max", type=int, dest="m_max")
        p.add_argument("--lambda-tol", type=float, dest="lambda_tol")
        p.add_argument("--out", help="output directory (default: current directory)")

    a = sub.add_parser("analyze", help="contraction profile, moments, spectral gap")
    common(a)
    a.add_argument("--p", type=_float_list, help="eccentricity exponents, e.g. '1,2,4'")

    p = sub.add_parser("poisson", help="solve Poisson's equation and certify the bounds")
    common(p, function=True)
    p.add_argument("--p", type=_float_list, help="L^p exponents for the certificates")
    p.add_argument("--p0", type=float, help="moment exponent (default: each p)")
    p.add_argument("--neumann-tol", type=float, dest="neumann_tol")

    m = sub.add_parser("maximal", help="Monte Carlo check of the maximal inequalities")
    common(m, function=True)
    m.add_argument("--n", type=int)
    m.add_argument("--replicas", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--t-grid", type=_float_list, dest="t_grid")
    m.add_argument("--q", type=float)
    m.add_argument("--threads", type=int,
                   help="cap on worker threads (env POISSON_MC_THREADS); results do not depend on it")
    m.add_argument("--dump-trajectory", dest="dump_trajectory",
                   help="write replica 0's path, one state index per line")

    z = sub.add_parser("zoo", help="list or emit built-in chains")
    zsub = z.add_subparsers(dest="zoo_command", required=True, parser_class=Parser)
    zsub.add_parser("list", help="list models and their default parameters")
    e = zsub.add_parser("emit", help="write kernel/metric/pi/f documents for a model")
    e.add_argument("name")
    e.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    e.add_argument("--out", help="output directory (default: current directory)")
    return parser


# ------------------------------------------------------------ config

def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        loaded = io.read_json(args.config)
        unknown = set(loaded) - set(DEFAULTS) - {"kernel", "metric", "function", "threads"}
        if unknown:
            raise InvalidInput(f"{args.config}: unknown config fields {sorted(unknown)}")
        # paths inside a config are relative to the config file
        base = Path(args.config).parent
        for key in ("kernel", "metric", "function", "nu"):
            if loaded.get(key) is not None:
                loaded[key] = str(base / loaded[key])
        cfg.update(loaded)
    for key, value in vars(args).items():
        if value is not None:
            cfg[key] = value
    return cfg


def embedded(cfg: dict) -> dict:
    """Settings that determine a command's results; output paths and threads excluded."""
    return {k: cfg.get(k) for k in sorted(EMBEDDED[cfg["command"]])}


def _need(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError(f"missing required setting(s): {', '.join(missing)}")


def _as_list(x) -> list[float]:
    return [float(v) for v in (x if isinstance(x, (list, tuple)) else [x])]


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_common(cfg: dict):
    _need(cfg, "kernel", "metric")
    P = io.load_kernel(cfg["kernel"])
    d = io.load_metric(cfg["metric"])
    if P.n != d.n:
        raise InvalidInput(f"kernel has {P.n} states but metric has {d.n}")
    return P, d


def _load_function(cfg: dict, n: int):
    _need(cfg, "function")
    f = io.load_function(cfg["function"])
    nu = io.load_distribution(cfg["nu"]) if cfg.get("nu") else None
    for name, obj in (("function", f), ("nu", nu)):
        if obj is not None and obj.n != n:
            raise InvalidInput(f"{name} has {obj.n} states but kernel has {n}")
    return f, nu


def _header(cfg: dict) -> dict:
    return {"version": __version__, "config": embedded(cfg)}


# ------------------------------------------------------------ commands

def cmd_analyze(cfg: dict) -> int:
    P, d = _load_common(cfg)
    # contraction first: a non-contractive chain is reported as such even when reducible
    profile = contraction_profile(P, d, m_max=int(cfg["m_max"]), lambda_tol=float(cfg["lambda_tol"]))
    pi = stationary_distribution(P)
    ecc = {}
    for p in _as_list(cfg["p"]):
        rep = eccentricity_norm(pi, d, p)
        ecc[f"{p:g}"] = {"E_p": rep.values, "eps_p": rep.eps_p}
    sigma_x, sigma = coarse_diffusion(P, d, pi)
    gap = l2_gap(P, pi)
    reversible = check_reversibility(P, pi)
    certs = []
    if reversible:
        certs.append(check_gap_vs_tau(P, pi, d, profile, gap))
    report = _header(cfg) | {
        "n": P.n,
        "pi": pi.weights,
        "profile": profile.to_json(),
        "m": profile.m,
        "lambda": profile.Lambda,
        "delta": diameter(d),
        "eccentricity": ecc,
        "sigma": {"per_state": sigma_x.values, "l2": sigma},
        "gap": gap.to_json(),
        "reversible": reversible,
        "certificates": [c.as_row() for c in certs],
    }
    out = _out_dir(cfg)
    io.write_json(out / "analysis.json", report)
    ok = all(c.holds for c in certs)
    log.info("analysis written to %s", out / "analysis.json")
    return EXIT_OK if ok else EXIT_CERT


def cmd_poisson(cfg: dict) -> int:
    P, d = _load_common(cfg)
    f, _ = _load_function(cfg, P.n)
    # contraction first: a non-contractive chain is reported as such even when reducible
    profile = contraction_profile(P, d, m_max=int(cfg["m_max"]), lambda_tol=float(cfg["lambda_tol"]))
    pi = stationary_distribution(P)
    direct = solve_direct(P, pi, f)
    neumann = solve_neumann(P, pi, f, profile, d, tol=float(cfg["neumann_tol"]))
    agreement = float(np.abs(direct.u.values - neumann.u.values).max())

    certs = []
    p0 = cfg.get("p0")
    for p in _as_list(cfg["p"]):
        certs += certify_lipschitz_bounds(direct, f, d, pi, profile, p=p,
                                          p0=None if p0 is None else float(p0))
    # the Lipschitz and sup certificates do not depend on p
    seen, unique = set(), []
    for c in certs:
        if c.name not in seen:
            seen.add(c.name)
            unique.append(c)
    certs = unique
    gap = l2_gap(P, pi)
    if gap.kappa < 1.0:
        for p in _as_list(cfg["p"]):
            if p > 1:
                certs.append(solve_with_lp_bound(P, pi, f, p, gap)[1])
    if check_reversibility(P, pi):
        certs.append(check_gap_vs_tau(P, pi, d, profile, gap))

    out = _out_dir(cfg)
    (out / "certificates.csv").write_text(certificates_csv(certs))
    io.write_json(out / "u.json", io.function_doc(direct.u))
    report = _header(cfg) | {
        "residual_direct": direct.residual_inf,
        "residual_neumann": neumann.residual_inf,
        "neumann_terms": neumann.neumann_terms,
        "agreement": agreement,
        "lambda": profile.Lambda,
        "certificates": [c.as_row() for c in certs],
    }
    io.write_json(out / "poisson.json", report)
    if agreement > AGREEMENT_TOL:
        print(f"direct and Neumann solutions disagree by {agreement:.3g}", file=sys.stderr)
        return EXIT_DISAGREE
    return EXIT_OK if all(c.holds for c in certs) else EXIT_CERT


def cmd_maximal(cfg: dict) -> int:
    P, d = _load_common(cfg)
    f, nu = _load_function(cfg, P.n)
    t_grid = cfg.get("t_grid")
    if not t_grid:
        raise UsageError("t_grid must list at least one threshold")
    threads = cfg.get("threads")
    if threads is None and os.environ.get("POISSON_MC_THREADS"):
        try:
            threads = int(os.environ["POISSON_MC_THREADS"])
        except ValueError as exc:
            raise UsageError("POISSON_MC_THREADS must be an integer") from exc
    # contraction first: a non-contractive chain is reported as such even when reducible
    profile = contraction_profile(P, d, m_max=int(cfg["m_max"]), lambda_tol=float(cfg["lambda_tol"]))
    pi = stationary_distribution(P)
    report = mc_maximal_experiment(P, nu, f, int(cfg["n"]), int(cfg["replicas"]), int(cfg["seed"]),
                                   _as_list(t_grid), d, q=float(cfg["q"]), profile=profile,
                                   pi=pi, threads=threads)
    out = _out_dir(cfg)
    (out / "maximal.csv").write_text(report.to_csv())
    io.write_json(out / "maximal.json", _header(cfg) | report.to_json())
    if cfg.get("dump_trajectory"):
        traj = sample_trajectory(P, nu if nu is not None else pi, int(cfg["n"]), int(cfg["seed"]))
        Path(cfg["dump_trajectory"]).write_text("".join(f"{x}\n" for x in traj.states))
    return EXIT_OK if report.all_dominance_hold else EXIT_DOMINANCE


def _parse_param(text: str):
    if "=" not in text:
        raise UsageError(f"--param expects KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def cmd_zoo(args: argparse.Namespace) -> int:
    if args.zoo_command == "list":
        for name, defaults, doc in zoo.list_models():
            params = " ".join(f"{k}={v}" for k, v in defaults.items())
            print(f"{name:20s} {doc}  [{params}]")
        for name, note in zoo.DOCUMENTED_ONLY.items():
            print(f"{name:20s} ({note})")
        return EXIT_OK
    params = dict(_parse_param(p) for p in args.param)
    model = zoo.build(args.name, **params)
    out = _out_dir({"out": args.out})
    io.write_json(out / "kernel.json", io.kernel_doc(model.kernel))
    io.write_json(out / "metric.json", io.metric_doc(model.metric))
    if model.pi is not None:
        io.write_json(out / "pi.json", io.distribution_doc(model.pi))
    # example forcing function: indicator of the last state
    f = np.zeros(model.kernel.n)
    f[-1] = 1.0
    io.write_json(out / "f.json", io.function_doc(StateFunction(f)))
    io.write_json(out / "model.json", {"name": model.spec.name, "parameters": model.spec.parameters,
                                       "expected": model.spec.expected, "version": __version__})
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "poisson": cmd_poisson, "maximal": cmd_maximal}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "zoo":
            return cmd_zoo(args)
        return COMMANDS[args.command](resolve(args))
    except NotContractive as exc:
        print(f"not contractive: {exc}", file=sys.stderr)
        return EXIT_NOT_CONTRACTIVE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, *INPUT_ERRORS) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MarkovPoissonError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
