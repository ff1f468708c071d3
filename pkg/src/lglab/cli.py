"""Command-line front end: ``lglab <subcommand> ...``.

Every JSON report carries the resolved configuration and the tool version.
Outputs depend only on the arguments and the seed, never on ``--threads``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .core import ActionSpace
from .direct import InstantiationScheme, build_direct_profile, continuity_probe, instantiate
from .errors import CapabilityError, ConfigurationError, DomainError, InvalidInputError, LGLabError, SolverError
from .experiments import DEFAULT_SCHEME, ExperimentConfig, load_game, validate
from .metrics import metric_report
from .payoffs import CURVE_HEADER, AuditConfig, audit, theorem1_curve
from .realization import RealizationBatch, concentration_check, estimate_omega
from .solver import discretize_population, equilibrium_from_tau, solve_equilibrium, symmetrize

EXIT_OK, EXIT_INTERNAL, EXIT_VALIDATION, EXIT_SOLVER, EXIT_CAPABILITY = 0, 1, 2, 3, 4


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _floats(text: str, field: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"{field}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, field: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"{field}: expected comma-separated integers, got {text!r}") from None


def _seed(args) -> int:
    if args.seed is not None:
        raw = args.seed
    else:
        raw = os.environ.get("LGLAB_SEED", "0")
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigurationError(f"seed: expected an integer, got {raw!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigurationError(f"seed: must be a 64-bit unsigned integer, got {seed}")
    return seed


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        d = os.path.dirname(out)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _report(config: dict, result) -> dict:
    return {"version": __version__, "config": config, "result": result}


def _say(msg: str):
    print(msg, file=sys.stderr)


class _Context:
    """Game, scheme and auxiliary mapping resolved from the common options."""

    def __init__(self, args, need_gbar=True):
        self.args = args
        self.game = load_game(args.game)
        self.seed = _seed(args) if hasattr(args, "seed") else 0
        kind = getattr(args, "scheme", None) or DEFAULT_SCHEME.get(
            args.game, "replicate_types" if self.game.is_finite else "quantile_grid"
        )
        self.scheme = InstantiationScheme(kind, self.seed)
        self.tau = None
        self.gbar = {}
        if need_gbar and self.game.is_finite:
            if getattr(args, "tau", None):
                self.tau = _floats(args.tau, "tau")
                self.gbar = dict(equilibrium_from_tau(self.game, self.tau).per_type_strategy)
            else:
                self.gbar = dict(solve_equilibrium(self.game).per_type_strategy)
        self.fallback = None if self.game.is_finite else self.game.population

    def direct(self, n: int):
        gn = instantiate(self.game, n, self.scheme)
        return gn, build_direct_profile(gn, self.gbar, self.fallback)

    def config(self, **extra) -> dict:
        base = {
            "command": self.args.command,
            "game": self.game.to_dict(),
            "game_ref": self.args.game,
            "scheme": self.scheme.to_dict(),
        }
        if self.tau is not None:
            base["tau"] = self.tau
        base.update(extra)
        return base


def _threads(args) -> int:
    t = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if t < 1:
        raise ConfigurationError(f"threads: must be >= 1, got {t}")
    return t


def _audit_cfg(args, seed, threads) -> AuditConfig:
    return AuditConfig(
        method="mc" if args.mc else "exact",
        reps=args.reps,
        seed=seed,
        inflate=not args.no_inflate,
        threads=threads,
    )


def _audit_extra(args) -> dict:
    return {"mode": "mc" if args.mc else "exact", "reps": args.reps if args.mc else None, "inflate": not args.no_inflate}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_solve(args):
    game = load_game(args.game)
    extra = {"command": "solve", "game_ref": args.game}
    if not game.is_finite:
        if args.discretize is None:
            raise ConfigurationError("discretize: parametric games need --discretize M")
        game = discretize_population(game, args.discretize)
        extra["discretize"] = args.discretize
    if args.tau:
        tau = _floats(args.tau, "tau")
        eq = equilibrium_from_tau(game, tau)
        extra["tau"] = tau
    else:
        eq = solve_equilibrium(game)
    _say(f"tau*={np.round(eq.tau_star, 10).tolist()} exploitability={eq.exploitability:.3g} method={eq.method}")
    _write(_dump(_report({**extra, "game": game.to_dict()}, eq.to_dict())), args.out)


def cmd_symmetrize(args):
    game = load_game(args.game)
    if not game.is_finite:
        raise ConfigurationError("game: symmetrize needs a finite_types population")
    if args.tau:
        tau = _floats(args.tau, "tau")
    else:
        tau = solve_equilibrium(game).tau_star.tolist()
    gbar = symmetrize(game, tau)
    result = [{**c.to_dict(), "strategy": s.tolist()} for c, s in gbar.items()]
    cfg = {"command": "symmetrize", "game": game.to_dict(), "game_ref": args.game, "tau": tau}
    _write(_dump(_report(cfg, {"gbar": result})), args.out)


def cmd_direct(args):
    ctx = _Context(args)
    gn, profile = ctx.direct(args.n)
    _say(f"n={args.n} scheme={ctx.scheme.kind} pure={profile.pure}")
    _write(_dump(_report(ctx.config(n=args.n), {"instance": gn.to_dict(), "profile": profile.to_dict()})), args.out)


def cmd_audit(args):
    ctx = _Context(args)
    gn, profile = ctx.direct(args.n)
    rep = audit(gn, profile, _audit_cfg(args, ctx.seed, _threads(args)))
    _say(f"n={args.n} eps_star={rep.eps_star:.6g} method={rep.method}")
    cfg = ctx.config(n=args.n, seed=ctx.seed, **_audit_extra(args))
    _write(_dump(_report(cfg, rep.to_dict())), args.out)


def _curve_csv(rows, timing: bool) -> str:
    return "\n".join([CURVE_HEADER] + [",".join(r.csv_fields(timing)) for r in rows]) + "\n"


def cmd_curve(args):
    ctx = _Context(args)
    ns = _ints(args.ns, "ns")
    rows = theorem1_curve(ctx.game, ctx.scheme, ns, _audit_cfg(args, ctx.seed, _threads(args)), ctx.gbar)
    for r in rows:
        _say(f"n={r.n} eps_star={r.eps_star:.6g} method={r.method}")
    _write(_curve_csv(rows, args.timing), args.out)


def cmd_expost(args):
    ctx = _Context(args)
    gn, profile = ctx.direct(args.n)
    batch = estimate_omega(gn, profile, args.eps, args.reps, ctx.seed, _threads(args))
    _say(f"n={args.n} eps={args.eps} p_hat={batch.p_hat:.4f} wilson=[{batch.wilson_lo:.4f}, {batch.wilson_hi:.4f}]")
    cfg = ctx.config(n=args.n, eps=args.eps, reps=args.reps, seed=ctx.seed)
    if args.csv:
        _write(RealizationBatch.CSV_HEADER + "\n" + batch.csv_row() + "\n", args.out)
    else:
        _write(_dump(_report(cfg, batch.to_dict())), args.out)


def cmd_concentrate(args):
    ctx = _Context(args)
    gn, profile = ctx.direct(args.n)
    rep = concentration_check(gn, profile, args.eps, args.reps, ctx.seed, _threads(args))
    _say(
        f"n={args.n} freq={rep.empirical_freq:.4f} bound={rep.chebyshev_bound:.4f} "
        f"median_bl={rep.median_bl:.4g} holds={rep.holds}"
    )
    result = rep.to_dict()
    result["median_bl"], result["median_rho"] = rep.median_bl, rep.median_rho
    cfg = ctx.config(n=args.n, eps=args.eps, reps=args.reps, seed=ctx.seed)
    _write(_dump(_report(cfg, result)), args.out)


def _space(spec: str, d: float) -> ActionSpace:
    if spec == "two_point":
        return ActionSpace.two_point(d)
    try:
        with open(spec, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"space: cannot read {spec!r} ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"space: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return ActionSpace.from_dict(raw.get("actions", raw) if isinstance(raw, dict) else raw, "space")


def cmd_metric(args):
    space = _space(args.space, args.d)
    rep = metric_report(_floats(args.tau, "tau"), _floats(args.tau2, "tau2"), space)
    out = {k: round(v, 12) for k, v in rep.to_dict().items()}
    sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")


def cmd_probe(args):
    game = load_game(args.game)
    rule = args.rule or getattr(game.population, "rule", None)
    if rule is None:
        raise ConfigurationError("rule: the game names no rule; pass --rule")
    rep = continuity_probe(game, rule, args.grid)
    cfg = {"command": "probe", "game": game.to_dict(), "game_ref": args.game, "rule": rule, "grid": args.grid}
    _write(_dump(_report(cfg, rep.to_dict())), args.out)


def _run_pipeline(cfg: ExperimentConfig, threads: int, timing: bool, out_dir: str | None, label: str, command: str):
    """Curve over ``cfg.ns`` plus a realization batch per n; returns the report dict."""
    game = cfg.game
    gbar, eq = {}, None
    if game.is_finite:
        eq = solve_equilibrium(game)
        gbar = dict(eq.per_type_strategy)
    acfg = AuditConfig(method=cfg.mode, reps=max(cfg.reps, 100), seed=cfg.seed, threads=threads)
    rows = theorem1_curve(game, cfg.scheme, cfg.ns, acfg, gbar)
    fallback = None if game.is_finite else game.population
    per_n = []
    for r in rows:
        lb = (1.0 - 1.0 / r.n) ** 2
        entry = {"n": r.n, "eps_star": r.eps_star, "method": r.method, "stderr": r.stderr}
        line = f"{label} n={r.n} eps_star={r.eps_star:.6g}"
        if label == "example1":
            entry["lower_bound"] = lb
            entry["meets_lower_bound"] = bool(r.eps_star >= lb - 1e-12)
            line += f" lower_bound={lb:.6g}"
        if cfg.reps >= 30:
            gn = instantiate(game, r.n, cfg.scheme)
            profile = build_direct_profile(gn, gbar, fallback)
            batch = estimate_omega(gn, profile, cfg.eps, cfg.reps, cfg.seed, threads)
            entry["omega"] = batch.to_dict()
            line += f" p_hat={batch.p_hat:.4f}"
        per_n.append(entry)
        _say(line)
    result = {"curve": per_n}
    if eq is not None:
        result["equilibrium"] = eq.to_dict()
    if label == "example1":
        tail = [e["eps_star"] for e in per_n if e["n"] >= 4]
        result["non_convergent"] = bool(tail) and min(tail) >= 0.5
    report = _report({"command": command, **cfg.to_dict(), "game": game.to_dict(), "game_ref": cfg.game_ref}, result)
    if out_dir is not None:
        _write(_dump(report), os.path.join(out_dir, "report.json"))
        _write(_curve_csv(rows, timing), os.path.join(out_dir, "curve.csv"))
    return report, rows


def cmd_demo(args):
    ns = tuple(_ints(args.ns, "ns")) if args.ns else {"example1": (4, 40, 400)}.get(args.name, (3, 30, 300))
    raw = {"game": args.name, "ns": list(ns), "eps": args.eps, "reps": args.reps, "seed": _seed(args), "mode": "exact"}
    cfg = validate(json.dumps(raw))
    report, rows = _run_pipeline(cfg, _threads(args), args.timing, args.out, args.name, "demo")
    if args.out is None:
        _write(_dump(report) if args.json else _curve_csv(rows, args.timing), None)


def cmd_run(args):
    cfg = _validate_file(args.config)
    label = cfg.game_ref or "custom"
    report, rows = _run_pipeline(cfg, _threads(args), args.timing, cfg.out, label, "run")
    if cfg.out is None:
        _write(_dump(report), None)


def _validate_file(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"config: cannot read {path!r} ({exc.strerror})") from None
    return validate(text)


def cmd_validate(args):
    cfg = _validate_file(args.config)
    sys.stdout.write(_dump({"version": __version__, "valid": True, "config": {**cfg.to_dict(), "game": cfg.game.to_dict()}}))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _game_opts(p, n=False, scheme=True, tau=True):
    p.add_argument("--game", required=True, help="builtin name (routing, example1, two_type_congestion) or game JSON path")
    if n:
        p.add_argument("--n", type=int, required=True, help="number of players")
    if scheme:
        p.add_argument("--scheme", help="replicate, iid or quantile (default depends on the game)")
    if tau:
        p.add_argument("--tau", help="use this equilibrium aggregate instead of solving, e.g. 0.3333,0.6667")
    p.add_argument("--out", help="output file (default stdout)")


def _seed_opt(p):
    p.add_argument("--seed", help="64-bit seed (default: $LGLAB_SEED, else 0)")


def _audit_opts(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="exact dynamic programming (default)")
    g.add_argument("--mc", action="store_true", help="Monte Carlo estimate")
    p.add_argument("--reps", type=int, default=10_000, help="Monte Carlo replicates")
    p.add_argument("--no-inflate", action="store_true", help="report raw Monte Carlo eps_star")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lglab", description="Direct strategy profiles of large games.")
    parser.add_argument("--version", action="version", version=f"lglab {__version__}")
    parser.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="equilibrium aggregate and auxiliary mapping")
    _game_opts(p, scheme=False)
    p.add_argument("--discretize", type=int, help="midpoint types for parametric games")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("symmetrize", help="auxiliary mapping for a given aggregate")
    _game_opts(p, scheme=False)
    p.set_defaults(fn=cmd_symmetrize)

    p = sub.add_parser("direct", help="instance and direct strategy profile")
    _game_opts(p, n=True)
    _seed_opt(p)
    p.set_defaults(fn=cmd_direct)

    p = sub.add_parser("audit", help="deviation gains and eps_star of a direct profile")
    _game_opts(p, n=True)
    _seed_opt(p)
    _audit_opts(p)
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("curve", help="eps_star over several n, as CSV")
    _game_opts(p)
    p.add_argument("--ns", required=True, help="strictly increasing sizes, e.g. 3,30,300")
    p.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    _seed_opt(p)
    _audit_opts(p)
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("expost", help="probability that a realization is a pure eps-equilibrium")
    _game_opts(p, n=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--csv", action="store_true", help="emit one CSV row instead of JSON")
    _seed_opt(p)
    p.set_defaults(fn=cmd_expost)

    p = sub.add_parser("concentrate", help="concentration of realized summaries")
    _game_opts(p, n=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--reps", type=int, required=True)
    _seed_opt(p)
    p.set_defaults(fn=cmd_concentrate)

    p = sub.add_parser("metric", help="Prohorov and bounded-Lipschitz distances")
    p.add_argument("--space", default="two_point", help="two_point or a JSON file with labels and dist")
    p.add_argument("--d", type=float, default=1.0, help="distance of the two_point space")
    p.add_argument("--tau", required=True)
    p.add_argument("--tau2", required=True)
    p.set_defaults(fn=cmd_metric)

    p = sub.add_parser("probe", help="continuity probe of an auxiliary rule")
    p.add_argument("--game", required=True)
    p.add_argument("--rule")
    p.add_argument("--grid", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_probe)

    p = sub.add_parser("demo", help="builtin experiment")
    p.add_argument("name", choices=["routing", "example1", "two_type_congestion"])
    p.add_argument("--ns")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--reps", type=int, default=0, help="realization replicates per n (0 skips them)")
    p.add_argument("--out", help="directory for report.json and curve.csv")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of CSV")
    p.add_argument("--timing", action="store_true")
    _seed_opt(p)
    p.set_defaults(fn=cmd_demo)

    p = sub.add_parser("run", help="run an experiment config file")
    p.add_argument("config")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("validate", help="check an experiment config file")
    p.add_argument("config")
    p.set_defaults(fn=cmd_validate)
    return parser


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, CapabilityError):
        return EXIT_CAPABILITY
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, (ConfigurationError, DomainError, InvalidInputError)):
        return EXIT_VALIDATION
    return EXIT_INTERNAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except LGLabError as exc:
        _say(f"lglab {args.command}: error: {exc}")
        return exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
