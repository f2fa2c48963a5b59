"""Command-line entry point: ``wcomp classify | oracle | presets``."""

from __future__ import annotations

import argparse
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import arith
from .classify import FAILS, HOLDS, classify, inverse_operator
from .config import InstanceConfig, load_config
from .errors import BudgetExceeded, ConfigError, FactContradiction, IncompletePreimage, WcompError
from .oracle import (
    apply,
    bounded_below_check,
    empirical_norm,
    finite_truth,
    kernel_search,
    point_eval_bound_check,
    random_unit_function,
)
from .presets import DESCRIPTIONS, PRESET_NAMES, load_preset, preset_text
from .quantities import Policy, largest_radius, partial_sups, radius_schedule
from .report import build_report, classification_dict, emit_json, emit_text, jsonable
from .space import budget_scope

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_CONTRADICTION, EXIT_BUDGET = 0, 1, 2, 3, 4
ORACLE_BALL = 20_000


def _load(args) -> InstanceConfig:
    if args.preset and args.config:
        raise ConfigError("give either a config file or --preset, not both")
    if args.preset:
        return load_preset(args.preset)
    if not args.config:
        raise ConfigError("a config file or --preset is required")
    return load_config(args.config)


def run_classify(cfg: InstanceConfig, radius=None) -> dict:
    start = time.perf_counter()
    with budget_scope(cfg.budget):
        inst = cfg.build()
        policy = cfg.make_policy(radius=radius)
        rep = classify(inst, policy)
        body = classification_dict(rep)
    return build_report("classify", cfg.echo(), body, time.perf_counter() - start)


def _oracle_radius(inst, policy: Policy, radius) -> Fraction:
    if radius is not None:
        return Fraction(radius)
    if inst.space.is_finite:
        return inst.space.max_length
    R = policy.radius_for(inst.space, inst.radial)
    return min(R, largest_radius(inst.space, ORACLE_BALL))


def _check(name, outcome, detail, **data) -> dict:
    return {"name": name, "outcome": outcome, "detail": detail, **jsonable(data)}


def run_oracle(cfg: InstanceConfig, radius=None, trials=None, seed=None) -> dict:
    """Classify, then confirm or refute the verdicts with brute-force checks."""
    start = time.perf_counter()
    with budget_scope(cfg.budget):
        inst = cfg.build()
        policy = cfg.make_policy(radius=radius, trials=trials, seed=seed)
        rep = classify(inst, policy)
        body = classification_dict(rep)
        R = _oracle_radius(inst, policy, radius)
        checks = _oracle_checks(inst, rep, policy, R)
        body["oracle"] = {"radius": arith.fmt(R), "trials": policy.trials, "seed": policy.seed, "checks": checks}
    return build_report("oracle", cfg.echo(), body, time.perf_counter() - start)


def _oracle_checks(inst, rep, policy: Policy, R) -> list:
    verdicts = rep.verdicts
    checks = []
    # norm
    emp = empirical_norm(inst, R, policy.trials, policy.seed)
    partial = partial_sups(inst, radius_schedule(inst.space, R))[-1][1]
    bounded = verdicts["bounded_Linf"]
    norm = bounded.witnesses.get("norm")
    if not arith.close(emp, partial):
        checks.append(_check("empirical_norm", "refuted", "test functions disagree with the scanned sup", empirical=emp, scanned_sup=partial))
    elif bounded.status == HOLDS and norm is not None and arith.compare(emp, norm) > 0:
        checks.append(_check("empirical_norm", "refuted", "test functions exceed the certified norm", empirical=emp, norm=norm))
    else:
        what = "equals the scanned sup of the ratio"
        if norm is not None and arith.close(emp, norm):
            what += " and the certified norm"
        checks.append(_check("empirical_norm", "confirmed", what, empirical=emp))
    # kernel
    try:
        ker = kernel_search(inst, R)
    except IncompletePreimage as exc:
        checks.append(_check("kernel_search", "skipped", str(exc)))
    else:
        inj = verdicts["injective"]
        if ker is None:
            outcome = "refuted" if inj.status == FAILS and inst.space.is_finite else "no witness"
            checks.append(_check("kernel_search", outcome, "no kernel element inside the ball"))
        else:
            vanishes = apply(inst, ker, R).is_zero()
            outcome = "refuted" if inj.status == HOLDS or not vanishes else "confirmed"
            where = inst.space.vertex_text(ker.support[0])
            checks.append(_check("kernel_search", outcome, f"indicator of {where} is annihilated", vanishes=vanishes))
    # lower bound
    bb = verdicts["bounded_below"]
    eps = bb.witnesses.get("epsilon") if bb.status == HOLDS else Fraction(0)
    try:
        low, violator = bounded_below_check(inst, eps or Fraction(0), R, policy.trials, policy.seed)
    except IncompletePreimage as exc:
        checks.append(_check("bounded_below_check", "skipped", str(exc)))
    else:
        if bb.status == HOLDS:
            outcome = "refuted" if violator is not None else "confirmed"
            checks.append(_check("bounded_below_check", outcome, f"smallest observed ratio against epsilon {arith.fmt(eps)}", smallest=low))
        else:
            checks.append(_check("bounded_below_check", "observed", "smallest observed ratio", smallest=low))
    # isometry
    iso = verdicts["isometry"]
    if iso.status == HOLDS:
        ok = low is not None and arith.close(low, 1) and arith.close(emp, 1)
        checks.append(_check("isometry", "confirmed" if ok else "refuted", "every test function keeps its norm"))
    # point evaluations
    verts = inst.space.ball(R).vertices
    failures = 0
    total = 0
    for t in range(policy.trials):
        rng = random.Random(f"point:{policy.seed}:{t}")
        f = random_unit_function(inst, verts, rng)
        for v in list(f.values)[:4] + [rng.choice(verts)]:
            total += 1
            failures += not point_eval_bound_check(inst.mu, f, v)
    checks.append(_check("point_eval_bound", "confirmed" if not failures else "refuted", f"{total - failures}/{total} evaluations within the bound"))
    # inverse
    inv = inverse_operator(inst, policy)
    if inv is not None:
        ok = True
        for t in range(min(policy.trials, 16)):
            f = random_unit_function(inst, verts, random.Random(f"inverse:{policy.seed}:{t}"))
            back = apply(inst, apply(inv, f, R), R)
            ok = ok and all(_same(back(v), f(v)) for v in f.values)
        checks.append(_check("inverse", "confirmed" if ok else "refuted", f"W applied after the inverse ({inv.text}) restores test functions"))
    # exhaustive truth on finite spaces
    if inst.space.is_finite:
        truth = finite_truth(inst)
        for prop in ("injective", "bounded_below", "closed_range", "invertible", "isometry", "surjective_isometry"):
            v = verdicts[prop]
            expect = HOLDS if getattr(truth, prop) else FAILS
            outcome = "confirmed" if v.status == expect else "refuted"
            checks.append(_check(f"exhaustive:{prop}", outcome, f"linear algebra says {expect}, classifier says {v.status}"))
    return checks


def _same(a, b) -> bool:
    x, y = complex(arith.to_float(a)), complex(arith.to_float(b))
    return abs(x - y) <= 1e-9 * max(1.0, abs(x), abs(y))


def _emit(report: dict, fmt: str, out) -> None:
    text = emit_json(report) if fmt == "json" else emit_text(report)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wcomp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_args(p):
        p.add_argument("config", nargs="?", help="instance configuration file")
        p.add_argument("--preset", choices=PRESET_NAMES, help="use a built-in instance")
        p.add_argument("--radius", type=Fraction, help="truncation radius")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--out", help="write the report to this file")

    c = sub.add_parser("classify", help="classify an operator instance")
    instance_args(c)
    o = sub.add_parser("oracle", help="classify and cross-check with brute-force tests")
    instance_args(o)
    o.add_argument("--trials", type=int, help="random test functions per check")
    o.add_argument("--seed", type=int, help="random seed")
    p = sub.add_parser("presets", help="list or show built-in instances")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            if args.action == "list":
                for name in PRESET_NAMES:
                    print(f"{name:<9} {DESCRIPTIONS[name]}")
            else:
                if not args.name:
                    raise ConfigError("presets show needs a preset name")
                sys.stdout.write(preset_text(args.name))
            return EXIT_OK
        cfg = _load(args)
        if args.command == "classify":
            report = run_classify(cfg, args.radius)
        else:
            report = run_oracle(cfg, args.radius, args.trials, args.seed)
        _emit(report, args.format, args.out)
        return EXIT_OK
    except FactContradiction as exc:
        print(f"error: contradiction: {exc}", file=sys.stderr)
        return EXIT_CONTRADICTION
    except BudgetExceeded as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WcompError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
