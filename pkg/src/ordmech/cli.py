"""Command-line surface: solve, audit, gen, repro.

Exit codes: 0 success, 1 reproduction/assertion failure, 2 usage or
schema errors.  Commands are deterministic; anything that samples takes
an explicit --seed.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import social_choice as sc
from .assignment import build_preset, reduce_and_solve
from .audit import (audit_additive_assignment, audit_percentile_social_choice,
                    audit_sum_social_choice)
from .core import project_agents
from .errors import OrdmechError, SchemaError
from .fileio import (InstanceFile, audit_report_to_dict, example_to_instance,
                     load_instance, save_instance, save_report,
                     solve_report_to_dict)
from .gallery import EXAMPLES, gen_worked_example, verify_worked_example
from .solvers import SOLVERS

SOCIAL_PRESETS = ("social_choice_sum", "social_choice_median")


def _order_for(inst: InstanceFile) -> sc.DistancePartialOrder:
    if inst.candidate_rankings is not None:
        return sc.distance_partial_order(inst.candidate_rankings)
    return sc.distance_partial_order(inst.fd)


def _require_fd(inst: InstanceFile):
    if inst.fd is None:
        raise SchemaError("this operation needs the numeric facility distances",
                          field="facility_distances")
    return inst.fd


def _parse_outcome(inst: InstanceFile, raw: str):
    names = inst.facilities
    if inst.preset in SOCIAL_PRESETS:
        return names.index(raw)
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != inst.n:
        raise SchemaError(f"assignment outcome needs {inst.n} comma-separated "
                          f"facility names, got {len(parts)}", field="outcome")
    return tuple(names.index(p) for p in parts)


def _parse_objective(raw: str) -> tuple[str, float | None]:
    if raw == "sum":
        return "sum", None
    if raw == "median":
        return "percentile", 0.5
    if raw.startswith("percentile:"):
        try:
            return "percentile", float(raw.split(":", 1)[1])
        except ValueError:
            raise SchemaError(f"bad percentile spec {raw!r}", field="objective") from None
    raise SchemaError(f"unknown objective {raw!r}; use sum, median or "
                      "percentile:<alpha>", field="objective")


def _run_audit(inst: InstanceFile, target, objective: str, alpha: float | None,
               seed: int | None, budget: int) -> dict:
    fd = _require_fd(inst)
    if inst.preset in SOCIAL_PRESETS:
        if objective == "sum":
            report = audit_sum_social_choice(target, inst.profile, fd)
        else:
            if inst.n > 8 and seed is None:
                raise SchemaError("sampling audits need --seed", field="seed")
            report = audit_percentile_social_choice(
                target, inst.profile, fd, alpha, budget=budget, seed=seed or 0)
    else:
        if objective != "sum":
            raise SchemaError("assignment audits support the sum objective only",
                              field="objective")
        problem = build_preset(inst.preset, inst.n, inst.facilities, inst.params)
        report = audit_additive_assignment(target, inst.profile, fd, problem)
    return audit_report_to_dict(report, inst)


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    mechanism = args.mechanism
    audit_dict = None
    if mechanism == "alg1":
        outcome = sc.sum_winner(project_agents(inst.profile, _require_fd(inst)))
        target = outcome.winner
        beta, exact = None, None
        guarantee = {"objective": "sum", "distortion_bound": 3.0}
    elif mechanism == "alg2":
        outcome = sc.median_winner(inst.profile, _order_for(inst))
        target = outcome.winner
        beta, exact = None, None
        guarantee = {"objective": "median", "distortion_bound": 3.0,
                     "percentile_bound": 3.0, "sum_distortion_bound": 5.0}
    elif mechanism == "copeland":
        outcome = sc.copeland_winner(inst.profile)
        target = outcome.winner
        beta, exact = None, None
        guarantee = {"objective": "sum", "distortion_bound": 5.0,
                     "note": "baseline rule"}
    elif mechanism.startswith("reduce:"):
        solver_name = mechanism.split(":", 1)[1]
        if solver_name not in SOLVERS:
            raise SchemaError(f"unknown solver {solver_name!r}; choose from "
                              f"{sorted(SOLVERS)}", field="mechanism")
        problem = build_preset(inst.preset, inst.n, inst.facilities, inst.params)
        solution = reduce_and_solve(problem, inst.profile, _require_fd(inst),
                                    SOLVERS[solver_name])
        target = solution.assignment
        beta, exact = solution.beta, solution.exact
        guarantee = {"formula": "1+2*beta", "beta": solution.beta,
                     "distance_factor": solution.distance_factor,
                     "facility_cost_factor": solution.facility_factor}
    else:
        raise SchemaError(f"unknown mechanism {mechanism!r}", field="mechanism")

    if args.audit is not None:
        objective, alpha = _parse_objective(args.audit)
        audit_dict = _run_audit(inst, target, objective, alpha, args.seed,
                                args.budget)
    report = solve_report_to_dict(inst, mechanism, target, beta, exact,
                                  guarantee, audit_dict)
    _emit(report, args.out)
    return 0


def _cmd_audit(args) -> int:
    inst = load_instance(args.instance)
    target = _parse_outcome(inst, args.outcome)
    objective, alpha = _parse_objective(args.objective)
    report = _run_audit(inst, target, objective, alpha, args.seed, args.budget)
    _emit(report, args.out)
    return 0


def _parse_params(raw: str | None) -> dict:
    params = {}
    if not raw:
        return params
    for part in raw.split(","):
        if "=" not in part:
            raise SchemaError(f"bad parameter {part!r}; use key=value", field="params")
        key, value = part.split("=", 1)
        try:
            num = float(value)
            params[key.strip()] = int(num) if num.is_integer() and "e" not in value.lower() \
                and "." not in value else num
        except ValueError:
            params[key.strip()] = value.strip()
    return params


def _cmd_gen(args) -> int:
    example = gen_worked_example(args.example, **_parse_params(args.params))
    inst = example_to_instance(example)
    if args.out:
        save_instance(inst, args.out)
    else:
        from .fileio import serialize_instance
        sys.stdout.write(serialize_instance(inst))
    return 0


def _cmd_repro(args) -> int:
    names = [args.example] if args.example else list(EXAMPLES)
    failures = 0
    for name in names:
        example = gen_worked_example(name)
        for result in verify_worked_example(example):
            status = "ok" if result.passed else "FAIL"
            print(f"{status:4s} {name} :: {result.label}"
                  + (f" ({result.detail})" if result.detail and not result.passed
                     else ""))
            failures += 0 if result.passed else 1
    print(f"repro: {'all checks passed' if failures == 0 else f'{failures} failures'}")
    return 0 if failures == 0 else 1


def _emit(report: dict, out: str | None) -> None:
    if out:
        save_report(report, out)
    else:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ordmech",
        description="Ordinal facility assignment and social choice with "
                    "worst-case distortion audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a mechanism on an instance")
    p_solve.add_argument("--instance", required=True)
    p_solve.add_argument("--mechanism", required=True,
                         help="alg1 | alg2 | copeland | reduce:<solver>")
    p_solve.add_argument("--audit", default=None,
                         help="also audit the outcome: sum | median | percentile:a")
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.add_argument("--budget", type=int, default=200)
    p_solve.add_argument("--out", default=None)
    p_solve.set_defaults(func=_cmd_solve)

    p_audit = sub.add_parser("audit", help="worst-case distortion of an outcome")
    p_audit.add_argument("--instance", required=True)
    p_audit.add_argument("--outcome", required=True,
                         help="facility name, or comma-separated assignment")
    p_audit.add_argument("--objective", required=True,
                         help="sum | median | percentile:<alpha>")
    p_audit.add_argument("--seed", type=int, default=None)
    p_audit.add_argument("--budget", type=int, default=200)
    p_audit.add_argument("--out", default=None)
    p_audit.set_defaults(func=_cmd_audit)

    p_gen = sub.add_parser("gen", help="emit a named worked instance")
    p_gen.add_argument("--example", required=True,
                       help=f"one of {sorted(EXAMPLES)}")
    p_gen.add_argument("--params", default=None, help="comma list of key=value")
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=_cmd_gen)

    p_repro = sub.add_parser("repro",
                             help="regenerate worked instances and check "
                                  "their documented numbers")
    group = p_repro.add_mutually_exclusive_group(required=True)
    group.add_argument("--all", action="store_true")
    group.add_argument("--example", default=None)
    p_repro.set_defaults(func=_cmd_repro)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (SchemaError, OrdmechError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
