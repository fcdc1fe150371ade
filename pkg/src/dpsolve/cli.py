"""Command-line interface.

Subcommands: solve, evaluate, rollout, check, oracle. Models come from
a JSON document (--model FILE) or the registry (--zoo NAME with
repeatable --param key=value overrides). Output is a human-readable
table or machine-readable JSON (--format structured); structured output
round-trips values and policies exactly and is byte-identical for
identical invocations.

Exit codes: 0 success, 1 usage error, 2 validation or parse failure,
3 non-convergence, 4 structure violation detected by a verifier.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import zoo
from .fixed_point import NonConvergenceError
from .mdp import (
    FiniteMdp,
    ModelFormatError,
    ValidationError,
    load_model,
    validate,
)
from .rollout import RolloutConfig, horizon_for_bias, simulate_policy, truncation_bias
from .solver import (
    backward_induction,
    bellman_residuals,
    evaluate_policy_exact,
    oracle_horizon,
    solve,
)
from .structure import run_class_checks

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3
EXIT_STRUCTURE = 4

TABLE_PAGE = 50
DEFAULT_ROLLOUT_BIAS = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); route to our code 1
        raise UsageError(message)


def _parse_param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise UsageError(f"--param expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    for cast in (int, float):
        try:
            return key, cast(raw)
        except ValueError:
            continue
    return key, raw


def _build_parser() -> _Parser:
    parser = _Parser(prog="dpsolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", help="path to a JSON model document")
        p.add_argument("--zoo", help="registered model name", metavar="NAME")
        p.add_argument(
            "--param",
            action="append",
            default=[],
            metavar="K=V",
            help="zoo parameter override (repeatable); n_state/n_action set grid sizes",
        )
        p.add_argument("--tol", type=float, default=1e-8, help="solver tolerance")
        p.add_argument("--seed", type=int, default=0, help="random seed")
        p.add_argument("--horizon", type=int, default=None, help="horizon override")
        p.add_argument("--trajectories", type=int, default=1000, help="rollout sample size")
        p.add_argument(
            "--format", choices=("table", "structured"), default="table", help="output format"
        )
        p.add_argument("--out", default=None, help="also write the output to this path")
        p.add_argument(
            "--policy",
            default=None,
            metavar="FILE",
            help="JSON policy (list of actions, or an object with a 'policy' field); "
            "default is the greedy policy from solving at --tol",
        )
        p.add_argument("--initial-state", type=int, default=0, help="rollout start state")
        p.add_argument("--trials", type=int, default=100, help="structure-check trials")
        return p

    add("solve", "compute the optimal values and greedy policy").set_defaults(func=_cmd_solve)
    add("evaluate", "exact value of a stationary policy").set_defaults(func=_cmd_evaluate)
    add("rollout", "Monte Carlo estimate of a policy value").set_defaults(func=_cmd_rollout)
    add("check", "run the structural verifier suite").set_defaults(func=_cmd_check)
    add("oracle", "compare the solver against backward induction").set_defaults(func=_cmd_oracle)
    return parser


def _resolve_model(args) -> tuple[dict, zoo.NamedModel | None, FiniteMdp]:
    """Returns (source description, zoo entry or None, finite model).

    Continuous zoo models are discretized here; the grid object is kept
    on ``args`` for the check command.
    """
    if args.model and args.zoo:
        raise UsageError("give either --model or --zoo, not both")
    params = dict(_parse_param(p) for p in args.param)
    args.grid = None
    if args.model:
        if params:
            raise UsageError("--param only applies to --zoo models")
        path = Path(args.model)
        if not path.exists():
            raise UsageError(f"model file not found: {path}")
        model = load_model(path)
        return {"model_file": str(path)}, None, model
    if args.zoo:
        n_state = params.pop("n_state", None)
        n_action = params.pop("n_action", None)
        if n_state is not None:
            n_state = int(n_state)
        if n_action is not None:
            n_action = int(n_action)
        named = zoo.build(args.zoo, params)
        source = {"zoo": named.name, "params": named.params}
        if named.is_continuous:
            args.grid = named.grid(n_state, n_action)
            source["grid"] = [args.grid.mdp.n_states, args.grid.mdp.n_actions]
            model = args.grid.mdp
        else:
            model = named.model
        return source, named, model
    raise UsageError("a model source is required: --model FILE or --zoo NAME")


def _require_valid_model(model: FiniteMdp) -> None:
    problems = validate(model)
    if problems:
        raise ValidationError(problems)


def _emit(args, payload: dict, table: str) -> int:
    if args.format == "structured":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = table
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _state_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = []
    for start in range(0, len(rows), TABLE_PAGE):
        chunk = rows[start : start + TABLE_PAGE]
        if start:
            lines.append("")
        lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
        for row in chunk:
            lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _load_policy(args, model: FiniteMdp) -> tuple[np.ndarray, str]:
    if args.policy is None:
        return solve(model, tol=args.tol).policy, "greedy"
    path = Path(args.policy)
    if not path.exists():
        raise UsageError(f"policy file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if isinstance(doc, dict):
        doc = doc.get("policy")
    if not isinstance(doc, list):
        raise ModelFormatError(f"{path}: expected a list of actions or a 'policy' field")
    return np.asarray(doc, dtype=int), str(path)


def _cmd_solve(args) -> int:
    source, _, model = _resolve_model(args)
    _require_valid_model(model)
    result = solve(model, tol=args.tol)
    residuals = bellman_residuals(model, result.values)
    payload = {
        "command": "solve",
        "source": source,
        "beta": model.beta,
        "tol": args.tol,
        "values": [float(v) for v in result.values],
        "policy": [int(a) for a in result.policy],
        "iterations": result.trace.iterations,
        "final_residual": result.trace.residuals[-1],
        "bellman_residual": result.bellman_residual,
        "epsilon_certificate": result.epsilon_certificate,
    }
    rows = [
        [str(s), _fmt(result.values[s]), str(int(result.policy[s])), _fmt(residuals[s])]
        for s in model.states
    ]
    table = _state_table(["state", "value", "action", "residual"], rows)
    table += (
        f"iterations {result.trace.iterations}  "
        f"final residual {result.trace.residuals[-1]:.3e}  "
        f"certified gap {result.epsilon_certificate:.3e}\n"
    )
    return _emit(args, payload, table)


def _cmd_evaluate(args) -> int:
    source, _, model = _resolve_model(args)
    _require_valid_model(model)
    policy, policy_source = _load_policy(args, model)
    values = evaluate_policy_exact(model, policy)
    payload = {
        "command": "evaluate",
        "source": source,
        "policy_source": policy_source,
        "policy": [int(a) for a in policy],
        "values": [float(v) for v in values],
    }
    rows = [[str(s), _fmt(values[s]), str(int(policy[s]))] for s in model.states]
    table = _state_table(["state", "value", "action"], rows)
    return _emit(args, payload, table)


def _cmd_rollout(args) -> int:
    source, _, model = _resolve_model(args)
    _require_valid_model(model)
    policy, policy_source = _load_policy(args, model)
    horizon = args.horizon if args.horizon is not None else horizon_for_bias(model, DEFAULT_ROLLOUT_BIAS)
    cfg = RolloutConfig(
        n_trajectories=args.trajectories,
        horizon=horizon,
        seed=args.seed,
        initial_state=args.initial_state,
    )
    estimate = simulate_policy(model, policy, cfg)
    payload = {
        "command": "rollout",
        "source": source,
        "policy_source": policy_source,
        "n_trajectories": cfg.n_trajectories,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "initial_state": cfg.initial_state,
        "mean": estimate.mean,
        "standard_error": estimate.standard_error,
        "truncation_bias_bound": estimate.truncation_bias_bound,
    }
    table = (
        f"estimate {_fmt(estimate.mean)} +- {estimate.standard_error:.3e} (standard error)"
        f" +- {estimate.truncation_bias_bound:.3e} (truncation bias bound)\n"
        f"trajectories {cfg.n_trajectories}  horizon {cfg.horizon}  seed {cfg.seed}"
        f"  initial state {cfg.initial_state}\n"
    )
    return _emit(args, payload, table)


def _cmd_check(args) -> int:
    source, named, model = _resolve_model(args)
    problems = validate(model)
    reports = []
    if not problems and args.grid is not None:
        reports = run_class_checks(args.grid, trials=args.trials, seed=args.seed, solve_tol=args.tol)
    claimed = named.claimed_class.tag if named else "finite"
    payload = {
        "command": "check",
        "source": source,
        "claimed_class": claimed,
        "validation_problems": problems,
        "reports": [
            {
                "name": r.name,
                "passed": r.passed,
                "trials": r.trials,
                "failures": r.failures,
                "worst_violation": r.worst_violation,
                "note": r.note,
            }
            for r in reports
        ],
    }
    lines = [f"claimed class: {claimed}"]
    if problems:
        lines.append("validation FAILED:")
        lines.extend(f"  - {p}" for p in problems)
    else:
        lines.append("validation passed")
        if not reports:
            lines.append("no numeric structure checks for this class")
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        lines.append(
            f"{r.name}: {status} ({r.trials - r.failures}/{r.trials} trials, "
            f"worst violation {r.worst_violation:.3e}) {r.note}"
        )
    code = _emit(args, payload, "\n".join(lines) + "\n")
    if problems:
        return EXIT_INVALID
    if any(not r.passed for r in reports):
        return EXIT_STRUCTURE
    return code


def _cmd_oracle(args) -> int:
    source, _, model = _resolve_model(args)
    _require_valid_model(model)
    horizon = args.horizon if args.horizon is not None else oracle_horizon(model, args.tol)
    result = solve(model, tol=args.tol)
    oracle_values = backward_induction(model, horizon)
    truncation = truncation_bias(model, horizon)
    agreement_bound = args.tol + truncation
    worst = float(np.max(np.abs(result.values - oracle_values)))
    payload = {
        "command": "oracle",
        "source": source,
        "tol": args.tol,
        "horizon": horizon,
        "truncation_bound": truncation,
        "agreement_bound": agreement_bound,
        "max_abs_difference": worst,
        "solve_values": [float(v) for v in result.values],
        "oracle_values": [float(v) for v in oracle_values],
    }
    rows = [
        [
            str(s),
            _fmt(result.values[s]),
            _fmt(oracle_values[s]),
            f"{abs(result.values[s] - oracle_values[s]):.3e}",
        ]
        for s in model.states
    ]
    table = _state_table(["state", "solve", "oracle", "|diff|"], rows)
    table += (
        f"horizon {horizon}  max |diff| {worst:.3e}  "
        f"agreement bound {agreement_bound:.3e} (tol + truncation {truncation:.3e})\n"
    )
    code = _emit(args, payload, table)
    if worst > agreement_bound:
        sys.stderr.write(
            f"dpsolve: solver and oracle disagree by {worst:.3e}, "
            f"beyond the bound {agreement_bound:.3e}\n"
        )
        return EXIT_INVALID
    return code


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"dpsolve: usage error: {exc}\n")
        return EXIT_USAGE
    except zoo.UnknownModelError as exc:
        sys.stderr.write(f"dpsolve: {exc}\n")
        return EXIT_USAGE
    except (ModelFormatError, ValidationError) as exc:
        sys.stderr.write(f"dpsolve: invalid model: {exc}\n")
        return EXIT_INVALID
    except NonConvergenceError as exc:
        sys.stderr.write(f"dpsolve: {exc}\n")
        return EXIT_NO_CONVERGENCE
    except (ValueError, TypeError) as exc:
        sys.stderr.write(f"dpsolve: usage error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
