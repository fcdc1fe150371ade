"""Finite discounted decision-process data model.

A :class:`FiniteMdp` holds states, actions, per-state feasible action
sets, a reward table, a transition kernel, and a discount factor.
Value functions and stationary policies are plain numpy arrays indexed
by state; finite-horizon history-dependent strategies are small callable
objects. Everything is immutable after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

# Transition rows must sum to one within this tolerance to be considered
# stochastic; rows inside it are renormalized once at construction.
PROBABILITY_TOL = 1e-12


class ValidationError(ValueError):
    """A model violates its invariants; ``problems`` lists each one."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("invalid model:\n" + "\n".join(f"  - {p}" for p in problems))
        self.problems = list(problems)


class ModelFormatError(ValueError):
    """A model document could not be parsed."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    """Finite discounted decision process.

    Fields:
      n_states, n_actions: index ranges for states and actions.
      feasible: boolean (S, A) mask of allowed actions per state.
      reward: float (S, A) table; entries at infeasible pairs are NaN
        (absent), never sentinel numbers.
      transition: float (S, A, S) kernel; rows at feasible pairs are
        probability vectors, rows at infeasible pairs are zero.
      beta: discount factor in (0, 1).

    Feasible transition rows whose sums drift from 1 by at most
    ``PROBABILITY_TOL`` are renormalized exactly once here, so text
    round-trips do not accumulate drift. Harder violations are left in
    place for :func:`validate` to report.
    """

    n_states: int
    n_actions: int
    feasible: np.ndarray
    reward: np.ndarray
    transition: np.ndarray
    beta: float

    def __post_init__(self):
        S, A = int(self.n_states), int(self.n_actions)
        if S < 1 or A < 1:
            raise ValueError(f"need at least one state and one action, got {S}x{A}")
        # private copies: the instance freezes its arrays, never the caller's
        feasible = np.array(self.feasible, dtype=bool)
        reward = np.array(self.reward, dtype=float)
        transition = np.array(self.transition, dtype=float)
        if feasible.shape != (S, A):
            raise ValueError(f"feasible mask shape {feasible.shape} != {(S, A)}")
        if reward.shape != (S, A):
            raise ValueError(f"reward table shape {reward.shape} != {(S, A)}")
        if transition.shape != (S, A, S):
            raise ValueError(f"transition kernel shape {transition.shape} != {(S, A, S)}")

        # Renormalize rows already stochastic to tolerance; the skip floor
        # makes the operation idempotent across save/load cycles.
        sums = transition.sum(axis=2)
        floor = 4.0 * max(1, S) * np.finfo(float).eps
        drift = np.abs(sums - 1.0)
        fix = feasible & (drift > floor) & (drift <= PROBABILITY_TOL)
        if fix.any():
            transition = transition.copy()
            transition[fix] /= sums[fix][:, None]

        object.__setattr__(self, "n_states", S)
        object.__setattr__(self, "n_actions", A)
        object.__setattr__(self, "feasible", _frozen(feasible))
        object.__setattr__(self, "reward", _frozen(reward))
        object.__setattr__(self, "transition", _frozen(transition))
        object.__setattr__(self, "beta", float(self.beta))

    def feasible_actions(self, state: int) -> np.ndarray:
        """Indices of actions allowed at ``state``, ascending."""
        return np.flatnonzero(self.feasible[state])

    @property
    def max_reward(self) -> float:
        """Largest feasible reward; drives the value upper bound."""
        return float(np.max(self.reward[self.feasible]))

    @property
    def max_abs_reward(self) -> float:
        """Largest feasible |reward|; drives truncation bounds."""
        return float(np.max(np.abs(self.reward[self.feasible])))

    @property
    def states(self) -> range:
        return range(self.n_states)


def validate(model: FiniteMdp) -> list[str]:
    """Report every invariant violation in ``model``; empty iff valid.

    Checks the discount-factor range, nonempty feasible sets, finite
    rewards at feasible pairs, and stochastic transition rows (to
    ``PROBABILITY_TOL``) with no probability mass on infeasible pairs.
    """
    problems: list[str] = []
    if not 0.0 < model.beta < 1.0:
        problems.append(f"discount factor must lie strictly inside (0, 1), got {model.beta}")
    empty = np.flatnonzero(~model.feasible.any(axis=1))
    for s in empty:
        problems.append(f"state {s} has an empty feasible action set")
    bad_reward = model.feasible & ~np.isfinite(model.reward)
    for s, a in zip(*np.nonzero(bad_reward)):
        problems.append(f"reward at feasible pair (s={s}, a={a}) is not finite")
    sums = model.transition.sum(axis=2)
    for s, a in zip(*np.nonzero(model.feasible)):
        row = model.transition[s, a]
        if np.any(row < 0.0):
            problems.append(f"transition row (s={s}, a={a}) has negative probabilities")
        elif abs(sums[s, a] - 1.0) > PROBABILITY_TOL:
            problems.append(
                f"transition row (s={s}, a={a}) sums to {sums[s, a]!r}, not 1 "
                f"within {PROBABILITY_TOL}"
            )
    stray = ~model.feasible & (np.abs(model.transition).sum(axis=2) > 0.0)
    for s, a in zip(*np.nonzero(stray)):
        problems.append(f"infeasible pair (s={s}, a={a}) carries transition mass")
    return problems


def require_valid(model: FiniteMdp) -> FiniteMdp:
    """Raise :class:`ValidationError` unless ``model`` is valid."""
    problems = validate(model)
    if problems:
        raise ValidationError(problems)
    return model


def sup_norm_distance(f, g) -> float:
    """Exact max of |f(s) - g(s)| over the state grid."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError(f"value functions have different shapes: {f.shape} vs {g.shape}")
    if f.size == 0:
        return 0.0
    return float(np.max(np.abs(f - g)))


def value_upper_bound(model: FiniteMdp) -> float:
    """max_r / (1 - beta): no policy value exceeds this in any state."""
    require_valid(model)
    return model.max_reward / (1.0 - model.beta)


def assert_feasible_policy(model: FiniteMdp, policy) -> np.ndarray:
    """Return ``policy`` as an int array after checking feasibility."""
    policy = np.asarray(policy, dtype=int)
    if policy.shape != (model.n_states,):
        raise ValueError(f"policy shape {policy.shape} != ({model.n_states},)")
    if np.any(policy < 0) or np.any(policy >= model.n_actions):
        raise ValueError("policy contains out-of-range action indices")
    bad = np.flatnonzero(~model.feasible[np.arange(model.n_states), policy])
    if bad.size:
        s = int(bad[0])
        raise ValueError(f"policy action {policy[s]} is infeasible at state {s}")
    return policy


# ---------------------------------------------------------------------------
# Finite-horizon history-dependent strategies
# ---------------------------------------------------------------------------

# Decision tables over full histories grow like (S*A)^t; explicit tables
# are for oracle-sized instances only.
MAX_TABULAR_HORIZON = 4
MAX_TABULAR_STATE_ACTIONS = 12


@dataclass(frozen=True)
class FiniteHorizonStrategy:
    """A plan for ``horizon`` periods that may consult the whole history.

    ``decide(states, actions)`` receives the visited states (length t)
    and the actions already taken (length t-1) and must return an action
    feasible at ``states[-1]``.
    """

    horizon: int
    decide: Callable[[tuple[int, ...], tuple[int, ...]], int]


def stationary_strategy(model: FiniteMdp, policy, horizon: int) -> FiniteHorizonStrategy:
    """Wrap a stationary policy as a history-ignoring strategy."""
    policy = assert_feasible_policy(model, policy)

    def decide(states: tuple[int, ...], actions: tuple[int, ...]) -> int:
        return int(policy[states[-1]])

    return FiniteHorizonStrategy(horizon=horizon, decide=decide)


def tabular_strategy(table: dict[tuple[int, ...], int], horizon: int) -> FiniteHorizonStrategy:
    """Strategy backed by an explicit history -> action table.

    Keys are interleaved histories (s1, a1, ..., st).
    """

    def decide(states: tuple[int, ...], actions: tuple[int, ...]) -> int:
        key: list[int] = []
        for t, s in enumerate(states):
            key.append(s)
            if t < len(actions):
                key.append(actions[t])
        return table[tuple(key)]

    return FiniteHorizonStrategy(horizon=horizon, decide=decide)


def all_histories(model: FiniteMdp, horizon: int) -> Iterator[tuple[int, ...]]:
    """Yield every interleaved history (s1, a1, ..., st) with t <= horizon.

    Guarded to oracle-sized instances (horizon <= 4, S*A <= 12) because
    the history count is exponential in the horizon.
    """
    if horizon > MAX_TABULAR_HORIZON:
        raise ValueError(
            f"history tabulation is limited to horizon {MAX_TABULAR_HORIZON}, got {horizon}"
        )
    if model.n_states * model.n_actions > MAX_TABULAR_STATE_ACTIONS:
        raise ValueError(
            "history tabulation is limited to models with at most "
            f"{MAX_TABULAR_STATE_ACTIONS} state-action pairs"
        )

    def extend(history: tuple[int, ...], depth: int) -> Iterator[tuple[int, ...]]:
        yield history
        if depth == horizon:
            return
        state = history[-1]
        for a in model.feasible_actions(state):
            for s_next in model.states:
                yield from extend(history + (int(a), s_next), depth + 1)

    for s1 in model.states:
        yield from extend((s1,), 1)


# ---------------------------------------------------------------------------
# Model document format
# ---------------------------------------------------------------------------
#
# A model document is JSON with fields:
#   n_states, n_actions : ints
#   beta                : float
#   feasible            : per-state list of action indices
#   reward              : list of [s, a, value] triples, one per feasible pair
#   transition          : list of [s, a, s', prob] quadruples; omitted -> 0
# Floats are written with Python's shortest round-trip repr, so parsing
# reproduces the in-memory model bit-exactly.


def model_to_dict(model: FiniteMdp) -> dict:
    """Plain-data document for ``model`` (see module notes on the format)."""
    reward = [
        [int(s), int(a), float(model.reward[s, a])]
        for s, a in zip(*np.nonzero(model.feasible))
    ]
    transition = [
        [int(s), int(a), int(t), float(model.transition[s, a, t])]
        for s, a, t in zip(*np.nonzero(model.transition))
    ]
    return {
        "n_states": model.n_states,
        "n_actions": model.n_actions,
        "beta": model.beta,
        "feasible": [[int(a) for a in model.feasible_actions(s)] for s in model.states],
        "reward": reward,
        "transition": transition,
    }


def model_from_dict(doc: dict) -> FiniteMdp:
    """Parse a model document; raises :class:`ModelFormatError` on bad input."""
    if not isinstance(doc, dict):
        raise ModelFormatError(f"model document must be an object, got {type(doc).__name__}")
    for key in ("n_states", "n_actions", "beta", "feasible", "reward", "transition"):
        if key not in doc:
            raise ModelFormatError(f"model document is missing required field {key!r}")
    try:
        S = int(doc["n_states"])
        A = int(doc["n_actions"])
        beta = float(doc["beta"])
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed scalar field: {exc}") from exc
    if S < 1 or A < 1:
        raise ModelFormatError(f"n_states and n_actions must be positive, got {S}, {A}")

    feasible = np.zeros((S, A), dtype=bool)
    per_state = doc["feasible"]
    if not isinstance(per_state, list) or len(per_state) != S:
        raise ModelFormatError(f"feasible must list actions for each of {S} states")
    for s, actions in enumerate(per_state):
        for a in actions:
            if not 0 <= int(a) < A:
                raise ModelFormatError(f"feasible action {a} out of range at state {s}")
            feasible[s, int(a)] = True

    reward = np.full((S, A), np.nan)
    for entry in doc["reward"]:
        try:
            s, a, value = int(entry[0]), int(entry[1]), float(entry[2])
        except (TypeError, ValueError, IndexError) as exc:
            raise ModelFormatError(f"malformed reward triple {entry!r}") from exc
        if not (0 <= s < S and 0 <= a < A):
            raise ModelFormatError(f"reward triple {entry!r} out of range")
        if not feasible[s, a]:
            raise ModelFormatError(f"reward given for infeasible pair (s={s}, a={a})")
        reward[s, a] = value

    missing = feasible & np.isnan(reward)
    if missing.any():
        rows, cols = np.nonzero(missing)
        raise ModelFormatError(
            f"no reward given for feasible pair (s={rows[0]}, a={cols[0]})"
        )

    transition = np.zeros((S, A, S))
    for entry in doc["transition"]:
        try:
            s, a, t, prob = int(entry[0]), int(entry[1]), int(entry[2]), float(entry[3])
        except (TypeError, ValueError, IndexError) as exc:
            raise ModelFormatError(f"malformed transition quadruple {entry!r}") from exc
        if not (0 <= s < S and 0 <= a < A and 0 <= t < S):
            raise ModelFormatError(f"transition quadruple {entry!r} out of range")
        transition[s, a, t] = prob

    return FiniteMdp(
        n_states=S,
        n_actions=A,
        feasible=feasible,
        reward=reward,
        transition=transition,
        beta=beta,
    )


def dumps_model(model: FiniteMdp) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def save_model(model: FiniteMdp, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def loads_model(text: str) -> FiniteMdp:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(doc)


def load_model(path) -> FiniteMdp:
    """Read a model document from ``path``.

    Parse failures raise :class:`ModelFormatError` with the line and
    column of the offending token.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        return loads_model(text)
    except ModelFormatError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
