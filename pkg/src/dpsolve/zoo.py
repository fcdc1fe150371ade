"""Registry of canonical decision-process instances.

Each entry pairs a parameterized builder with the structural class it
claims, so the same name drives solving, rollout, and the class's
verifier suite. Finite models come out as :class:`FiniteMdp`; continuous
ones as :class:`ContinuousModelSpec` with default grid sizes attached.

Counterexample entries claim the class their construction deliberately
violates; running their claimed suite must flag them, which is how the
checkers themselves are kept honest.

Shock distributions are truncated and renormalized so every transition
row is exactly stochastic. Reference values are regenerated in-repo by
the backward-induction oracle and shipped with their provenance; they
are never imported from outside sources.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Union

import numpy as np

from .mdp import FiniteMdp
from .structure import (
    CONTINUOUS,
    CONTINUOUS_CONCAVE,
    COUNTABLE_COMPACT,
    FINITE,
    MONOTONE,
    ContinuousModelSpec,
    GridModel,
    StructuralClass,
    discretize,
)

Model = Union[FiniteMdp, ContinuousModelSpec]


class UnknownModelError(ValueError):
    """Requested name is not in the registry."""


@dataclass(frozen=True)
class NamedModel:
    """A built zoo instance.

    ``reference_values`` (present only when built at default parameters
    and golden data is shipped) pairs state indices with oracle values;
    ``reference_provenance`` records how they were generated.
    """

    name: str
    claimed_class: StructuralClass
    params: dict
    model: Model
    is_counterexample: bool = False
    grid_defaults: tuple[int, int] | None = None
    reference_values: tuple[tuple[int, float], ...] | None = None
    reference_provenance: dict | None = None

    @property
    def is_continuous(self) -> bool:
        return isinstance(self.model, ContinuousModelSpec)

    def grid(self, n_state: int | None = None, n_action: int | None = None) -> GridModel:
        """Discretize a continuous instance (defaults from the registry)."""
        if not self.is_continuous:
            raise ValueError(f"model {self.name!r} is already finite")
        ns, na = self.grid_defaults
        return discretize(self.model, n_state or ns, n_action or na)

    def finite(self, n_state: int | None = None, n_action: int | None = None) -> FiniteMdp:
        """The finite model itself, or the default discretization."""
        if self.is_continuous:
            return self.grid(n_state, n_action).mdp
        return self.model


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    _require(0.0 < beta < 1.0, f"beta must lie strictly inside (0, 1), got {beta}")
    return beta


def _machine_replacement(n_states: int, beta: float, wear_prob: float, replace_cost: float) -> FiniteMdp:
    """Keep-or-replace a machine whose output decays with wear.

    States are wear levels 0 (new) .. n_states-1 (worn out), output is
    1 - wear/(n_states-1). Action 0 keeps the machine (it wears one level
    with probability ``wear_prob``); action 1 swaps in a new machine for
    ``replace_cost`` and runs it this period, the new machine wearing the
    same way.
    """
    n_states = int(n_states)
    beta = _check_beta(beta)
    _require(n_states >= 2, f"n_states must be at least 2, got {n_states}")
    _require(0.0 <= wear_prob <= 1.0, f"wear_prob must lie in [0, 1], got {wear_prob}")
    _require(replace_cost >= 0.0, f"replace_cost must be nonnegative, got {replace_cost}")
    output = 1.0 - np.arange(n_states) / (n_states - 1)
    reward = np.column_stack([output, np.full(n_states, output[0] - replace_cost)])
    transition = np.zeros((n_states, 2, n_states))
    for s in range(n_states):
        worn = min(s + 1, n_states - 1)
        transition[s, 0, worn] += wear_prob
        transition[s, 0, s] += 1.0 - wear_prob
        transition[s, 1, 1] += wear_prob
        transition[s, 1, 0] += 1.0 - wear_prob
    return FiniteMdp(
        n_states=n_states,
        n_actions=2,
        feasible=np.ones((n_states, 2), dtype=bool),
        reward=reward,
        transition=transition,
        beta=beta,
    )


def _queueing(
    n_queue: int,
    beta: float,
    arrival_prob: float,
    slow_service: float,
    fast_service: float,
    fast_cost: float,
    holding_cost: float,
) -> FiniteMdp:
    """Service-rate control for a single queue, truncated at ``n_queue``.

    The countable queue-length space is cut at ``n_queue`` (arrivals to a
    full queue are lost). Action 0 serves at the slow rate for free;
    action 1 serves at the fast rate for ``fast_cost`` per period. Each
    period one arrival comes with probability ``arrival_prob`` and the
    head job completes with the chosen service probability; rewards are
    the negated holding-plus-service costs.
    """
    n_queue = int(n_queue)
    beta = _check_beta(beta)
    _require(n_queue >= 1, f"n_queue must be at least 1, got {n_queue}")
    for name, p in (("arrival_prob", arrival_prob), ("slow_service", slow_service), ("fast_service", fast_service)):
        _require(0.0 <= p <= 1.0, f"{name} must lie in [0, 1], got {p}")
    _require(fast_cost >= 0.0, f"fast_cost must be nonnegative, got {fast_cost}")
    _require(holding_cost >= 0.0, f"holding_cost must be nonnegative, got {holding_cost}")
    S = n_queue + 1
    service = (slow_service, fast_service)
    cost = (0.0, fast_cost)
    reward = np.empty((S, 2))
    transition = np.zeros((S, 2, S))
    for q in range(S):
        for a in range(2):
            reward[q, a] = -(holding_cost * q + cost[a])
            depart = service[a] if q > 0 else 0.0
            arrive = arrival_prob if q < n_queue else 0.0
            for d, pd in ((1, depart), (0, 1.0 - depart)):
                for o, po in ((1, arrive), (0, 1.0 - arrive)):
                    transition[q, a, min(max(q - d + o, 0), n_queue)] += pd * po
    return FiniteMdp(
        n_states=S,
        n_actions=2,
        feasible=np.ones((S, 2), dtype=bool),
        reward=reward,
        transition=transition,
        beta=beta,
    )


def _truncated_poisson(mean: float, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    ks = np.arange(cutoff + 1)
    logpmf = ks * math.log(mean) - mean - np.array([math.lgamma(k + 1.0) for k in ks])
    pmf = np.exp(logpmf)
    return ks.astype(float), pmf / pmf.sum()


def _inventory(
    capacity: float,
    beta: float,
    demand_mean: float,
    demand_cutoff: int,
    price: float,
    order_cost: float,
) -> ContinuousModelSpec:
    """Lost-sales inventory control with order-up-to actions.

    The state is the stock level in [0, capacity]; the action is an
    order-up-to target (targets below the current stock order nothing,
    so every action is feasible everywhere). Demand is Poisson with
    ``demand_mean``, truncated at ``demand_cutoff`` and renormalized.
    Sales earn ``price`` per unit, ordering costs ``order_cost`` per
    unit, and holding is free: the stage payoff is then increasing in
    the stock and the next-state law is stochastically increasing, the
    monotone-class requirements. Optimal behaviour is base-stock: order
    up to a fixed level when below it, sit still above it. Discretize
    with matching state and action grids so "order nothing" is exactly
    representable at every stock level; otherwise the monotone argmax
    selection can jam on a pure grid artifact.
    """
    capacity = float(capacity)
    beta = _check_beta(beta)
    _require(capacity > 0.0, f"capacity must be positive, got {capacity}")
    _require(demand_mean > 0.0, f"demand_mean must be positive, got {demand_mean}")
    demand_cutoff = int(demand_cutoff)
    _require(demand_cutoff >= 1, f"demand_cutoff must be at least 1, got {demand_cutoff}")
    _require(price >= 0.0, f"price must be nonnegative, got {price}")
    _require(order_cost >= 0.0, f"order_cost must be nonnegative, got {order_cost}")
    demand, pmf = _truncated_poisson(demand_mean, demand_cutoff)

    def reward(stock: float, target: float) -> float:
        post = max(stock, target)
        expected_sales = float(np.minimum(post, demand) @ pmf)
        return price * expected_sales - order_cost * (post - stock)

    def atoms(stock: float, target: float):
        post = max(stock, target)
        return [(max(post - d, 0.0), p) for d, p in zip(demand, pmf)]

    return ContinuousModelSpec(
        state_interval=(0.0, capacity),
        action_interval=(0.0, capacity),
        reward=reward,
        transition_atoms=atoms,
        beta=beta,
        claimed_class=MONOTONE,
    )


def _consumption_savings(
    beta: float,
    utility: str,
    wealth_min: float,
    wealth_max: float,
    gross_return: float,
    income: float,
    consumption_min: float,
    consumption_max: float,
    wealth_utility: float,
) -> ContinuousModelSpec:
    """Consume-or-save with concave utility and affine wealth dynamics.

    Wealth w evolves deterministically: next wealth is
    gross_return * (w - c) + income for consumption c; the stage payoff
    is u(c) + wealth_utility * w (strictly concave in consumption,
    affine in wealth, jointly concave). Parameter ranges are constrained
    so the dynamics map the wealth interval into itself without clamping
    (clamping would break concavity of the continuation term) and so the
    largest consumption is affordable at the lowest wealth, keeping
    every action feasible everywhere.
    """
    beta = _check_beta(beta)
    utilities: dict[str, Callable[[float], float]] = {"sqrt": math.sqrt, "log": math.log}
    _require(
        utility in utilities,
        f"utility must be one of {sorted(utilities)}, got {utility!r}",
    )
    _require(wealth_utility >= 0.0, f"wealth_utility must be nonnegative, got {wealth_utility}")
    _require(wealth_min < wealth_max, f"need wealth_min < wealth_max, got [{wealth_min}, {wealth_max}]")
    _require(
        0.0 < consumption_min < consumption_max,
        f"need 0 < consumption_min < consumption_max, got [{consumption_min}, {consumption_max}]",
    )
    _require(gross_return > 0.0, f"gross_return must be positive, got {gross_return}")
    _require(income >= 0.0, f"income must be nonnegative, got {income}")
    _require(
        consumption_max <= wealth_min,
        f"consumption_max {consumption_max} must not exceed wealth_min {wealth_min} "
        "(every consumption must be affordable at every wealth)",
    )
    lowest_next = gross_return * (wealth_min - consumption_max) + income
    highest_next = gross_return * (wealth_max - consumption_min) + income
    _require(
        lowest_next >= wealth_min and highest_next <= wealth_max,
        "wealth dynamics escape the state interval: next wealth spans "
        f"[{lowest_next}, {highest_next}] outside [{wealth_min}, {wealth_max}]",
    )
    u = utilities[utility]

    def reward(wealth: float, consumption: float) -> float:
        return u(consumption) + wealth_utility * wealth

    def atoms(wealth: float, consumption: float):
        return [(gross_return * (wealth - consumption) + income, 1.0)]

    return ContinuousModelSpec(
        state_interval=(wealth_min, wealth_max),
        action_interval=(consumption_min, consumption_max),
        reward=reward,
        transition_atoms=atoms,
        beta=beta,
        claimed_class=CONTINUOUS_CONCAVE,
    )


def _dynamic_pricing(
    beta: float,
    ref_min: float,
    ref_max: float,
    price_min: float,
    price_max: float,
    base_demand: float,
    ref_sensitivity: float,
    price_sensitivity: float,
    adjustment: float,
    shock: float,
) -> ContinuousModelSpec:
    """Pricing against a drifting reference price.

    The state is the market's reference price; demand is linear in the
    reference and the posted price (floored at zero, which puts a kink
    in the revenue: continuous but not concave). The reference adjusts
    toward the posted price and takes a symmetric three-point shock,
    clamped to the reference interval.
    """
    beta = _check_beta(beta)
    _require(ref_min < ref_max, f"need ref_min < ref_max, got [{ref_min}, {ref_max}]")
    _require(price_min < price_max, f"need price_min < price_max, got [{price_min}, {price_max}]")
    _require(0.0 <= adjustment <= 1.0, f"adjustment must lie in [0, 1], got {adjustment}")
    _require(shock >= 0.0, f"shock must be nonnegative, got {shock}")
    _require(base_demand >= 0.0, f"base_demand must be nonnegative, got {base_demand}")

    def clamp(x: float) -> float:
        return min(max(x, ref_min), ref_max)

    def reward(ref: float, price: float) -> float:
        demand = max(0.0, base_demand + ref_sensitivity * ref - price_sensitivity * price)
        return price * demand

    def atoms(ref: float, price: float):
        center = (1.0 - adjustment) * ref + adjustment * price
        return [
            (clamp(center - shock), 0.25),
            (clamp(center), 0.5),
            (clamp(center + shock), 0.25),
        ]

    return ContinuousModelSpec(
        state_interval=(ref_min, ref_max),
        action_interval=(price_min, price_max),
        reward=reward,
        transition_atoms=atoms,
        beta=beta,
        claimed_class=CONTINUOUS,
    )


def _counterexample_monotone(beta: float, decline: float) -> ContinuousModelSpec:
    """Reward strictly decreasing in the state: the backup cannot stay monotone."""
    beta = _check_beta(beta)
    _require(decline > 0.0, f"decline must be positive, got {decline}")

    def reward(s: float, a: float) -> float:
        return -decline * s + 0.1 * a

    def atoms(s: float, a: float):
        return [(s, 1.0)]

    return ContinuousModelSpec(
        state_interval=(0.0, 1.0),
        action_interval=(0.0, 1.0),
        reward=reward,
        transition_atoms=atoms,
        beta=beta,
        claimed_class=MONOTONE,
    )


def _counterexample_concave(beta: float, kink: float) -> ContinuousModelSpec:
    """Convex reward kink at mid-state: the backup cannot stay concave."""
    beta = _check_beta(beta)
    _require(kink > 0.0, f"kink must be positive, got {kink}")

    def reward(s: float, a: float) -> float:
        return kink * abs(s - 0.5) + 0.1 * a

    def atoms(s: float, a: float):
        return [(s, 1.0)]

    return ContinuousModelSpec(
        state_interval=(0.0, 1.0),
        action_interval=(0.0, 1.0),
        reward=reward,
        transition_atoms=atoms,
        beta=beta,
        claimed_class=CONTINUOUS_CONCAVE,
    )


def _counterexample_supermodular(beta: float, target: float) -> ContinuousModelSpec:
    """Decreasing-differences reward: optimal actions fall as the state rises.

    The unique maximizer of -(s + a - target)^2 is a = target - s, so no
    monotone selection from the argmax sets exists anywhere; the backup
    itself stays monotone (the maximized term is constant), isolating
    the selection failure.
    """
    beta = _check_beta(beta)

    def reward(s: float, a: float) -> float:
        return -((s + a - target) ** 2)

    def atoms(s: float, a: float):
        return [(s, 1.0)]

    return ContinuousModelSpec(
        state_interval=(0.0, 1.0),
        action_interval=(0.0, 1.0),
        reward=reward,
        transition_atoms=atoms,
        beta=beta,
        claimed_class=MONOTONE,
    )


@dataclass(frozen=True)
class ZooEntry:
    builder: Callable[..., Model]
    claimed_class: StructuralClass
    defaults: dict
    grid_defaults: tuple[int, int] | None = None
    is_counterexample: bool = False


REGISTRY: dict[str, ZooEntry] = {
    "machine_replacement": ZooEntry(
        builder=_machine_replacement,
        claimed_class=FINITE,
        defaults={"n_states": 4, "beta": 0.9, "wear_prob": 0.5, "replace_cost": 0.7},
    ),
    "queueing": ZooEntry(
        builder=_queueing,
        claimed_class=COUNTABLE_COMPACT,
        defaults={
            "n_queue": 8,
            "beta": 0.95,
            "arrival_prob": 0.4,
            "slow_service": 0.3,
            "fast_service": 0.7,
            "fast_cost": 0.4,
            "holding_cost": 0.25,
        },
    ),
    "inventory": ZooEntry(
        builder=_inventory,
        claimed_class=MONOTONE,
        defaults={
            "capacity": 20.0,
            "beta": 0.95,
            "demand_mean": 3.0,
            "demand_cutoff": 15,
            "price": 4.0,
            "order_cost": 1.0,
        },
        grid_defaults=(100, 100),
    ),
    "consumption_savings": ZooEntry(
        builder=_consumption_savings,
        claimed_class=CONTINUOUS_CONCAVE,
        defaults={
            "beta": 0.9,
            "utility": "sqrt",
            "wealth_min": 1.0,
            "wealth_max": 20.0,
            "gross_return": 0.95,
            "income": 1.0,
            "consumption_min": 0.1,
            "consumption_max": 0.8,
            "wealth_utility": 0.15,
        },
        grid_defaults=(200, 60),
    ),
    "dynamic_pricing": ZooEntry(
        builder=_dynamic_pricing,
        claimed_class=CONTINUOUS,
        defaults={
            "beta": 0.9,
            "ref_min": 1.0,
            "ref_max": 4.0,
            "price_min": 0.5,
            "price_max": 3.0,
            "base_demand": 2.0,
            "ref_sensitivity": 0.5,
            "price_sensitivity": 1.0,
            "adjustment": 0.3,
            "shock": 0.2,
        },
        grid_defaults=(80, 40),
    ),
    "counterexample_monotone": ZooEntry(
        builder=_counterexample_monotone,
        claimed_class=MONOTONE,
        defaults={"beta": 0.9, "decline": 2.0},
        grid_defaults=(51, 21),
        is_counterexample=True,
    ),
    "counterexample_concave": ZooEntry(
        builder=_counterexample_concave,
        claimed_class=CONTINUOUS_CONCAVE,
        defaults={"beta": 0.9, "kink": 5.0},
        grid_defaults=(51, 21),
        is_counterexample=True,
    ),
    "counterexample_supermodular": ZooEntry(
        builder=_counterexample_supermodular,
        claimed_class=MONOTONE,
        defaults={"beta": 0.9, "target": 1.0},
        grid_defaults=(41, 41),
        is_counterexample=True,
    ),
}


def available() -> list[str]:
    """Registered model names, alphabetical."""
    return sorted(REGISTRY)


def describe(name: str) -> str:
    """One paragraph: builder doc, parameter defaults, claimed class."""
    entry = _entry(name)
    doc = (entry.builder.__doc__ or "").strip().splitlines()[0]
    defaults = ", ".join(f"{k}={v!r}" for k, v in entry.defaults.items())
    extra = f", default grid {entry.grid_defaults}" if entry.grid_defaults else ""
    flag = " [counterexample]" if entry.is_counterexample else ""
    return f"{name}: {doc} (class {entry.claimed_class.tag}{flag}; params {defaults}{extra})"


def _entry(name: str) -> ZooEntry:
    if name not in REGISTRY:
        raise UnknownModelError(
            f"unknown model {name!r}; available: {', '.join(available())}"
        )
    return REGISTRY[name]


def _reference_data(name: str) -> tuple[tuple[tuple[int, float], ...], dict] | None:
    try:
        text = resources.files("dpsolve").joinpath("data/reference_values.json").read_text()
    except (FileNotFoundError, ModuleNotFoundError):
        return None
    table = json.loads(text)
    if name not in table:
        return None
    record = table[name]
    values = tuple((s, float(v)) for s, v in enumerate(record["values"]))
    provenance = {k: v for k, v in record.items() if k != "values"}
    return values, provenance


def build(name: str, params: dict | None = None) -> NamedModel:
    """Build a registered model, overriding any subset of its defaults.

    Unknown names or parameters raise with the valid options listed;
    out-of-range values raise from the builder. Reference values are
    attached only for an all-defaults build, since that is what the
    shipped goldens were generated from.
    """
    entry = _entry(name)
    params = dict(params or {})
    unknown = sorted(set(params) - set(entry.defaults))
    if unknown:
        raise ValueError(
            f"unknown parameter(s) {', '.join(unknown)} for model {name!r}; "
            f"valid: {', '.join(sorted(entry.defaults))}"
        )
    merged = {**entry.defaults, **params}
    model = entry.builder(**merged)
    reference_values = None
    reference_provenance = None
    if merged == entry.defaults:
        data = _reference_data(name)
        if data is not None:
            reference_values, reference_provenance = data
    return NamedModel(
        name=name,
        claimed_class=entry.claimed_class,
        params=merged,
        model=model,
        is_counterexample=entry.is_counterexample,
        grid_defaults=entry.grid_defaults,
        reference_values=reference_values,
        reference_provenance=reference_provenance,
    )
