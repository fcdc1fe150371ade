"""Grid discretization and structural-class verification.

Continuous-state models are projected onto uniform grids: each
next-state atom's probability mass is split between the two bracketing
grid points with weights that preserve the conditional mean exactly.
The checkers then test, by sampling, whether the optimality backup of
the induced finite model preserves the claimed invariant class
(monotone, concave, Lipschitz-continuous) and whether the greedy argmax
sets admit a monotone selection. Sampling is the honest desk-scale
rendering of an infinite-dimensional closure property: reports carry
trial counts and, for any violation, a concrete witness that can be
re-checked with a single backup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bellman import bellman_backup, q_table
from .mdp import FiniteMdp, require_valid
from .solver import solve

ATOM_PROB_TOL = 1e-9


@dataclass(frozen=True)
class StructuralClass:
    """A named invariant class of value functions with its verifier suite.

    ``verifiers`` lists the numeric checks a model claiming this class
    must pass. The two ``*_unverifiable`` tags cover classes defined by
    measurability conditions alone (universally measurable selections,
    semianalytic value functions, upper semicontinuity on uncountable
    spaces); such conditions have no finite-representation content, so a
    grid cannot distinguish them, and they carry no numeric verifiers.
    The same applies to general measurable-function classes, infinite
    history spaces, and the measures strategies induce on them: on a
    finite grid measurability is automatic, and infinite histories are
    approximated by truncated rollouts elsewhere.
    """

    tag: str
    verifiers: tuple[str, ...] = ()
    note: str = ""


FINITE = StructuralClass(
    "finite", (), "finite states and actions; every bounded table is admissible"
)
COUNTABLE_COMPACT = StructuralClass(
    "countable_compact",
    (),
    "countable state space truncated to a finite range with a finite action set",
)
CONTINUOUS = StructuralClass(
    "continuous",
    ("preserves_lipschitz",),
    "bounded continuous data; the backup must keep Lipschitz moduli within "
    "the model's own reward and kernel moduli",
)
CONTINUOUS_CONCAVE = StructuralClass(
    "continuous_concave",
    ("preserves_lipschitz", "preserves_concave"),
    "concave rewards and concave kernel on convex sets; the backup must "
    "keep concavity up to grid resolution",
)
MONOTONE = StructuralClass(
    "monotone",
    ("preserves_monotone", "greedy_monotone"),
    "increasing supermodular data; the backup must keep monotonicity and "
    "the argmax sets must admit a monotone selection",
)
USC_UNVERIFIABLE = StructuralClass(
    "usc_unverifiable", (), "upper semicontinuous case; not finitely checkable"
)
SEMIANALYTIC_UNVERIFIABLE = StructuralClass(
    "semianalytic_unverifiable",
    (),
    "universally measurable / semianalytic case; not finitely checkable",
)

CLASSES: dict[str, StructuralClass] = {
    c.tag: c
    for c in (
        FINITE,
        COUNTABLE_COMPACT,
        CONTINUOUS,
        CONTINUOUS_CONCAVE,
        MONOTONE,
        USC_UNVERIFIABLE,
        SEMIANALYTIC_UNVERIFIABLE,
    )
}


@dataclass(frozen=True)
class ContinuousModelSpec:
    """A one-dimensional continuous-state, continuous-action model.

    ``reward(s, a)`` must be bounded on the state-action rectangle. The
    next-state law is given as a finitely supported mixture:
    ``transition_atoms(s, a)`` returns (next_state, probability) pairs.
    Atoms keep the grid projection's mean preservation exact; laws with
    densities should be pre-quantized by the caller. Every action is
    feasible at every state.
    """

    state_interval: tuple[float, float]
    action_interval: tuple[float, float]
    reward: Callable[[float, float], float]
    transition_atoms: Callable[[float, float], Sequence[tuple[float, float]]]
    beta: float
    claimed_class: StructuralClass

    def __post_init__(self):
        lo, hi = self.state_interval
        if not lo < hi:
            raise ValueError(f"degenerate state interval [{lo}, {hi}]")
        a_lo, a_hi = self.action_interval
        if not a_lo < a_hi:
            raise ValueError(f"degenerate action interval [{a_lo}, {a_hi}]")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"discount factor must lie in (0, 1), got {self.beta}")


@dataclass(frozen=True, eq=False)
class GridModel:
    """A continuous model tabulated on uniform grids.

    ``mdp`` is the induced finite model; ``interpolate`` reads a grid
    table off-grid by piecewise-linear interpolation, which preserves
    monotonicity and 1-D concavity of the grid data.
    """

    spec: ContinuousModelSpec
    state_grid: np.ndarray
    action_grid: np.ndarray
    mdp: FiniteMdp

    def interpolate(self, values, x):
        values = np.asarray(values, dtype=float)
        if values.shape != self.state_grid.shape:
            raise ValueError(
                f"value table shape {values.shape} != grid shape {self.state_grid.shape}"
            )
        return np.interp(x, self.state_grid, values)

    @property
    def state_spacing(self) -> float:
        return float(self.state_grid[1] - self.state_grid[0])

    @property
    def action_spacing(self) -> float:
        if self.action_grid.size < 2:
            return 0.0
        return float(self.action_grid[1] - self.action_grid[0])


def project_atoms(grid: np.ndarray, atoms: Sequence[tuple[float, float]]) -> np.ndarray:
    """Project a finitely supported law onto ``grid`` rows of mass.

    Each atom is clamped into the grid range and its mass split between
    the two bracketing grid points so the projected law has exactly the
    atom's (clamped) mean. Returns the probability row over grid points.
    """
    row = np.zeros(len(grid))
    total = 0.0
    for x, p in atoms:
        p = float(p)
        if p < -ATOM_PROB_TOL:
            raise ValueError(f"negative atom probability {p}")
        if p <= 0.0:
            continue
        total += p
        x = min(max(float(x), grid[0]), grid[-1])
        j = int(np.searchsorted(grid, x, side="right"))
        if j >= len(grid):
            row[-1] += p
            continue
        lo, hi = grid[j - 1], grid[j]
        w_hi = (x - lo) / (hi - lo)
        row[j - 1] += p * (1.0 - w_hi)
        row[j] += p * w_hi
    if abs(total - 1.0) > ATOM_PROB_TOL:
        raise ValueError(f"atom probabilities sum to {total!r}, not 1")
    return row


def discretize(spec: ContinuousModelSpec, n_state: int, n_action: int) -> GridModel:
    """Tabulate ``spec`` on uniform grids of the given sizes.

    Rewards are sampled at grid pairs (a non-finite sample means the
    reward is unbounded on the rectangle and raises ValueError);
    transitions are projected atom by atom with mean preservation.
    """
    if n_state < 2 or n_action < 2:
        raise ValueError(f"need at least 2 grid points per axis, got {n_state}x{n_action}")
    state_grid = np.linspace(*spec.state_interval, n_state)
    action_grid = np.linspace(*spec.action_interval, n_action)
    reward = np.empty((n_state, n_action))
    transition = np.empty((n_state, n_action, n_state))
    for i, s in enumerate(state_grid):
        for j, a in enumerate(action_grid):
            r = float(spec.reward(s, a))
            if not np.isfinite(r):
                raise ValueError(
                    f"unbounded reward detected by sampling: reward({s!r}, {a!r}) = {r!r}"
                )
            reward[i, j] = r
            transition[i, j] = project_atoms(state_grid, spec.transition_atoms(s, a))
    mdp = FiniteMdp(
        n_states=n_state,
        n_actions=n_action,
        feasible=np.ones((n_state, n_action), dtype=bool),
        reward=reward,
        transition=transition,
        beta=spec.beta,
    )
    require_valid(mdp)
    return GridModel(spec=spec, state_grid=state_grid, action_grid=action_grid, mdp=mdp)


@dataclass(frozen=True, eq=False)
class CheckReport:
    """Outcome of one structural check.

    ``worst_violation`` is the largest defect seen across trials (0 when
    the property held exactly); ``witness`` is an input that reproduces
    the worst violating trial with a single backup, present whenever the
    check failed.
    """

    name: str
    passed: bool
    trials: int
    failures: int
    worst_violation: float
    witness: np.ndarray | None = field(default=None, repr=False)
    note: str = ""


def _increasing_sample(rng: np.random.Generator, grid: np.ndarray, slope_scale: float) -> np.ndarray:
    base = rng.uniform(-1.0, 1.0)
    slopes = rng.uniform(0.0, slope_scale, grid.size - 1)
    return base + np.concatenate(([0.0], np.cumsum(slopes * np.diff(grid))))


def _concave_sample(rng: np.random.Generator, grid: np.ndarray, curvature_scale: float) -> np.ndarray:
    # Integrate a nonnegative curvature density twice: a piecewise-linear
    # concave table with |second difference| bounded by curvature * h^2,
    # the regime in which the backup's concavity defect stays O(h^2).
    steps = np.diff(grid)
    drops = rng.uniform(0.0, curvature_scale, grid.size - 2) * steps[:-1]
    slopes = rng.uniform(-1.0, 1.0) - np.concatenate(([0.0], np.cumsum(drops)))
    base = rng.uniform(-1.0, 1.0)
    return base + np.concatenate(([0.0], np.cumsum(slopes * steps)))


def _lipschitz_sample(rng: np.random.Generator, grid: np.ndarray, modulus: float) -> np.ndarray:
    base = rng.uniform(-1.0, 1.0)
    increments = rng.uniform(-modulus, modulus, grid.size - 1) * np.diff(grid)
    return base + np.concatenate(([0.0], np.cumsum(increments)))


def check_preserves_monotone(
    grid: GridModel,
    trials: int = 100,
    seed: int = 0,
    tol: float = 1e-10,
    slope_scale: float = 1.0,
) -> CheckReport:
    """Sample increasing tables, apply the backup, require it stays increasing.

    Nondecreasing inputs with slopes up to ``slope_scale`` are sampled;
    a decrease of more than ``tol`` anywhere in the backup is a failure
    and ships the sampled input as witness. Stochastic monotonicity of
    the projected kernel is preserved exactly by the bracketing
    projection; supermodularity of the kernel is exercised only
    empirically by these trials.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    witness = None
    failures = 0
    for _ in range(trials):
        f = _increasing_sample(rng, grid.state_grid, slope_scale)
        tf = bellman_backup(grid.mdp, f)
        violation = float(max(0.0, np.max(tf[:-1] - tf[1:])))
        if violation > tol:
            failures += 1
            if violation > worst:
                witness = f
        worst = max(worst, violation)
    return CheckReport(
        name="preserves_monotone",
        passed=failures == 0,
        trials=trials,
        failures=failures,
        worst_violation=worst,
        witness=witness,
        note="kernel supermodularity exercised empirically, not proven",
    )


def check_preserves_concave(
    grid: GridModel,
    trials: int = 100,
    seed: int = 0,
    tol: float = 1e-8,
    curvature_scale: float = 1.0,
    allowance_scale: float = 5.0,
) -> CheckReport:
    """Sample concave piecewise-linear tables, require concave backups.

    Concavity is midpoint concavity of second differences on the uniform
    state grid. The action grid quantizes the maximizer, so an honest
    allowance proportional to the squared grid spacings
    (``allowance_scale * (h_state^2 + h_action^2)``) is added to ``tol``.
    """
    rng = np.random.default_rng(seed)
    allowance = tol + allowance_scale * (grid.state_spacing**2 + grid.action_spacing**2)
    worst = 0.0
    witness = None
    failures = 0
    for _ in range(trials):
        f = _concave_sample(rng, grid.state_grid, curvature_scale)
        tf = bellman_backup(grid.mdp, f)
        if tf.size < 3:
            continue
        second = tf[:-2] + tf[2:] - 2.0 * tf[1:-1]
        violation = float(max(0.0, np.max(second)))
        if violation > allowance:
            failures += 1
            if violation > worst:
                witness = f
        worst = max(worst, violation)
    return CheckReport(
        name="preserves_concave",
        passed=failures == 0,
        trials=trials,
        failures=failures,
        worst_violation=worst,
        witness=witness,
        note=f"allowance {allowance:.3e} = tol + {allowance_scale} * (h_s^2 + h_a^2)",
    )


def _kernel_mean_shift_modulus(grid: GridModel) -> float:
    # Largest 1-Wasserstein distance between transition rows at adjacent
    # states (same action), per unit of state distance: integrates the
    # absolute CDF difference over the grid.
    cdf = np.cumsum(grid.mdp.transition, axis=2)
    gaps = np.diff(grid.state_grid)
    diffs = np.abs(cdf[1:, :, :-1] - cdf[:-1, :, :-1])
    w1 = diffs @ gaps
    return float(np.max(w1 / np.diff(grid.state_grid)[:, None]))


def check_preserves_lipschitz(
    grid: GridModel,
    trials: int = 100,
    seed: int = 0,
    rel_tol: float = 1e-9,
) -> CheckReport:
    """Sample Lipschitz tables, require the backup's modulus stays bounded.

    The admissible output modulus is the model's own reward modulus plus
    beta times the kernel's mean-shift modulus times the input modulus;
    this is the discrete continuity-preservation statement for the
    backup. Inputs are sampled with modulus 1.
    """
    rng = np.random.default_rng(seed)
    mdp = grid.mdp
    h = np.diff(grid.state_grid)
    reward_modulus = float(np.max(np.abs(np.diff(mdp.reward, axis=0)) / h[:, None]))
    kernel_modulus = _kernel_mean_shift_modulus(grid)
    budget = reward_modulus + mdp.beta * kernel_modulus * 1.0
    slack = rel_tol * (1.0 + budget)
    worst = 0.0
    witness = None
    failures = 0
    for _ in range(trials):
        f = _lipschitz_sample(rng, grid.state_grid, 1.0)
        tf = bellman_backup(mdp, f)
        modulus = float(np.max(np.abs(np.diff(tf)) / h))
        violation = max(0.0, modulus - budget)
        if violation > slack:
            failures += 1
            if violation > worst:
                witness = f
        worst = max(worst, violation)
    return CheckReport(
        name="preserves_lipschitz",
        passed=failures == 0,
        trials=trials,
        failures=failures,
        worst_violation=worst,
        witness=witness,
        note=f"output modulus budget {budget:.6g} "
        f"(reward {reward_modulus:.6g} + beta * kernel {kernel_modulus:.6g})",
    )


def check_greedy_monotone(grid: GridModel, values, tie_tol: float = 1e-9) -> CheckReport:
    """Check that the greedy argmax sets admit a monotone selection.

    The lowest-index tie-broken policy may dip where argmax sets are
    fat; the set-valued check walks the states in order and greedily
    picks the smallest optimal action at least as large as the previous
    choice. Failure reports the Q-value sacrifice a monotone selection
    would require at the blocking state.
    """
    mdp = grid.mdp
    q = np.where(mdp.feasible, q_table(mdp, values), -np.inf)
    top = q.max(axis=1)
    optimal = q >= top[:, None] - tie_tol
    raw = np.argmax(q, axis=1)
    raw_monotone = bool(np.all(np.diff(raw) >= 0))

    previous = 0
    blocking_state = None
    for s in range(mdp.n_states):
        candidates = np.flatnonzero(optimal[s])
        candidates = candidates[candidates >= previous]
        if candidates.size == 0:
            blocking_state = s
            break
        previous = int(candidates[0])

    if blocking_state is None:
        note = (
            "raw lowest-index policy is monotone"
            if raw_monotone
            else "raw lowest-index policy is non-monotone but a monotone argmax "
            "selection exists"
        )
        return CheckReport(
            name="greedy_monotone",
            passed=True,
            trials=1,
            failures=0,
            worst_violation=0.0,
            witness=None,
            note=note,
        )
    s = blocking_state
    floor = int(previous)
    sacrifice = float(top[s] - np.max(q[s, floor:]))
    return CheckReport(
        name="greedy_monotone",
        passed=False,
        trials=1,
        failures=1,
        worst_violation=sacrifice,
        witness=raw.astype(float),
        note=f"no monotone selection: state {s} would sacrifice {sacrifice:.3e} "
        f"to keep the action at or above {floor}",
    )


def run_class_checks(
    grid: GridModel,
    trials: int = 100,
    seed: int = 0,
    values=None,
    solve_tol: float = 1e-8,
) -> list[CheckReport]:
    """Run every verifier of the grid's claimed class; list of reports.

    ``greedy_monotone`` needs a solved value table: pass one via
    ``values`` or it is computed at ``solve_tol``.
    """
    reports = []
    for name in grid.spec.claimed_class.verifiers:
        if name == "preserves_monotone":
            reports.append(check_preserves_monotone(grid, trials=trials, seed=seed))
        elif name == "preserves_concave":
            reports.append(check_preserves_concave(grid, trials=trials, seed=seed))
        elif name == "preserves_lipschitz":
            reports.append(check_preserves_lipschitz(grid, trials=trials, seed=seed))
        elif name == "greedy_monotone":
            v = values if values is not None else solve(grid.mdp, tol=solve_tol).values
            reports.append(check_greedy_monotone(grid, v))
        else:  # unreachable given the class table above
            raise ValueError(f"unknown verifier {name!r}")
    return reports
