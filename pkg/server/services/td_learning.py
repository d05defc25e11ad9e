"""
Tabular TD(lambda) over action values with accumulating eligibility traces.

The update follows the classic state-value TD(lambda) loop applied to
(state, action) pairs:

    delta = r + gamma * bootstrap(s') - Q(s, a)
    e(s, a) += 1
    for every traced pair: Q += alpha * delta * e ; e *= gamma * lambda
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Literal, Optional, Tuple
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)

TRACE_FLOOR = 1e-8
Q_INIT = 0.0

StateAction = Tuple[int, int]


class IdentityRanges(BaseModel):
    """Uniform sampling ranges for per-agent learning parameters."""

    alpha: Tuple[float, float] = (0.2, 0.3)
    gamma: Tuple[float, float] = (0.95, 0.99)
    lambda_: Tuple[float, float] = Field(default=(0.9, 1.0), alias="lambda")

    model_config = ConfigDict(populate_by_name=True)

    @model_validator(mode="after")
    def _check_bounds(self) -> "IdentityRanges":
        for name, (low, high) in (
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("lambda", self.lambda_),
        ):
            if not 0.0 <= low <= high <= 1.0:
                raise ValueError(f"{name} range must satisfy 0 <= low <= high <= 1, got {low}-{high}")
        if self.alpha[0] <= 0.0:
            raise ValueError("alpha must be positive")
        return self


class EpsilonSchedule(BaseModel):
    """Multiplicative decay from epsilon0 down to a floor."""

    epsilon0: float = Field(default=0.9, ge=0.0, le=1.0)
    epsilon_min: float = Field(default=0.01, ge=0.0, le=1.0)
    epsilon_decay: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    floor_fraction: float = Field(default=0.9, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_order(self) -> "EpsilonSchedule":
        if self.epsilon_min > self.epsilon0:
            raise ValueError("epsilon_min cannot exceed epsilon0")
        return self

    def decay_for(self, episodes: int) -> float:
        """Explicit decay, or the factor reaching the floor at floor_fraction of the budget."""
        if self.epsilon_decay is not None:
            return self.epsilon_decay
        return decay_to_floor(self.epsilon0, self.epsilon_min, episodes, self.floor_fraction)


def decay_to_floor(epsilon0: float, epsilon_min: float, episodes: int, fraction: float = 0.9) -> float:
    """Per-episode factor reaching epsilon_min after the given fraction of episodes."""
    horizon = int(round(episodes * fraction))
    if horizon <= 0 or epsilon0 <= 0.0 or epsilon_min <= 0.0 or epsilon_min >= epsilon0:
        return 1.0
    return (epsilon_min / epsilon0) ** (1.0 / horizon)


class Hyperparameters(BaseModel):
    alpha: float = Field(gt=0.0, le=1.0)
    gamma: float = Field(ge=0.0, le=1.0)
    lambda_: float = Field(ge=0.0, le=1.0, alias="lambda")
    epsilon0: float = Field(default=0.9, ge=0.0, le=1.0)
    epsilon_min: float = Field(default=0.01, ge=0.0, le=1.0)
    epsilon_decay: float = Field(default=1.0, gt=0.0, le=1.0)
    bootstrap: Literal["max", "sarsa"] = "max"

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    @model_validator(mode="after")
    def _check_epsilon(self) -> "Hyperparameters":
        if self.epsilon_min > self.epsilon0:
            raise ValueError("epsilon_min cannot exceed epsilon0")
        return self


class AgentIdentity(BaseModel):
    id: int = Field(ge=0)
    params: Hyperparameters
    seed: int = Field(ge=0, lt=2**64)


@dataclass
class Transition:
    s: int
    a: int
    r: float
    s_next: Optional[int]
    legal_next: List[int] = field(default_factory=list)
    next_action: Optional[int] = None

    @property
    def terminal(self) -> bool:
        return self.s_next is None


class QTable:
    """Sparse (state key, action) -> value table; absent pairs read as Q_INIT."""

    def __init__(self, init_value: float = Q_INIT):
        self.init_value = init_value
        self._values: Dict[StateAction, float] = {}

    def get(self, key: int, action: int) -> float:
        return self._values.get((key, action), self.init_value)

    def set(self, key: int, action: int, value: float) -> None:
        self._values[(key, action)] = value

    def add(self, pair: StateAction, delta: float) -> None:
        self._values[pair] = self._values.get(pair, self.init_value) + delta

    def values_for(self, key: int, actions: List[int]) -> List[float]:
        values = self._values
        init = self.init_value
        return [values.get((key, a), init) for a in actions]

    def max_value(self, key: int, actions: List[int]) -> float:
        if not actions:
            return 0.0
        return max(self.values_for(key, actions))

    def items(self) -> Iterator[Tuple[int, int, float]]:
        """Entries sorted by key then action."""
        for (key, action) in sorted(self._values):
            yield key, action, self._values[(key, action)]

    def max_abs(self) -> float:
        """Largest absolute value, 0.0 for an empty table."""
        return max((abs(v) for v in self._values.values()), default=0.0)

    def copy(self) -> "QTable":
        clone = QTable(self.init_value)
        clone._values = dict(self._values)
        return clone

    def __len__(self) -> int:
        return len(self._values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return self.init_value == other.init_value and self._values == other._values


class EligibilityTraces:
    def __init__(self, floor: float = TRACE_FLOOR):
        self.floor = floor
        self._traces: Dict[StateAction, float] = {}

    def get(self, key: int, action: int) -> float:
        return self._traces.get((key, action), 0.0)

    def clear(self) -> None:
        self._traces.clear()

    def __len__(self) -> int:
        return len(self._traces)

    def pairs(self) -> List[StateAction]:
        return list(self._traces)


def begin_episode(traces: EligibilityTraces) -> None:
    """Clear the traces before a game."""
    traces.clear()


def td_update(q: QTable, traces: EligibilityTraces, t: Transition, p: Hyperparameters) -> float:
    """One TD(lambda) step; returns the TD error."""
    if t.terminal:
        bootstrap = 0.0
    elif p.bootstrap == "sarsa":
        if t.next_action is None:
            raise ValueError("sarsa bootstrap needs the next action")
        bootstrap = q.get(t.s_next, t.next_action)
    else:
        bootstrap = q.max_value(t.s_next, t.legal_next)

    delta = t.r + p.gamma * bootstrap - q.get(t.s, t.a)

    pair = (t.s, t.a)
    live = traces._traces
    live[pair] = live.get(pair, 0.0) + 1.0

    step = p.alpha * delta
    decay = p.gamma * p.lambda_
    floor = traces.floor
    for traced, e in list(live.items()):
        if step != 0.0:
            q.add(traced, step * e)
        e *= decay
        if e < floor:
            del live[traced]
        else:
            live[traced] = e
    return delta


def epsilon_at(p: Hyperparameters, episode: int) -> float:
    """Exploration rate after a number of training episodes."""
    if episode < 0:
        raise ValueError("episode must be non-negative")
    return max(p.epsilon_min, p.epsilon0 * p.epsilon_decay**episode)


def _argmax_actions(q: QTable, s: int, legal: List[int]) -> List[int]:
    values = q.values_for(s, legal)
    best = max(values)
    return [a for a, v in zip(legal, values) if v == best]


def greedy_action(q: QTable, s: int, legal: List[int], rng: np.random.Generator) -> int:
    """Argmax with uniform random tie-break."""
    if not legal:
        raise ValueError("greedy_action needs at least one legal action")
    best = _argmax_actions(q, s, legal)
    if len(best) == 1:
        return best[0]
    return best[int(rng.integers(len(best)))]


def select_action(
    q: QTable, s: int, legal: List[int], epsilon: float, rng: np.random.Generator
) -> int:
    """Epsilon-greedy: explore uniformly with probability epsilon."""
    if not legal:
        raise ValueError("select_action needs at least one legal action")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return legal[int(rng.integers(len(legal)))]
    return greedy_action(q, s, legal, rng)


def action_probabilities(q: QTable, s: int, legal: List[int], epsilon: float) -> Dict[int, float]:
    """Closed-form selection distribution of select_action."""
    best = set(_argmax_actions(q, s, legal))
    share = epsilon / len(legal)
    greedy_share = (1.0 - epsilon) / len(best)
    return {a: share + (greedy_share if a in best else 0.0) for a in legal}


def sample_identity(
    id: int,
    rng: np.random.Generator,
    seed: Optional[int] = None,
    ranges: Optional[IdentityRanges] = None,
    schedule: Optional[EpsilonSchedule] = None,
    episodes: int = 50000,
    bootstrap: str = "max",
) -> AgentIdentity:
    """Draw alpha, gamma, lambda uniformly from the identity ranges."""
    ranges = ranges or IdentityRanges()
    schedule = schedule or EpsilonSchedule()
    if seed is None:
        seed = int(rng.integers(2**63))

    def draw(bounds: Tuple[float, float]) -> float:
        low, high = bounds
        return low + (high - low) * float(rng.random())

    params = Hyperparameters(
        alpha=draw(ranges.alpha),
        gamma=draw(ranges.gamma),
        lambda_=draw(ranges.lambda_),
        epsilon0=schedule.epsilon0,
        epsilon_min=schedule.epsilon_min,
        epsilon_decay=schedule.decay_for(episodes),
        bootstrap=bootstrap,
    )
    return AgentIdentity(id=id, params=params, seed=seed)


def check_value_bound(q: QTable, bound: float = 2.0) -> bool:
    """Sanity monitor only: values are never clipped."""
    peak = q.max_abs()
    if peak > bound or math.isnan(peak):
        logger.warning(f"Q-table magnitude {peak:.4f} exceeds sanity bound {bound}")
        return False
    return True
