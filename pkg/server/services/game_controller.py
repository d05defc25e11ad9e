"""
Game controller and the social training regimes.

Self-play trains one agent on both sides of the board. Round robin cycles
every unordered pair of a population (circle method). The modified Swiss
regime keeps a Winner and a Loser pool and always pairs across them.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .players import Player, TDAgent
from .seeding import child_rng, derive_seed
from .td_learning import EpsilonSchedule, IdentityRanges, Transition, sample_identity
from .tictactoe import GameState, Mark, apply_move, encode, legal_actions, outcome, reward

logger = logging.getLogger(__name__)


class Regime(str, Enum):
    SELF_PLAY = "self_play"
    ROUND_ROBIN = "round_robin"
    MODIFIED_SWISS = "modified_swiss"


class StarterRule(str, Enum):
    RANDOM = "random"
    ALTERNATE = "alternate"


class Pool(str, Enum):
    WINNER = "winner"
    LOSER = "loser"


PoolAssignment = Dict[int, Pool]


class PoolImbalanceError(ValueError):
    """Swiss pools that cannot be split or matched evenly."""


class PopulationConfig(BaseModel):
    size: int = Field(default=4, ge=1)
    regime: Regime = Regime.MODIFIED_SWISS
    episodes_per_agent: int = Field(default=50000, ge=0)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    starter_rule: StarterRule = StarterRule.RANDOM
    identity_ranges: IdentityRanges = Field(default_factory=IdentityRanges)
    epsilon: EpsilonSchedule = Field(default_factory=EpsilonSchedule)
    bootstrap: Literal["max", "sarsa"] = "max"
    checkpoint_every: Optional[int] = Field(default=None, gt=0)
    workers: int = Field(default=1, ge=1)
    keep_records: bool = True

    @model_validator(mode="after")
    def _check_size(self) -> "PopulationConfig":
        if self.regime is Regime.SELF_PLAY:
            return self
        if self.size < 2:
            raise ValueError(f"{self.regime.value} needs at least 2 agents")
        if self.regime is Regime.MODIFIED_SWISS and self.size % 2:
            raise ValueError("modified_swiss needs an even population size")
        return self


class GameRecord(BaseModel):
    round: int
    agent_a: int
    agent_b: int
    starter: int
    result: Literal["a", "b", "draw"]
    plies: int = Field(ge=1, le=9)
    moves: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_record(self) -> "GameRecord":
        if self.starter not in (self.agent_a, self.agent_b):
            raise ValueError("starter must be one of the two agents")
        if self.result != "draw" and self.plies < 5:
            raise ValueError("a decisive game needs at least 5 plies")
        return self

    @property
    def winner(self) -> Optional[int]:
        if self.result == "a":
            return self.agent_a
        if self.result == "b":
            return self.agent_b
        return None

    @property
    def loser(self) -> Optional[int]:
        if self.result == "a":
            return self.agent_b
        if self.result == "b":
            return self.agent_a
        return None


class RoundSummary(BaseModel):
    round: int
    games: int
    decisive: int
    draws: int
    winner_pool_size: Optional[int] = None


class TrainingCheckpoint(BaseModel):
    episode: int
    scores: Dict[int, int]


@dataclass
class TrainingResult:
    regime: Regime
    agents: List[TDAgent]
    records: List[GameRecord] = field(default_factory=list)
    rounds: List[RoundSummary] = field(default_factory=list)
    pool_history: List[PoolAssignment] = field(default_factory=list)
    checkpoints: List[TrainingCheckpoint] = field(default_factory=list)


CheckpointFn = Callable[[Sequence[Player]], Dict[int, int]]
Match = Tuple[Player, Player, int]


def play_training_game(
    a: Player,
    b: Player,
    starter: int,
    learn: bool = True,
    explore: bool = True,
    round: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> GameRecord:
    """Play one game from the empty board; the starter takes Cross.

    Each side's transition runs from its own move to the next state in which
    it is to move again, so the opponent's reply is part of the environment.
    Seating the same agent as ``a`` and ``b`` gives self-play.
    """
    if starter not in (a.id, b.id):
        raise ValueError(f"starter {starter} is neither {a.id} nor {b.id}")
    first, second = (a, b) if starter == a.id else (b, a)
    seats = {Mark.CROSS: first, Mark.NOUGHT: second}
    distinct = [first] if first is second else [first, second]

    for player in distinct:
        player.begin_episode()

    state = GameState.empty(Mark.CROSS)
    pending: Dict[Mark, Optional[Tuple[int, int]]] = {Mark.CROSS: None, Mark.NOUGHT: None}
    moves: List[int] = []

    while True:
        mark = state.to_move
        player = seats[mark]
        legal = legal_actions(state)
        key = encode(state)
        action = player.choose_action(state, legal, explore, rng)

        previous = pending[mark]
        if learn and previous is not None:
            player.observe(
                mark,
                Transition(s=previous[0], a=previous[1], r=0.0, s_next=key, legal_next=legal, next_action=action),
            )
        pending[mark] = (key, action)

        state = apply_move(state, action)
        moves.append(action)
        result = outcome(state)
        if result.is_terminal:
            break

    if learn:
        for mark, previous in pending.items():
            if previous is not None:
                seats[mark].observe(
                    mark,
                    Transition(s=previous[0], a=previous[1], r=reward(result, mark), s_next=None),
                )
        for player in distinct:
            player.finish_episode()

    if result.kind == "draw":
        verdict = "draw"
    else:
        winner = seats[result.winner]
        verdict = "a" if winner is a else "b"

    return GameRecord(
        round=round,
        agent_a=a.id,
        agent_b=b.id,
        starter=starter,
        result=verdict,
        plies=len(moves),
        moves=moves,
    )


def make_population(config: PopulationConfig, size: Optional[int] = None) -> List[TDAgent]:
    """Agents 0..size-1 with identities drawn from per-agent seeded streams."""
    size = config.size if size is None else size
    label = config.regime.value
    agents = []
    for agent_id in range(size):
        identity = sample_identity(
            agent_id,
            child_rng(config.master_seed, label, "identity", agent_id),
            seed=derive_seed(config.master_seed, label, "agent", agent_id),
            ranges=config.identity_ranges,
            schedule=config.epsilon,
            episodes=config.episodes_per_agent,
            bootstrap=config.bootstrap,
        )
        agents.append(TDAgent(identity))
    return agents


def _choose_starter(
    a: Player, b: Player, rule: StarterRule, rng: np.random.Generator, parity: int
) -> int:
    if rule is StarterRule.ALTERNATE:
        return a.id if parity % 2 == 0 else b.id
    return a.id if rng.integers(2) == 0 else b.id


def _play_matches(
    matches: List[Match],
    learn: bool,
    round: int,
    executor: Optional[ThreadPoolExecutor],
) -> List[GameRecord]:
    # Matches in one round never share an agent.
    if executor is None or len(matches) < 2:
        return [play_training_game(a, b, s, learn=learn, round=round) for a, b, s in matches]
    futures = [executor.submit(play_training_game, a, b, s, learn, True, round) for a, b, s in matches]
    return [f.result() for f in futures]


def _summarize(round: int, records: List[GameRecord], winner_pool_size: Optional[int] = None) -> RoundSummary:
    draws = sum(1 for r in records if r.result == "draw")
    return RoundSummary(
        round=round,
        games=len(records),
        decisive=len(records) - draws,
        draws=draws,
        winner_pool_size=winner_pool_size,
    )


class _CheckpointTracker:
    def __init__(self, every: Optional[int], fn: Optional[CheckpointFn], result: TrainingResult):
        self.every = every
        self.fn = fn
        self.result = result
        self.next_at = every or 0

    def update(self, agents: Sequence[Player]) -> None:
        if not self.every or self.fn is None:
            return
        reached = min(agent.episodes_trained for agent in agents)
        if reached < self.next_at:
            return
        scores = self.fn(agents)
        self.result.checkpoints.append(TrainingCheckpoint(episode=reached, scores=scores))
        logger.info(f"Checkpoint at {reached} episodes: {scores}")
        while self.next_at <= reached:
            self.next_at += self.every


def _log_progress(regime: Regime, unit: int, total: int, agents: Sequence[Player]) -> None:
    step = max(total // 10, 1)
    if (unit + 1) % step == 0 or unit + 1 == total:
        episodes = [agent.episodes_trained for agent in agents]
        logger.info(f"{regime.value}: {unit + 1}/{total} done, episodes {min(episodes)}-{max(episodes)}")


def run_self_play(
    config: PopulationConfig,
    learn: bool = True,
    checkpoint_fn: Optional[CheckpointFn] = None,
    candidate: int = 0,
) -> TrainingResult:
    """One agent, one table, both sides of every game."""
    identity = sample_identity(
        0,
        child_rng(config.master_seed, Regime.SELF_PLAY.value, "identity", candidate),
        seed=derive_seed(config.master_seed, Regime.SELF_PLAY.value, "agent", candidate),
        ranges=config.identity_ranges,
        schedule=config.epsilon,
        episodes=config.episodes_per_agent,
        bootstrap=config.bootstrap,
    )
    agent = TDAgent(identity)
    result = TrainingResult(regime=Regime.SELF_PLAY, agents=[agent])
    tracker = _CheckpointTracker(config.checkpoint_every, checkpoint_fn, result)

    for episode in range(config.episodes_per_agent):
        record = play_training_game(agent, agent, agent.id, learn=learn, round=episode)
        if not learn:
            agent.episodes_trained += 1
        if config.keep_records:
            result.records.append(record)
        result.rounds.append(_summarize(episode, [record]))
        tracker.update(result.agents)
        _log_progress(Regime.SELF_PLAY, episode, config.episodes_per_agent, result.agents)

    return result


def circle_schedule(ids: Sequence[int]) -> List[List[Tuple[int, int]]]:
    """Circle-method rounds covering every unordered pair exactly once.

    An odd population gets a bye slot; pairs involving the bye are dropped.
    """
    order: List[Optional[int]] = list(ids)
    if len(order) % 2:
        order.append(None)
    half = len(order) // 2
    top, bottom = order[:half], order[half:]
    rounds = []
    for index in range(len(order) - 1):
        if index:
            top.insert(1, bottom.pop(0))
            bottom.append(top.pop())
        pairs = [(x, y) for x, y in zip(top, bottom) if x is not None and y is not None]
        rounds.append(pairs)
    return rounds


def run_round_robin(
    config: PopulationConfig,
    learn: bool = True,
    checkpoint_fn: Optional[CheckpointFn] = None,
) -> TrainingResult:
    """Repeated circuits of every pair until each agent reaches the budget."""
    if config.regime is not Regime.ROUND_ROBIN:
        raise ValueError(f"run_round_robin got regime {config.regime.value}")
    agents = make_population(config)
    by_id = {agent.id: agent for agent in agents}
    rng = child_rng(config.master_seed, config.regime.value, "controller")
    result = TrainingResult(regime=config.regime, agents=agents)
    tracker = _CheckpointTracker(config.checkpoint_every, checkpoint_fn, result)

    budget = config.episodes_per_agent
    circuits = math.ceil(budget / (config.size - 1)) if budget else 0
    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    round_index = 0
    try:
        for circuit in range(circuits):
            order = [int(i) for i in rng.permutation(sorted(by_id))]
            for pairs in circle_schedule(order):
                matches = []
                for x, y in pairs:
                    a, b = (by_id[x], by_id[y]) if x < y else (by_id[y], by_id[x])
                    matches.append((a, b, _choose_starter(a, b, config.starter_rule, rng, circuit)))
                records = _play_matches(matches, learn, round_index, executor)
                if not learn:
                    for a, b, _ in matches:
                        a.episodes_trained += 1
                        b.episodes_trained += 1
                if config.keep_records:
                    result.records.extend(records)
                result.rounds.append(_summarize(round_index, records))
                round_index += 1
            tracker.update(agents)
            _log_progress(config.regime, circuit, circuits, agents)
    finally:
        if executor is not None:
            executor.shutdown()

    return result


def swiss_initial_split(population: Sequence[int], rng: np.random.Generator) -> PoolAssignment:
    """Uniformly random equal split into Winner and Loser pools."""
    ids = list(population)
    if len(ids) % 2:
        raise PoolImbalanceError(f"Cannot split {len(ids)} agents into equal pools")
    order = [int(i) for i in rng.permutation(ids)]
    half = len(order) // 2
    pools = {agent_id: Pool.WINNER for agent_id in order[:half]}
    pools.update({agent_id: Pool.LOSER for agent_id in order[half:]})
    return dict(sorted(pools.items()))


def pool_members(pools: PoolAssignment, pool: Pool) -> List[int]:
    """Sorted ids assigned to one pool."""
    return sorted(agent_id for agent_id, assigned in pools.items() if assigned is pool)


def swiss_pairings(pools: PoolAssignment, rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Uniformly random perfect matching of winners against losers."""
    winners = pool_members(pools, Pool.WINNER)
    losers = pool_members(pools, Pool.LOSER)
    if len(winners) != len(losers):
        raise PoolImbalanceError(f"Pools are unbalanced: {len(winners)} winners vs {len(losers)} losers")
    shuffled = rng.permutation(len(losers))
    return [(w, losers[int(i)]) for w, i in zip(winners, shuffled)]


def reassign_pools(pools: PoolAssignment, records: Sequence[GameRecord]) -> PoolAssignment:
    """Winner to the Winner pool, loser to the Loser pool; draws keep their pools."""
    updated = dict(pools)
    for record in records:
        if record.winner is None:
            continue
        updated[record.winner] = Pool.WINNER
        updated[record.loser] = Pool.LOSER
    if len(pool_members(updated, Pool.WINNER)) != len(pool_members(updated, Pool.LOSER)):
        raise PoolImbalanceError("Pool reassignment broke the equal split")
    return updated


def run_modified_swiss(
    config: PopulationConfig,
    learn: bool = True,
    checkpoint_fn: Optional[CheckpointFn] = None,
) -> TrainingResult:
    """One cross-pool game per agent per round; pools follow the results."""
    if config.regime is not Regime.MODIFIED_SWISS:
        raise ValueError(f"run_modified_swiss got regime {config.regime.value}")
    agents = make_population(config)
    by_id = {agent.id: agent for agent in agents}
    rng = child_rng(config.master_seed, config.regime.value, "controller")
    result = TrainingResult(regime=config.regime, agents=agents)
    tracker = _CheckpointTracker(config.checkpoint_every, checkpoint_fn, result)

    pools = swiss_initial_split(sorted(by_id), rng)
    rounds = config.episodes_per_agent
    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for round_index in range(rounds):
            matches = []
            for winner_id, loser_id in swiss_pairings(pools, rng):
                a, b = by_id[winner_id], by_id[loser_id]
                matches.append((a, b, _choose_starter(a, b, config.starter_rule, rng, round_index)))
            records = _play_matches(matches, learn, round_index, executor)
            if not learn:
                for a, b, _ in matches:
                    a.episodes_trained += 1
                    b.episodes_trained += 1

            pools = reassign_pools(pools, records)
            result.pool_history.append(pools)
            if config.keep_records:
                result.records.extend(records)
            result.rounds.append(
                _summarize(round_index, records, len(pool_members(pools, Pool.WINNER)))
            )
            tracker.update(agents)
            _log_progress(config.regime, round_index, rounds, agents)
    finally:
        if executor is not None:
            executor.shutdown()

    return result


def train_population(
    config: PopulationConfig,
    learn: bool = True,
    checkpoint_fn: Optional[CheckpointFn] = None,
) -> TrainingResult:
    """Dispatch to the training loop of the configured regime."""
    if config.regime is Regime.SELF_PLAY:
        return run_self_play(config, learn=learn, checkpoint_fn=checkpoint_fn)
    if config.regime is Regime.ROUND_ROBIN:
        return run_round_robin(config, learn=learn, checkpoint_fn=checkpoint_fn)
    return run_modified_swiss(config, learn=learn, checkpoint_fn=checkpoint_fn)


def tally(records: Sequence[GameRecord]) -> Dict[int, Dict[str, int]]:
    """Per-agent wins, losses and draws."""
    counts: Dict[int, Dict[str, int]] = {}
    for record in records:
        for agent_id in (record.agent_a, record.agent_b):
            counts.setdefault(agent_id, {"wins": 0, "losses": 0, "draws": 0})
        if record.winner is None:
            counts[record.agent_a]["draws"] += 1
            counts[record.agent_b]["draws"] += 1
        else:
            counts[record.winner]["wins"] += 1
            counts[record.loser]["losses"] += 1
    return dict(sorted(counts.items()))
