"""Experiment configuration models and config-file loading."""

from pathlib import Path
from typing import Any, List, Literal, Optional, Union
import logging

from pydantic import BaseModel, Field, field_validator, model_validator

from .evaluation import LevelThresholds
from .game_controller import PopulationConfig, Regime, StarterRule
from .seeding import derive_seed
from .td_learning import EpsilonSchedule, IdentityRanges

logger = logging.getLogger(__name__)


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    regimes: List[Regime] = Field(default_factory=lambda: [Regime.MODIFIED_SWISS])
    population_sizes: List[int] = Field(default_factory=lambda: [4])
    episodes_per_agent: int = Field(default=50000, ge=0)
    repetitions: int = Field(default=5, ge=1)
    master_seed: int = Field(default=20081, ge=0, lt=2**64)
    starter_rule: StarterRule = StarterRule.RANDOM
    epsilon: EpsilonSchedule = Field(default_factory=EpsilonSchedule)
    identity_ranges: IdentityRanges = Field(default_factory=IdentityRanges)
    bootstrap: Literal["max", "sarsa"] = "max"
    selfplay_benchmark: bool = True
    selfplay_candidates: int = Field(default=1, ge=1)
    league_games_per_pair: int = Field(default=5000, ge=2)
    league_social_agents: int = Field(default=4, ge=1)
    checkpoint_every: Optional[int] = Field(default=None, gt=0)
    level_thresholds: LevelThresholds = Field(default_factory=LevelThresholds)
    workers: int = Field(default=1, ge=1)
    output_dir: Optional[Path] = None

    @model_validator(mode="before")
    @classmethod
    def _single_regime(cls, data: Any) -> Any:
        if isinstance(data, dict) and "regime" in data and "regimes" not in data:
            data = dict(data)
            data["regimes"] = [data.pop("regime")]
        return data

    @field_validator("population_sizes")
    @classmethod
    def _sizes_present(cls, sizes: List[int]) -> List[int]:
        if not sizes:
            raise ValueError("population_sizes cannot be empty")
        return sizes

    @model_validator(mode="after")
    def _sizes_fit_regimes(self) -> "ExperimentConfig":
        for regime in self.regimes:
            for size in self.population_sizes:
                self.population_config(regime, size, 0)
        # leagues always alternate starters
        if self.league_games_per_pair % 2:
            raise ValueError("league_games_per_pair must be even")
        return self

    def run_seed(self, regime: Regime, size: int, repetition: int) -> int:
        """Seed of one training cell."""
        return derive_seed(self.master_seed, regime.value, size, repetition)

    def population_config(self, regime: Regime, size: int, repetition: int) -> PopulationConfig:
        """PopulationConfig for one training cell."""
        return PopulationConfig(
            size=size,
            regime=regime,
            episodes_per_agent=self.episodes_per_agent,
            master_seed=self.run_seed(regime, size, repetition),
            starter_rule=self.starter_rule,
            identity_ranges=self.identity_ranges,
            epsilon=self.epsilon,
            bootstrap=self.bootstrap,
            checkpoint_every=self.checkpoint_every,
            workers=self.workers,
        )


PROFILES = {
    "full": {
        "name": "full-protocol",
        "regimes": ["self_play", "round_robin", "modified_swiss"],
        "population_sizes": [4, 6, 8],
        "episodes_per_agent": 50000,
        "repetitions": 5,
    },
    "smoke": {
        "name": "smoke",
        "regimes": ["self_play", "round_robin", "modified_swiss"],
        "population_sizes": [4],
        "episodes_per_agent": 10000,
        "repetitions": 2,
        "league_games_per_pair": 200,
    },
    "tiny": {
        "name": "tiny",
        "regimes": ["self_play", "modified_swiss"],
        "population_sizes": [4],
        "episodes_per_agent": 500,
        "repetitions": 1,
        "league_games_per_pair": 100,
    },
}


def profile_config(profile: str, **overrides: Any) -> ExperimentConfig:
    """A built-in profile with field overrides applied."""
    if profile not in PROFILES:
        raise ValueError(f"Unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    data = {**PROFILES[profile], **{k: v for k, v in overrides.items() if v is not None}}
    return ExperimentConfig.model_validate(data)


def load_config(path: Union[str, Path], **overrides: Any) -> ExperimentConfig:
    """Parse a JSON config file; non-None overrides replace file values."""
    path = Path(path)
    config = ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))
    extra = {k: v for k, v in overrides.items() if v is not None}
    if extra:
        config = ExperimentConfig.model_validate({**config.model_dump(by_alias=True), **extra})
    logger.info(f"Loaded config {config.name!r} from {path}")
    return config
