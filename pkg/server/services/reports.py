"""
Report models and writers: JSON for machines, columnar text and CSV for
matrices, a jinja2-rendered plain-text summary for people.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import json
import logging

import numpy as np
import pandas as pd
from jinja2 import Template
from pydantic import BaseModel, Field

from .evaluation import (
    BoardTestReport,
    Difficulty,
    SkillLevel,
    WinMatrix,
    decisive_starter_rate,
    selfplay_differential,
    starter_advantage,
)

logger = logging.getLogger(__name__)

REPORT_VERSION = 1


class CellReport(BaseModel):
    """Board-test results for one (regime, size, repetition) training run."""

    regime: str
    size: int
    repetition: int
    run_seed: int
    board_reports: List[BoardTestReport]
    best_score: int
    mean_score: float
    intermediate_or_better: int
    selfplay_score: Optional[int] = None
    games: int = 0
    decisive: int = 0
    draws: int = 0
    checkpoints: List[Dict[str, Any]] = Field(default_factory=list)


class LeagueReport(BaseModel):
    size: int
    repetition: int
    labels: List[str]
    games_per_pair: int
    wins: List[List[int]]
    draws: List[List[int]]
    starter_wins: List[int]
    starter_games: List[int]
    starter_advantage: float
    decisive_starter_rate: float
    selfplay_differential: Optional[float] = None


class ComparisonRow(BaseModel):
    regime: str
    size: int
    repetition: int
    best_social_score: int
    selfplay_score: int
    strictly_better: bool


class RunReport(BaseModel):
    report_version: int = REPORT_VERSION
    config: Dict[str, Any]
    cells: List[CellReport] = Field(default_factory=list)
    leagues: List[LeagueReport] = Field(default_factory=list)
    comparison: List[ComparisonRow] = Field(default_factory=list)


def summarize_cell(
    regime: str,
    size: int,
    repetition: int,
    run_seed: int,
    reports: Sequence[BoardTestReport],
    selfplay_score: Optional[int] = None,
    games: int = 0,
    decisive: int = 0,
    draws: int = 0,
    checkpoints: Optional[List[Dict[str, Any]]] = None,
) -> CellReport:
    """Score statistics for one training cell."""
    scores = [r.total_correct for r in reports]
    return CellReport(
        regime=regime,
        size=size,
        repetition=repetition,
        run_seed=run_seed,
        board_reports=list(reports),
        best_score=max(scores, default=0),
        mean_score=float(np.mean(scores)) if scores else 0.0,
        intermediate_or_better=sum(1 for r in reports if r.level is not SkillLevel.BEGINNER),
        selfplay_score=selfplay_score,
        games=games,
        decisive=decisive,
        draws=draws,
        checkpoints=checkpoints or [],
    )


def league_report(
    matrix: WinMatrix,
    size: int = 0,
    repetition: int = 0,
    selfplay_index: Optional[int] = None,
) -> LeagueReport:
    """LeagueReport with the starter and self-play statistics of a matrix."""
    data = matrix.to_dict()
    return LeagueReport(
        size=size,
        repetition=repetition,
        labels=data["labels"],
        games_per_pair=data["games_per_pair"],
        wins=data["wins"],
        draws=data["draws"],
        starter_wins=data["starter_wins"],
        starter_games=data["starter_games"],
        starter_advantage=starter_advantage(matrix),
        decisive_starter_rate=decisive_starter_rate(matrix),
        selfplay_differential=(
            selfplay_differential(matrix, selfplay_index) if selfplay_index is not None else None
        ),
    )


def board_frame(reports: Sequence[BoardTestReport]) -> pd.DataFrame:
    """One row per agent with tier counts, total and level."""
    rows = []
    for r in reports:
        rows.append(
            {
                "agent": r.label or f"A{r.agent_id}",
                "easy": r.by_difficulty.get(Difficulty.EASY, 0),
                "intermediate": r.by_difficulty.get(Difficulty.INTERMEDIATE, 0),
                "hard": r.by_difficulty.get(Difficulty.HARD, 0),
                "total": r.total_correct,
                "level": r.level.value,
            }
        )
    return pd.DataFrame(rows, columns=["agent", "easy", "intermediate", "hard", "total", "level"])


def write_board_reports(reports: Sequence[BoardTestReport], directory: Path, stem: str = "boardtest") -> Dict[str, Path]:
    """JSON, text table and CSV for a batch of board tests."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frame = board_frame(reports)
    paths = {
        "json": directory / f"{stem}.json",
        "table": directory / f"{stem}.txt",
        "csv": directory / f"{stem}.csv",
    }
    payload = [r.model_dump(mode="json") for r in reports]
    paths["json"].write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    paths["table"].write_text(frame.to_string(index=False) + "\n", encoding="utf-8")
    frame.to_csv(paths["csv"], index=False, lineterminator="\n")
    return paths


def write_league(matrix: WinMatrix, directory: Path, stem: str = "league") -> Dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "wins": directory / f"{stem}_wins.txt",
        "draws": directory / f"{stem}_draws.txt",
        "starters": directory / f"{stem}_starters.txt",
        "wins_csv": directory / f"{stem}_wins.csv",
    }
    paths["wins"].write_text(matrix.wins_frame().to_string() + "\n", encoding="utf-8")
    paths["draws"].write_text(matrix.draws_frame().to_string() + "\n", encoding="utf-8")
    paths["starters"].write_text(matrix.starter_frame().to_string() + "\n", encoding="utf-8")
    matrix.wins_frame().to_csv(paths["wins_csv"], lineterminator="\n")
    return paths


SUMMARY_TEMPLATE = """\
{{ title }}
{{ "=" * title|length }}
config: {{ config.name }} | regimes {{ config.regimes|join(", ") }} | sizes {{ config.population_sizes|join(", ") }} | repetitions {{ config.repetitions }} | episodes {{ config.episodes_per_agent }} | seed {{ config.master_seed }}

Board test (best / mean / intermediate-or-better / self-play benchmark)
{% for cell in cells -%}
  {{ "%-15s"|format(cell.regime) }} size {{ "%2d"|format(cell.size) }} rep {{ cell.repetition }}: best {{ cell.best_score }}/10  mean {{ "%.2f"|format(cell.mean_score) }}  intermediate+ {{ cell.intermediate_or_better }}{% if cell.selfplay_score is not none %}  self-play {{ cell.selfplay_score }}/10{% endif %}
{% endfor %}
{% if comparison %}
Social vs self-play
{% for row in comparison -%}
  {{ "%-15s"|format(row.regime) }} size {{ "%2d"|format(row.size) }} rep {{ row.repetition }}: social {{ row.best_social_score }} vs self-play {{ row.selfplay_score }}{% if row.strictly_better %}  (social ahead){% endif %}
{% endfor %}
{% endif %}
{% if leagues %}
League play
{% for league in leagues -%}
  size {{ league.size }} rep {{ league.repetition }}: {{ league.labels|join(" ") }} | starter win rate {{ "%.3f"|format(league.starter_advantage) }} | decisive starter rate {{ "%.3f"|format(league.decisive_starter_rate) }}{% if league.selfplay_differential is not none %} | social - self-play {{ "%+.1f"|format(league.selfplay_differential) }}{% endif %}
{% endfor %}
{% endif %}
"""


def render_summary(report: RunReport, title: str = "Social training report") -> str:
    """Plain-text summary of a run report."""
    template = Template(SUMMARY_TEMPLATE)
    return template.render(
        title=title,
        config=report.config,
        cells=report.cells,
        comparison=report.comparison,
        leagues=report.leagues,
    )


def write_run_report(report: RunReport, directory: Path) -> Dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {"json": directory / "report.json", "summary": directory / "summary.txt"}
    paths["json"].write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    paths["summary"].write_text(render_summary(report), encoding="utf-8")
    logger.info(f"Report written to {paths['json']}")
    return paths
