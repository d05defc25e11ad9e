"""
Agent snapshot persistence.

A snapshot is a JSON-lines file. Line 1 is the header (format version,
player kind, identity, episode count); every following line is one
``[state_key, action, value]`` triple, sorted by key then action. Values are
written in shortest round-trip form, so loading is lossless.
"""

from pathlib import Path
from typing import List, Literal, Optional, Union
import hashlib
import json
import logging

from pydantic import BaseModel, Field, ValidationError

from .players import OraclePlayer, Player, RandomPlayer, TDAgent
from .td_learning import AgentIdentity, QTable

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1


class SnapshotFormatError(ValueError):
    """Snapshot file that cannot be parsed or has an unknown version."""


class SnapshotHeader(BaseModel):
    format_version: int = SNAPSHOT_VERSION
    kind: Literal["td", "oracle", "random"] = "td"
    label: str = ""
    player_id: int = Field(default=0, ge=0)
    seed: int = 0
    identity: Optional[AgentIdentity] = None
    episodes_trained: int = Field(default=0, ge=0)
    entries: int = Field(default=0, ge=0)


def serialize_snapshot(player: Player, label: str = "") -> str:
    """Header line followed by one JSON line per table entry."""
    if isinstance(player, TDAgent):
        header = SnapshotHeader(
            kind="td",
            label=label,
            player_id=player.id,
            seed=player.identity.seed,
            identity=player.identity,
            episodes_trained=player.episodes_trained,
            entries=len(player.q),
        )
        lines = [header.model_dump_json(by_alias=True)]
        lines.extend(json.dumps([key, action, value]) for key, action, value in player.q.items())
    elif isinstance(player, (OraclePlayer, RandomPlayer)):
        header = SnapshotHeader(kind=player.kind, label=label, player_id=player.id, seed=player.seed)
        lines = [header.model_dump_json(by_alias=True)]
    else:
        raise TypeError(f"Cannot snapshot {type(player).__name__}")
    return "\n".join(lines) + "\n"


def save_snapshot(player: Player, path: Union[str, Path], label: str = "") -> Path:
    """Write a snapshot file, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_text(serialize_snapshot(player, label), encoding="utf-8")
    except OSError as e:
        logger.error(f"Could not write snapshot {path}: {e}")
        raise
    return path


def snapshot_digest(player: Player) -> str:
    """SHA-256 of the serialized snapshot."""
    return hashlib.sha256(serialize_snapshot(player).encode("utf-8")).hexdigest()


def parse_snapshot(text: str, source: str = "<memory>") -> Player:
    """Rebuild a player from snapshot text."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise SnapshotFormatError(f"{source}: empty snapshot")
    try:
        header = SnapshotHeader.model_validate_json(lines[0])
    except ValidationError as e:
        raise SnapshotFormatError(f"{source}: bad header: {e}") from e
    if header.format_version != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"{source}: unsupported snapshot version {header.format_version}")

    if header.kind == "oracle":
        return OraclePlayer(id=header.player_id, seed=header.seed)
    if header.kind == "random":
        return RandomPlayer(id=header.player_id, seed=header.seed)
    if header.identity is None:
        raise SnapshotFormatError(f"{source}: td snapshot without identity")

    q = QTable()
    for number, line in enumerate(lines[1:], start=2):
        try:
            key, action, value = json.loads(line)
            q.set(int(key), int(action), float(value))
        except (ValueError, TypeError) as e:
            raise SnapshotFormatError(f"{source}:{number}: bad table entry {line!r}") from e
    if len(q) != header.entries:
        raise SnapshotFormatError(f"{source}: header lists {header.entries} entries, found {len(q)}")
    return TDAgent(header.identity, q=q, episodes_trained=header.episodes_trained)


def load_snapshot(path: Union[str, Path]) -> Player:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Could not read snapshot {path}: {e}")
        raise
    return parse_snapshot(text, source=str(path))


def read_label(path: Union[str, Path]) -> str:
    """Label from the snapshot header, else the file stem."""
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    try:
        return SnapshotHeader.model_validate_json(first).label or Path(path).stem
    except ValidationError as e:
        raise SnapshotFormatError(f"{path}: bad header: {e}") from e


def load_snapshots(paths: List[Union[str, Path]]) -> List[Player]:
    """Load several snapshots in order."""
    return [load_snapshot(p) for p in paths]
