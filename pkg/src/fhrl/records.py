"""Per-episode experiment logs and their JSON / JSONL serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np


@dataclass
class ExperimentRecord:
    """Log of one learning run.

    Episode columns are parallel arrays in episode order. ``phases`` holds
    one entry per executed phase (the policy in force and the committed
    counts it was planned from); ``updates`` lists committed model updates.
    """

    eps: float
    agent: str
    seed: Optional[int] = None
    phase: list = field(default_factory=list)
    returns: list = field(default_factory=list)
    value: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    gap_start: list = field(default_factory=list)
    updates: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    final_policy: Optional[np.ndarray] = field(default=None, repr=False)
    stats: Optional[object] = field(default=None, repr=False)

    def __len__(self):
        return len(self.phase)

    def append(self, phase, ret, value, gap, gap_start):
        self.phase.append(int(phase))
        self.returns.append(float(ret))
        self.value.append(float(value))
        self.gap.append(float(gap))
        self.gap_start.append(float(gap_start))

    @property
    def mistakes(self) -> np.ndarray:
        return np.asarray(self.gap, dtype=float) > self.eps

    @property
    def num_mistakes(self) -> int:
        return int(self.mistakes.sum())

    @property
    def final_gap(self) -> Optional[float]:
        return self.summary.get("final_gap")

    def rows(self):
        by_episode = {u["episode"]: u for u in self.updates}
        for i in range(len(self)):
            upd = by_episode.get(i)
            yield {
                "episode": i,
                "phase": self.phase[i],
                "return": self.returns[i],
                "value": self.value[i],
                "gap": self.gap[i],
                "gap_start": self.gap_start[i],
                "mistake": bool(self.gap[i] > self.eps),
                "update": None if upd is None else {"s": upd["s"], "a": upd["a"], "n": upd["n"]},
            }


def count_mistakes(record, eps: float) -> int:
    """Number of episodes whose policy gap exceeds ``eps``.

    ``record`` may be an :class:`ExperimentRecord` or any iterable of gaps.
    """
    gaps = record.gap if isinstance(record, ExperimentRecord) else list(record)
    return int(np.sum(np.asarray(gaps, dtype=float) > eps))


def first_sustained_optimal(record: ExperimentRecord) -> int:
    """Episodes until the policy stays eps-optimal for the rest of the run.

    Equals ``len(record)`` when the last episode is still a mistake.
    """
    m = record.mistakes
    hits = np.flatnonzero(m)
    return 0 if hits.size == 0 else int(hits[-1] + 1)


# --------------------------------------------------------------------------- files


def load_schema(name: str) -> dict:
    text = resources.files("fhrl").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(instance, schema_name: str) -> None:
    import jsonschema

    jsonschema.validate(instance, load_schema(schema_name))


def write_record(record: ExperimentRecord, out_dir) -> Path:
    """Write ``episodes.jsonl``, ``phases.jsonl`` and ``summary.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "episodes.jsonl", "w") as fh:
        for row in record.rows():
            fh.write(json.dumps(row) + "\n")
    with open(out / "phases.jsonl", "w") as fh:
        for ph in record.phases:
            fh.write(json.dumps(ph) + "\n")
    (out / "summary.json").write_text(json.dumps(record.summary, indent=1) + "\n")
    return out


def read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
