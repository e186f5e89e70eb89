"""Experiment orchestration: seeded runs, artifact re-evaluation and sweeps."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import baselines, ucfh
from .diagnostics import categorize
from .hard import HardInstanceSpec, make_hard_mdp, sample_hypothesis
from .mdp import FixedHorizonMDP, GapEvaluator, load_mdp
from .records import first_sustained_optimal, read_jsonl, write_record

logger = logging.getLogger(__name__)

AGENTS = ("ucfh", "random", "certainty_equivalence")


@dataclass
class ExperimentConfig:
    mdp: object  # path to an MDP file, a FixedHorizonMDP, or a HardInstanceSpec
    agent: str = "ucfh"
    eps: float = 0.1
    delta: float = 0.1
    m_override: Optional[float] = None
    budget: int = 1000
    seeds: Sequence[int] = field(default_factory=lambda: [0])
    out_dir: Optional[str] = None

    def __post_init__(self):
        errors = []
        if self.agent not in AGENTS:
            errors.append(f"unknown agent {self.agent!r}; choose from {', '.join(AGENTS)}")
        if self.budget < 0:
            errors.append("budget must be nonnegative")
        if not len(self.seeds):
            errors.append("at least one seed is required")
        if errors:
            raise ValueError("; ".join(errors))

    def resolve_mdp(self) -> FixedHorizonMDP:
        if isinstance(self.mdp, FixedHorizonMDP):
            return self.mdp
        if isinstance(self.mdp, HardInstanceSpec):
            return make_hard_mdp(self.mdp)
        return load_mdp(self.mdp)


def run_agent(env, agent, eps, delta=0.1, m_override=None, budget=1000, seed=None, log_categories=False):
    rng = np.random.default_rng(seed)
    if agent == "ucfh":
        return ucfh.run(env, eps, delta, m_override, budget, rng=rng, seed=seed, log_categories=log_categories)
    if agent == "random":
        return baselines.run_random(env, eps, budget, rng=rng, seed=seed)
    if agent == "certainty_equivalence":
        return baselines.run_certainty_equivalence(env, eps, budget, rng=rng, seed=seed)
    raise ValueError(f"unknown agent {agent!r}")


def run_experiment(config: ExperimentConfig) -> list:
    """Run every seed of ``config``; writes artifacts when ``out_dir`` is set."""
    env = config.resolve_mdp()
    records = []
    for seed in config.seeds:
        record = run_agent(env, config.agent, config.eps, config.delta, config.m_override, config.budget, seed)
        if config.out_dir is not None:
            write_record(record, Path(config.out_dir) / f"seed_{seed}")
        records.append(record)
    return records


def evaluate_artifacts(env: FixedHorizonMDP, run_dir) -> dict:
    """Recompute gaps, mistakes and categories from a run directory.

    Gaps are recomputed from each stored phase policy by dynamic programming,
    and episode mistake flags are recounted against them.
    """
    run_dir = Path(run_dir)
    summary = json.loads((run_dir / "summary.json").read_text())
    phases = read_jsonl(run_dir / "phases.jsonl")
    episodes = read_jsonl(run_dir / "episodes.jsonl")
    eps = summary["eps"]
    evaluate = GapEvaluator(env)
    gap_by_phase = {}
    for ph in phases:
        gap_by_phase[ph["phase"]] = evaluate(np.asarray(ph["policy"]))[1]
    mistakes = 0
    flag_mismatches = 0
    for row in episodes:
        gap = gap_by_phase[row["phase"]]
        mistake = gap > eps
        mistakes += mistake
        if mistake != row["mistake"] or abs(gap - row["gap"]) > 1e-9:
            flag_mismatches += 1
    out = {
        "episodes": len(episodes),
        "mistakes": int(mistakes),
        "summary_mistakes": summary["mistakes"],
        "flag_mismatches": flag_mismatches,
        "consistent": mistakes == summary["mistakes"] and flag_mismatches == 0,
    }
    constants = summary.get("constants")
    if constants is not None:
        consts = _ConstView(constants["w_min"], constants["m_effective"])
        balanced = []
        for ph in phases:
            table = categorize(env, np.asarray(ph["policy"]), np.asarray(ph["n_sa"]), consts)
            balanced.append(table.balanced)
        out["balanced_phases"] = int(sum(balanced))
        out["unbalanced_phases"] = len(balanced) - int(sum(balanced))
    return out


@dataclass(frozen=True)
class _ConstView:
    w_min: float
    m_effective: float


# --------------------------------------------------------------------------- sweeps

SWEEP_PARAMS = ("horizon", "eps_prime")


@dataclass(frozen=True)
class SweepCell:
    param: str
    value: float
    seed: int
    n: int = 3
    num_actions: int = 4
    horizon: int = 6
    eps_prime: float = 0.2
    eps: float = 0.3
    delta: float = 0.1
    m_override: float = 200.0
    m_reference_horizon: Optional[int] = None  # scale m as H^2 relative to this horizon
    budget: int = 50_000


def run_cell(cell: SweepCell) -> dict:
    """Run one sweep cell; the result depends only on the cell's fields."""
    horizon = int(cell.value) if cell.param == "horizon" else cell.horizon
    eps_prime = float(cell.value) if cell.param == "eps_prime" else cell.eps_prime
    m = cell.m_override
    if cell.m_reference_horizon:
        m = m * (horizon / cell.m_reference_horizon) ** 2
    hyp_seq, run_seq = np.random.SeedSequence(cell.seed).spawn(2)
    hyp = sample_hypothesis(cell.n, cell.num_actions, False, np.random.default_rng(hyp_seq))
    spec = HardInstanceSpec(cell.n, cell.num_actions, eps_prime, horizon, hyp)
    env = make_hard_mdp(spec)
    record = ucfh.run(env, cell.eps, cell.delta, m, cell.budget, rng=np.random.default_rng(run_seq), seed=cell.seed)
    return {
        "param": cell.param,
        "value": cell.value,
        "seed": cell.seed,
        "horizon": horizon,
        "eps_prime": eps_prime,
        "m_effective": m,
        "hypotheses": hyp.tolist(),
        "episodes": len(record),
        "mistakes": record.num_mistakes,
        "updates": record.summary["updates"],
        "update_bound_violations": record.summary["update_bound_violations"],
        "episodes_to_sustained": first_sustained_optimal(record),
        "final_gap": record.summary["final_gap"],
    }


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("FHRL_THREADS", "1")))
    except ValueError:
        return 1


def sweep(cells: Sequence[SweepCell], out_dir=None, workers: Optional[int] = None) -> list:
    """Run independent cells, optionally in parallel processes (``FHRL_THREADS``)."""
    workers = thread_count() if workers is None else workers
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(c) for c in cells]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for res in results:
            name = f"cell_{res['param']}_{res['value']:g}_seed{res['seed']}.json"
            (out / name).write_text(json.dumps(res, indent=1) + "\n")
        write_sweep_table(summarize_sweep(results), out / "sweep.csv")
    return results


def summarize_sweep(results: Sequence[dict]) -> list:
    """Median statistics per swept value, in ascending order of the value."""
    rows = []
    for value in sorted({r["value"] for r in results}):
        cell = [r for r in results if r["value"] == value]
        rows.append(
            {
                "param": cell[0]["param"],
                "value": value,
                "seeds": len(cell),
                "median_episodes_to_sustained": float(np.median([r["episodes_to_sustained"] for r in cell])),
                "median_mistakes": float(np.median([r["mistakes"] for r in cell])),
                "mean_final_gap": float(np.mean([r["final_gap"] for r in cell])),
                "m_effective": cell[0]["m_effective"],
            }
        )
    return rows


def write_sweep_table(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def format_table(rows) -> str:
    header = f"{'value':>8} {'seeds':>5} {'episodes_to_sustained':>22} {'mistakes':>10} {'final_gap':>10} {'m':>10}"
    lines = [header]
    for r in rows:
        lines.append(
            f"{r['value']:>8g} {r['seeds']:>5d} {r['median_episodes_to_sustained']:>22.0f} "
            f"{r['median_mistakes']:>10.0f} {r['mean_final_gap']:>10.4f} {r['m_effective']:>10.1f}"
        )
    return "\n".join(lines)
