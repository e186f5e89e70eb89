"""Command line interface: ``fhrl {generate,run,evaluate,sweep}``.

Exit status is 0 on success, 1 for invalid input (bad flags, files that fail
validation, inconsistent artifacts) and 2 for I/O failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import experiment
from .hard import HardInstanceSpec, make_hard_mdp, sample_hypothesis, save_hypothesis
from .mdp import MDPValidationError, load_mdp, random_mdp, save_mdp
from .records import validate

logger = logging.getLogger("fhrl")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(message)


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fhrl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a hard-instance or random MDP file")
    gen.add_argument("--kind", choices=("hard", "random"), default="hard")
    gen.add_argument("--n", type=int, default=3, help="bandit states (hard)")
    gen.add_argument("--num-actions", type=int, default=4)
    gen.add_argument("--num-states", type=int, default=5, help="states (random)")
    gen.add_argument("--num-successors", type=int, default=None, help="successor-set size (random)")
    gen.add_argument("--horizon", type=int, default=6)
    gen.add_argument("--eps-prime", type=float, default=0.2)
    gen.add_argument("--include-zero", action="store_true", help="allow hypotheses with no better arm")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output MDP JSON path")

    run = sub.add_parser("run", help="run an agent and write per-episode logs")
    run.add_argument("--mdp", required=True)
    run.add_argument("--agent", choices=experiment.AGENTS, default="ucfh")
    run.add_argument("--eps", type=float, default=0.1)
    run.add_argument("--delta", type=float, default=0.1)
    run.add_argument("--m-override", type=float, default=None)
    run.add_argument("--budget", type=int, default=1000)
    run.add_argument("--seeds", type=_int_list, default=[0])
    run.add_argument("--out", required=True)

    ev = sub.add_parser("evaluate", help="recompute gaps and mistakes from stored artifacts")
    ev.add_argument("--mdp", required=True)
    ev.add_argument("--run", required=True, help="directory holding summary.json, episodes.jsonl, phases.jsonl")

    sw = sub.add_parser("sweep", help="hard-instance sweep over horizon or eps_prime")
    sw.add_argument("--sweep-param", choices=experiment.SWEEP_PARAMS, required=True)
    sw.add_argument("--sweep-values", type=_float_list, required=True)
    sw.add_argument("--n", type=int, default=3)
    sw.add_argument("--num-actions", type=int, default=4)
    sw.add_argument("--horizon", type=int, default=6)
    sw.add_argument("--eps-prime", type=float, default=0.2)
    sw.add_argument("--eps", type=float, default=0.3)
    sw.add_argument("--delta", type=float, default=0.1)
    sw.add_argument("--m-override", type=float, default=200.0)
    sw.add_argument("--scale-m", action="store_true", help="scale m with H^2 relative to --horizon")
    sw.add_argument("--budget", type=int, default=50_000)
    sw.add_argument("--seeds", type=_int_list, default=[0])
    sw.add_argument("--out", default=None)
    return parser


def _generate(args):
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    if args.kind == "hard":
        hyp = sample_hypothesis(args.n, args.num_actions, args.include_zero, rng)
        spec = HardInstanceSpec(args.n, args.num_actions, args.eps_prime, args.horizon, hyp)
        save_mdp(make_hard_mdp(spec), out)
        save_hypothesis(spec, out.with_suffix(".hypothesis.json"), seed=args.seed)
    else:
        mdp = random_mdp(args.num_states, args.num_actions, args.horizon, rng, num_successors=args.num_successors)
        save_mdp(mdp, out)
    print(out)


def _run(args):
    config = experiment.ExperimentConfig(
        mdp=args.mdp,
        agent=args.agent,
        eps=args.eps,
        delta=args.delta,
        m_override=args.m_override,
        budget=args.budget,
        seeds=args.seeds,
        out_dir=args.out,
    )
    for record in experiment.run_experiment(config):
        validate(record.summary, "summary")
        s = record.summary
        print(f"seed={s['seed']} episodes={s['episodes']} mistakes={s['mistakes']} final_gap={s['final_gap']:.6g}")


def _evaluate(args):
    result = experiment.evaluate_artifacts(load_mdp(args.mdp), args.run)
    print(json.dumps(result, indent=1))
    return EXIT_OK if result["consistent"] else EXIT_INVALID


def _sweep(args):
    cells = [
        experiment.SweepCell(
            param=args.sweep_param,
            value=value,
            seed=seed,
            n=args.n,
            num_actions=args.num_actions,
            horizon=args.horizon,
            eps_prime=args.eps_prime,
            eps=args.eps,
            delta=args.delta,
            m_override=args.m_override,
            m_reference_horizon=args.horizon if args.scale_m else None,
            budget=args.budget,
        )
        for value in args.sweep_values
        for seed in args.seeds
    ]
    results = experiment.sweep(cells, out_dir=args.out)
    print(experiment.format_table(experiment.summarize_sweep(results)))


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _ArgumentError as exc:
        print(f"fhrl: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    handler = {"generate": _generate, "run": _run, "evaluate": _evaluate, "sweep": _sweep}[args.command]
    try:
        return handler(args) or EXIT_OK
    except MDPValidationError as exc:
        print(f"fhrl: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"fhrl: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except jsonschema.ValidationError as exc:
        print(f"fhrl: output failed schema validation: {exc.message}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError) as exc:
        print(f"fhrl: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
