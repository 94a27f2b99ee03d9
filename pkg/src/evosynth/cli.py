"""Command-line entry points for corpora, runs, ensembles, and benchmarks.

Every experiment command writes a results CSV plus a manifest.json holding
the resolved configuration, seeds, and library versions, which is enough
to replay the run exactly when the model is off or scripted.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import random
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import EnsembleConfig, aggregate, ensemble_run
from .evolution import EvolutionConfig, RunReport, evolve
from .guidance import (GuidanceHandle, GuidanceUnavailable, HttpChatClient,
                       MockChatClient, GuidanceSettings, load_mock_script)
from .machine import RunBudget, evaluate_population, fitness, pack_instances, \
    reference_fitness
from .programs import (ProgramError, default_primitive_set, flatten, height,
                       length, parse_program, random_program)
from .tasks import (Corpus, CorpusParams, TaskKind, generate_corpus,
                    load_corpus, save_corpus)

CSV_COLUMNS = ("task", "population", "run_index", "train_acc", "test_acc",
               "length", "height", "wall_ms", "origin_of_elite")


def _versions() -> dict[str, str]:
    import numba
    return {
        "evosynth": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "numba": numba.__version__,
    }


def _write_manifest(outdir: Path, payload: dict) -> None:
    payload = dict(payload)
    payload["versions"] = _versions()
    (outdir / "manifest.json").write_text(json.dumps(payload, indent=2) + "\n",
                                          encoding="utf-8")


def _corpus_from_args(args, parser: argparse.ArgumentParser) -> tuple[Corpus, dict]:
    if args.corpus:
        path = Path(args.corpus)
        corpus = load_corpus(path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        return corpus, {"path": str(path), "sha256": digest}
    if not args.task:
        parser.error("either --corpus or --task is required")
    task = TaskKind(args.task)
    variants = tuple(args.variants.split(",")) if args.variants else None
    params = CorpusParams(variants=variants)
    corpus = generate_corpus(task, args.train, args.test, args.corpus_seed, params)
    return corpus, {"task": task.value, "train": args.train, "test": args.test,
                    "seed": args.corpus_seed, "variants": variants}


def _guidance_from_args(args, corpus: Corpus):
    """(handle, seed_trees) for the requested llm mode; (None, []) when off."""
    mode = args.llm
    if mode == "off":
        return None, []
    settings = GuidanceSettings(endpoint=args.llm_endpoint, model=args.llm_model)
    if mode.startswith("mock:"):
        client = MockChatClient(load_mock_script(mode[len("mock:"):]))
    elif mode == "live":
        client = HttpChatClient(args.llm_endpoint, args.llm_model)
    else:
        raise ValueError(f"unknown llm mode {mode!r}")
    try:
        handle = GuidanceHandle.build(client, corpus.train_instances, settings)
        seeds = handle.seed_trees()
    except GuidanceUnavailable as err:
        print(f"llm guidance unavailable ({err}); continuing without it",
              file=sys.stderr)
        return None, []
    return handle, seeds


def _report_row(corpus: Corpus, pop: int, run_index, report: RunReport) -> dict:
    return {
        "task": corpus.task.value,
        "population": pop,
        "run_index": run_index,
        "train_acc": f"{report.train_accuracy:.6f}",
        "test_acc": f"{report.test_accuracy:.6f}",
        "length": report.elite.length,
        "height": report.elite.height,
        "wall_ms": round(report.wall_time_s * 1000.0, 1),
        "origin_of_elite": report.elite.origin,
    }


def _aggregate_row(corpus: Corpus, pop: int, reports) -> dict:
    agg = aggregate(reports).formatted()
    return {
        "task": corpus.task.value,
        "population": pop,
        "run_index": "aggregate",
        "train_acc": agg["train"],
        "test_acc": agg["test"],
        "length": agg["length"],
        "height": agg["height"],
        "wall_ms": round(sum(r.wall_time_s for r in reports) * 1000.0, 1),
        "origin_of_elite": "",
    }


def _write_csv(path: Path, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def _config_from_args(args, seed: int) -> EvolutionConfig:
    return EvolutionConfig(
        population_size=args.pop,
        n_generations=args.gens,
        seed=seed,
        workers=args.workers,
        budget=RunBudget(iterations=args.iterations),
        early_stop_at=args.early_stop,
        early_stop_settle=args.early_stop_settle,
    )


def cmd_corpus_gen(args, parser) -> int:
    task = TaskKind(args.task)
    variants = tuple(args.variants.split(",")) if args.variants else None
    corpus = generate_corpus(task, args.train, args.test, args.seed,
                             CorpusParams(variants=variants))
    save_corpus(corpus, args.out)
    print(f"wrote {args.out}: {task.value}, {args.train} train + "
          f"{args.test} test instances, seed {args.seed}")
    return 0


def cmd_run(args, parser) -> int:
    corpus, corpus_info = _corpus_from_args(args, parser)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    engine_seeds = [args.seed + k for k in range(args.repeat)]
    rows, reports = [], []
    for k, run_seed in enumerate(engine_seeds):
        handle, seeds = _guidance_from_args(args, corpus)
        report = evolve(_config_from_args(args, run_seed), corpus,
                        seeds=[t for t in seeds], llm=handle)
        reports.append(report)
        rows.append(_report_row(corpus, args.pop, k, report))
        (outdir / f"elite_{k}.txt").write_text(report.elite.text + "\n",
                                               encoding="utf-8")
        print(f"run {k}: train {report.train_accuracy:.3f} "
              f"test {report.test_accuracy:.3f} length {report.elite.length} "
              f"({report.wall_time_s:.1f}s)")
    rows.append(_aggregate_row(corpus, args.pop, reports))
    _write_csv(outdir / "results.csv", rows)
    _write_manifest(outdir, {
        "command": "run", "corpus": corpus_info, "engine_seeds": engine_seeds,
        "population": args.pop, "generations": args.gens,
        "iterations": args.iterations, "workers": args.workers,
        "repeat": args.repeat, "llm": args.llm, "early_stop": args.early_stop,
    })
    agg = aggregate(reports).formatted()
    print(f"aggregate: train {agg['train']} test {agg['test']} "
          f"length {agg['length']} height {agg['height']}")
    return 0


def cmd_ensemble(args, parser) -> int:
    corpus, corpus_info = _corpus_from_args(args, parser)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    handle, _ = _guidance_from_args(args, corpus)
    cfg = EnsembleConfig(base=_config_from_args(args, args.seed),
                         n_runs=args.runs)
    result = ensemble_run(cfg, corpus, llm=handle)
    rows = [_report_row(corpus, args.pop, k, r)
            for k, r in enumerate(result.runs)]
    rows.append(_aggregate_row(corpus, args.pop, result.runs))
    rows.append(_report_row(corpus, args.pop, "final*", result.final))
    _write_csv(outdir / "results.csv", rows)
    (outdir / "elite_final.txt").write_text(result.final.elite.text + "\n",
                                            encoding="utf-8")
    _write_manifest(outdir, {
        "command": "ensemble", "corpus": corpus_info,
        "run_seeds": list(cfg.seeds), "final_seed": cfg.base.seed,
        "population": args.pop, "generations": args.gens,
        "iterations": args.iterations, "workers": args.workers,
        "runs": args.runs, "llm": args.llm, "early_stop": args.early_stop,
    })
    print(f"final*: train {result.final.train_accuracy:.3f} "
          f"test {result.final.test_accuracy:.3f} "
          f"length {result.final.elite.length}")
    return 0


def cmd_eval(args, parser) -> int:
    corpus = load_corpus(args.corpus)
    text = Path(args.program).read_text(encoding="utf-8")
    try:
        tree = parse_program(text.strip())
    except ProgramError as err:
        print(f"program error: {err}", file=sys.stderr)
        return 2
    flat = flatten(tree)
    budget = RunBudget(iterations=args.iterations)
    train_acc = fitness(flat, corpus.train_instances, budget)
    test_acc = fitness(flat, corpus.test_instances, budget) \
        if corpus.test_instances else float("nan")
    print(f"train_accuracy {train_acc:.6f}")
    print(f"test_accuracy {test_acc:.6f}")
    print(f"length {length(tree)}")
    print(f"height {height(tree)}")
    return 0


def cmd_bench(args, parser) -> int:
    if args.programs == 0:
        print("empty population, nothing to measure")
        return 0
    task = TaskKind(args.task)
    corpus = generate_corpus(task, args.instances, 0, args.corpus_seed)
    pack = pack_instances(corpus.train_instances)
    pset = default_primitive_set()
    rng = random.Random(args.seed)
    trees = [random_program(pset, rng) for _ in range(args.programs)]
    flats = [flatten(t, pset) for t in trees]
    budget = RunBudget(iterations=args.iterations)

    evaluate_population(flats[:1], pack, budget)  # compile before timing
    t0 = time.perf_counter()
    base = evaluate_population(flats, pack, budget, workers=1)
    flat_s = time.perf_counter() - t0
    print(f"flat machine, workers=1: {args.programs / flat_s:,.0f} programs/s "
          f"({flat_s:.2f}s)")
    if args.workers > 1:
        t0 = time.perf_counter()
        multi = evaluate_population(flats, pack, budget, workers=args.workers)
        multi_s = time.perf_counter() - t0
        same = multi == base
        print(f"flat machine, workers={args.workers}: "
              f"{args.programs / multi_s:,.0f} programs/s ({multi_s:.2f}s), "
              f"fitness vectors identical: {same}")
    if not args.no_reference:
        t0 = time.perf_counter()
        ref = [reference_fitness(t, corpus.train_instances, budget) for t in trees]
        ref_s = time.perf_counter() - t0
        agree = ref == base
        print(f"reference walker: {args.programs / ref_s:,.0f} programs/s "
              f"({ref_s:.2f}s); speedup x{ref_s / flat_s:.1f}; "
              f"fitness agreement: {agree}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evosynth",
        description="Evolve list-manipulation programs from examples.")
    sub = parser.add_subparsers(dest="command", required=True)

    corpus = sub.add_parser("corpus", help="corpus utilities")
    corpus_sub = corpus.add_subparsers(dest="corpus_command", required=True)
    gen = corpus_sub.add_parser("gen", help="generate and save a corpus")
    gen.add_argument("--task", required=True,
                     choices=[t.value for t in TaskKind])
    gen.add_argument("--train", type=int, default=100)
    gen.add_argument("--test", type=int, default=100)
    gen.add_argument("--seed", type=int, default=42)
    gen.add_argument("--variants",
                     help="comma-separated variant restriction, e.g. inverted")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_corpus_gen)

    def add_experiment_args(p, with_repeat: bool):
        p.add_argument("--task", choices=[t.value for t in TaskKind])
        p.add_argument("--corpus", help="load a saved corpus instead of generating")
        p.add_argument("--corpus-seed", type=int, default=42)
        p.add_argument("--train", type=int, default=100)
        p.add_argument("--test", type=int, default=100)
        p.add_argument("--variants")
        p.add_argument("--pop", type=int, default=300)
        p.add_argument("--gens", type=int, default=1500)
        p.add_argument("--iterations", type=int, default=200)
        p.add_argument("--early-stop", type=float, default=None,
                       help="halt a run once best train accuracy reaches this")
        p.add_argument("--early-stop-settle", type=int, default=0,
                       help="extra generations without elite improvement "
                            "required before an early stop")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--llm", default="off",
                       help="off, mock:<script-file>, or live")
        p.add_argument("--llm-endpoint", default="")
        p.add_argument("--llm-model", default="")
        p.add_argument("--out", default="results")
        if with_repeat:
            p.add_argument("--repeat", type=int, default=10)

    run = sub.add_parser("run", help="repeated evolution runs on one corpus")
    add_experiment_args(run, with_repeat=True)
    run.set_defaults(func=cmd_run)

    ens = sub.add_parser("ensemble",
                         help="independent runs plus one elite-seeded run")
    add_experiment_args(ens, with_repeat=False)
    ens.add_argument("--runs", type=int, default=10)
    ens.set_defaults(func=cmd_ensemble)

    ev = sub.add_parser("eval", help="score a program file against a corpus")
    ev.add_argument("--program", required=True)
    ev.add_argument("--corpus", required=True)
    ev.add_argument("--iterations", type=int, default=200)
    ev.set_defaults(func=cmd_eval)

    bench = sub.add_parser("bench", help="throughput of both evaluation routes")
    bench.add_argument("--programs", type=int, default=30000)
    bench.add_argument("--instances", type=int, default=100)
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--task", default="inverse",
                       choices=[t.value for t in TaskKind])
    bench.add_argument("--seed", type=int, default=7)
    bench.add_argument("--corpus-seed", type=int, default=42)
    bench.add_argument("--iterations", type=int, default=200)
    bench.add_argument("--no-reference", action="store_true",
                       help="skip the slow reference-walker timing")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    raise SystemExit(main())
