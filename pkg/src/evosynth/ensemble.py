"""Ensembling: n independent runs, then one run seeded with their elites.

Each run uses its own engine seed on the same corpus. The harvested elite
trees enter the final run's initial population, so with elitism the final
run can never end below the best harvested program on the training split.
Aggregates summarize the independent runs only; the final run is reported
on its own row.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .evolution import EvolutionConfig, RunReport, evolve
from .guidance import GuidanceHandle
from .tasks import Corpus


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def _pstd(xs: Sequence[float]) -> float:
    m = _mean(xs)
    return (sum((x - m) ** 2 for x in xs) / len(xs)) ** 0.5


@dataclass(frozen=True)
class EnsembleConfig:
    base: EvolutionConfig
    n_runs: int = 10
    seeds: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        seeds = self.seeds or tuple(self.base.seed + k + 1 for k in range(self.n_runs))
        if len(seeds) != self.n_runs:
            raise ValueError("need one seed per run")
        if len(set(seeds)) != len(seeds) or self.base.seed in seeds:
            raise ValueError("run seeds must be distinct from each other "
                             "and from the final run's seed")
        object.__setattr__(self, "seeds", seeds)


@dataclass(frozen=True)
class AggregateRow:
    train_mean: float
    train_std: float
    test_mean: float
    test_std: float
    length_mean: float
    length_std: float
    height_mean: float
    height_std: float

    def formatted(self) -> dict[str, str]:
        """Accuracy as mean to 3 decimals, sizes to 2, std always to 2."""
        return {
            "train": f"{self.train_mean:.3f} ({self.train_std:.2f})",
            "test": f"{self.test_mean:.3f} ({self.test_std:.2f})",
            "length": f"{self.length_mean:.2f} ({self.length_std:.2f})",
            "height": f"{self.height_mean:.2f} ({self.height_std:.2f})",
        }


def aggregate(reports: Sequence[RunReport]) -> AggregateRow:
    if not reports:
        raise ValueError("need at least one report")
    return AggregateRow(
        train_mean=_mean([r.train_accuracy for r in reports]),
        train_std=_pstd([r.train_accuracy for r in reports]),
        test_mean=_mean([r.test_accuracy for r in reports]),
        test_std=_pstd([r.test_accuracy for r in reports]),
        length_mean=_mean([float(r.elite.length) for r in reports]),
        length_std=_pstd([float(r.elite.length) for r in reports]),
        height_mean=_mean([float(r.elite.height) for r in reports]),
        height_std=_pstd([float(r.elite.height) for r in reports]),
    )


@dataclass
class EnsembleReport:
    runs: list[RunReport]
    final: RunReport
    summary: AggregateRow


def ensemble_run(cfg: EnsembleConfig, corpus: Corpus,
                 llm: GuidanceHandle | None = None) -> EnsembleReport:
    """Independent runs, elite harvest, one seeded final run."""
    runs = [evolve(replace(cfg.base, seed=s), corpus, llm=llm)
            for s in cfg.seeds]
    elites = [r.elite.tree for r in runs]
    final = evolve(cfg.base, corpus, seeds=elites, llm=llm, seed_origin="elite")
    best_harvested = max(r.train_accuracy for r in runs)
    assert final.train_accuracy >= best_harvested, \
        "elitism must keep the final run at or above its seeds"
    return EnsembleReport(runs=runs, final=final, summary=aggregate(runs))
