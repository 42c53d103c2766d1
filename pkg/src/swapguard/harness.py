"""Evaluation metrics, the attack-parameter grid search, and seed averaging.

The grid runner sweeps the three attack knobs (pct_words_to_swap,
min_cos_sim, max_candidates) over a Cartesian product, repeats each cell
with derived seeds, and emits one CSV row per (cell, repeat).
"""

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .attack import DEFAULT_STOPWORDS, AttackConfig, AttackResult, attack_dataset
from .attack import TARGET_HYPOTHESIS
from .corpus import Dataset, flatten_dialogue
from .embedding import EmbeddingTable
from .seeding import derive_seed
from .victim import VictimInterface

__all__ = ["ConfusionMatrix", "GridSpec", "GridRow", "AggregatedRow",
           "CSV_HEADER", "evaluate", "attack_success_rate", "run_grid",
           "mean_over_seeds", "aggregate_grid", "write_grid_csv",
           "read_grid_csv", "adjacent_inversions"]

CSV_HEADER = ["pct_words_to_swap", "min_cos_sim", "max_candidates", "seed",
              "clean_acc", "attacked_acc", "success_rate", "mean_queries"]


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 counts with "entailed" (label true) as the positive class."""
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total


def evaluate(victim: VictimInterface, ds: Dataset) -> tuple[float, ConfusionMatrix]:
    """Accuracy and confusion matrix of argmax predictions over a dataset."""
    if not ds.examples:
        raise ValueError("cannot evaluate on an empty dataset")
    tp = fp = tn = fn = 0
    for ex in ds.examples:
        p_false, p_true = victim.predict_proba(flatten_dialogue(ex), ex.hypothesis)
        pred = p_true > p_false
        if pred and ex.label:
            tp += 1
        elif pred:
            fp += 1
        elif ex.label:
            fn += 1
        else:
            tn += 1
    matrix = ConfusionMatrix(tp, fp, tn, fn)
    return matrix.accuracy, matrix


def attack_success_rate(results: list[AttackResult], restrict_to_correct: bool = False,
                        labels: Mapping[str, bool] | None = None) -> float:
    """Fraction of attacks that flipped the prediction.

    With restrict_to_correct, only examples the victim originally got right
    count toward the denominator; ``labels`` maps example_id to gold label
    and is required in that mode.
    """
    if not results:
        raise ValueError("results must be non-empty")
    pool = results
    if restrict_to_correct:
        if labels is None:
            raise ValueError("restrict_to_correct requires gold labels")
        pool = [r for r in results if r.orig_pred == labels[r.example_id]]
        if not pool:
            raise ValueError("no originally-correct examples to restrict to")
    return sum(r.success for r in pool) / len(pool)


# --------------------------------------------------------------------------
# Grid search

@dataclass(frozen=True)
class GridSpec:
    pct_words_to_swap: tuple[float, ...]
    min_cos_sim: tuple[float, ...]
    max_candidates: tuple[int, ...]
    repeats: int = 1
    seed: int = 0
    target: str = TARGET_HYPOTHESIS

    def __post_init__(self):
        for name in ("pct_words_to_swap", "min_cos_sim", "max_candidates"):
            if not getattr(self, name):
                raise ValueError(f"{name} axis must be non-empty")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass(frozen=True)
class GridRow:
    pct_words_to_swap: float
    min_cos_sim: float
    max_candidates: int
    seed: int
    clean_acc: float
    attacked_acc: float
    success_rate: float
    mean_queries: float


@dataclass(frozen=True)
class AggregatedRow:
    pct_words_to_swap: float
    min_cos_sim: float
    max_candidates: int
    repeats: int
    clean_acc: float
    attacked_acc: float
    success_rate: float
    mean_queries: float


def run_grid(victim: VictimInterface, table: EmbeddingTable, test_ds: Dataset,
             spec: GridSpec, stopwords: frozenset[str] = DEFAULT_STOPWORDS,
             csv_path=None) -> list[GridRow]:
    """One attacked evaluation per (pct, cos, candidates, repeat) cell.

    Cell seeds derive from (spec.seed, cell values, repeat index), so any
    sub-grid reproduces the same rows. Clean accuracy is attack-independent
    and computed once.
    """
    clean_acc, _ = evaluate(victim, test_ds)
    rows = []
    cells = itertools.product(spec.pct_words_to_swap, spec.min_cos_sim,
                              spec.max_candidates)
    for pct, cos_sim, cand in cells:
        for rep in range(spec.repeats):
            cell_seed = derive_seed(spec.seed, pct, cos_sim, cand, rep)
            config = AttackConfig(pct_words_to_swap=pct, min_cos_sim=cos_sim,
                                  max_candidates=cand, target=spec.target,
                                  seed=cell_seed)
            results, perturbed = attack_dataset(victim, table, test_ds, config,
                                                stopwords)
            attacked_acc, _ = evaluate(victim, perturbed)
            rows.append(GridRow(
                pct_words_to_swap=pct,
                min_cos_sim=cos_sim,
                max_candidates=cand,
                seed=cell_seed,
                clean_acc=clean_acc,
                attacked_acc=attacked_acc,
                success_rate=attack_success_rate(results),
                mean_queries=sum(r.queries for r in results) / len(results),
            ))
    if csv_path is not None:
        write_grid_csv(rows, csv_path)
    return rows


def _config_key(row: GridRow) -> tuple:
    return (row.pct_words_to_swap, row.min_cos_sim, row.max_candidates)


def mean_over_seeds(rows: list[GridRow]) -> AggregatedRow:
    """Average one config's repeated rows; rejects rows from mixed configs."""
    if not rows:
        raise ValueError("rows must be non-empty")
    keys = {_config_key(r) for r in rows}
    if len(keys) != 1:
        raise ValueError(f"rows span {len(keys)} configs; expected one")
    n = len(rows)
    return AggregatedRow(
        pct_words_to_swap=rows[0].pct_words_to_swap,
        min_cos_sim=rows[0].min_cos_sim,
        max_candidates=rows[0].max_candidates,
        repeats=n,
        clean_acc=sum(r.clean_acc for r in rows) / n,
        attacked_acc=sum(r.attacked_acc for r in rows) / n,
        success_rate=sum(r.success_rate for r in rows) / n,
        mean_queries=sum(r.mean_queries for r in rows) / n,
    )


def aggregate_grid(rows: Iterable[GridRow]) -> list[AggregatedRow]:
    """Group rows by config (first-seen order) and average each group."""
    groups: dict[tuple, list[GridRow]] = {}
    for row in rows:
        groups.setdefault(_config_key(row), []).append(row)
    return [mean_over_seeds(g) for g in groups.values()]


def adjacent_inversions(values: list[float], tol: float = 0.0) -> int:
    """Count adjacent pairs violating a non-increasing trend by more than tol."""
    return sum(b > a + tol for a, b in zip(values, values[1:]))


# --------------------------------------------------------------------------
# CSV io

def write_grid_csv(rows: Iterable[GridRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([repr(r.pct_words_to_swap), repr(r.min_cos_sim),
                             r.max_candidates, r.seed, repr(r.clean_acc),
                             repr(r.attacked_acc), repr(r.success_rate),
                             repr(r.mean_queries)])


def read_grid_csv(path) -> list[GridRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        return [GridRow(float(p), float(c), int(m), int(s), float(ca),
                        float(aa), float(sr), float(mq))
                for p, c, m, s, ca, aa, sr, mq in reader]
