"""Acceptance gate: ten checks on the full attack/defense toolkit.

Covers attack constraint soundness, gradient correctness, loss arithmetic,
attack effectiveness and parameter trends, defense directionality, pipeline
determinism, and greedy optimality against an exhaustive oracle. Everything
runs on the synthetic benchmark (200 examples per class, 50-d embeddings).
Each test prints one "[criterion NN] PASS" line with the measured numbers
(visible with pytest -rA or -s).
"""

import itertools
import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from swapguard.attack import (DEFAULT_STOPWORDS, AttackConfig, attack_dataset,
                              attack_example, modifiable_positions)
from swapguard.cli import main as cli_main
from swapguard.corpus import (DialogueTurn, EntailmentExample,
                              flatten_dialogue, generate_synthetic,
                              split_dataset)
from swapguard.defense import TrainConfig, finetune_on_attacked, train
from swapguard.embedding import (EmbeddingTable, UnknownTokenError,
                                 nearest_synonyms, synthetic_table)
from swapguard.harness import (GridSpec, adjacent_inversions, aggregate_grid,
                               evaluate, run_grid)
from swapguard.seeding import derive_seed
from swapguard.tokenization import reconstruct, tokenize
from swapguard.victim import (MlpVictim, NoiseSpec, ce_loss, ep_loss, grad)

STRONG = dict(pct_words_to_swap=0.9, min_cos_sim=0.3, max_candidates=100)
SEEDS = range(5)


def report(num, message):
    print(f"[criterion {num:02d}] PASS - {message}")


def attacked_accuracy(model, table, ds, seed):
    """Accuracy of a model on the dataset attacked against that same model."""
    cfg = AttackConfig(**STRONG, seed=seed)
    _, perturbed = attack_dataset(model, table, ds, cfg)
    return evaluate(model, perturbed)[0]


@pytest.fixture(scope="module")
def table():
    return synthetic_table()


@pytest.fixture(scope="module")
def bench(table):
    full = generate_synthetic(200, seed=1, vocab=table)
    return split_dataset(full, (0.7, 0.1, 0.2), seed=2)


@pytest.fixture(scope="module")
def suite(table, bench):
    """Per-seed standard, fine-tuned, and EP victims with their accuracies."""
    train_ds, dev, test = bench
    rows, std_models = [], []
    for s in SEEDS:
        init = MlpVictim.initialize(table, hidden_dim=64,
                                    seed=derive_seed(s, "init"))
        std, _ = train(init, table, train_ds, dev, TrainConfig(epochs=50, seed=s))
        std_models.append(std)
        atk_seed = derive_seed(s, "test-attack")
        row = {"std_clean": evaluate(std, test)[0],
               "std_attacked": attacked_accuracy(std, table, test, atk_seed)}

        _, attacked_train = attack_dataset(
            std, table, train_ds,
            AttackConfig(**STRONG, seed=derive_seed(s, "train-attack")))
        ft = finetune_on_attacked(std, attacked_train, dev,
                                  TrainConfig(epochs=3, batch_size=16,
                                              seed=derive_seed(s, "ft")))
        row["ft_clean"] = evaluate(ft, test)[0]
        row["ft_attacked"] = attacked_accuracy(ft, table, test, atk_seed)

        for alpha, key in ((0.5, "ep50"), (0.75, "ep75")):
            cfg = TrainConfig(epochs=50, seed=s, loss_mode="ep", alpha=alpha,
                              noise=NoiseSpec(seed=derive_seed(s, "noise")))
            ep, _ = train(init, table, train_ds, dev, cfg)
            row[f"{key}_clean"] = evaluate(ep, test)[0]
            if alpha == 0.5:
                row["ep50_attacked"] = attacked_accuracy(ep, table, test,
                                                         atk_seed)
        rows.append(row)
    mean = {k: float(np.mean([r[k] for r in rows])) for k in rows[0]}
    return {"rows": rows, "mean": mean, "std_models": std_models}


class TestCriterion01Constraints:
    def test_thousand_random_attacks_respect_all_invariants(self, table):
        rng = np.random.default_rng(101)
        victims = [MlpVictim.initialize(table, hidden_dim=8, seed=v)
                   for v in (0, 1, 2)]
        pool = ["movie", "book", "good", "bad", "really", "trip", "teacher",
                "great", "boring", "watched", "the", "was", "not", "a",
                "42", "3.5", ".", ","]
        dialogue = (DialogueTurn("A", "we watched the movie"),
                    DialogueTurn("B", "it was good"))
        violations = []
        for i in range(1000):
            hyp = " ".join(rng.choice(pool, size=int(rng.integers(3, 9))))
            ex = EntailmentExample(f"c1-{i}", dialogue, hyp,
                                   bool(rng.integers(2)))
            cfg = AttackConfig(
                pct_words_to_swap=float(rng.choice([0.0, 0.2, 0.5, 0.9, 1.0])),
                min_cos_sim=float(rng.choice([0.3, 0.6, 0.9])),
                max_candidates=int(rng.choice([1, 3, 100])),
                seed=int(rng.integers(2 ** 31)))
            res = attack_example(victims[i % 3], table, ex, cfg)
            toks = tokenize(hyp)
            mod = set(modifiable_positions(toks, cfg))
            budget = math.ceil(cfg.pct_words_to_swap * len(mod))
            ok = (all(s.cosine >= cfg.min_cos_sim for s in res.swaps)
                  and len({s.position for s in res.swaps}) == len(res.swaps)
                  and all(s.position in mod for s in res.swaps)
                  and len(res.swaps) <= budget
                  and res.queries >= 1
                  and res.success == (res.new_pred != res.orig_pred))
            if not ok:
                violations.append(i)
        assert violations == []
        report(1, "1000 attacks, 0 violations of cosine/distinct/"
                  "stopword/budget invariants")


class TestCriterion02Gradients:
    def test_hundred_finite_difference_checks(self):
        tiny = EmbeddingTable(["aa", "bb", "cc"],
                              np.array([[1.0, 0.0], [0.0, 2.0], [2.0, 2.0]]))
        rng = np.random.default_rng(202)
        sites = ("representation", "logits")
        worst = 0.0
        for case in range(100):
            m = MlpVictim.initialize(tiny, hidden_dim=int(rng.integers(2, 5)),
                                     seed=int(rng.integers(10_000)))
            for arr in m.params().values():
                arr += rng.normal(scale=0.5, size=arr.shape)
            x = rng.normal(scale=1.5, size=m.input_dim)
            y = bool(rng.integers(2))
            if case % 2 == 0:
                analytic = grad(m, x, y, "ce")
                loss_fn = lambda mm: ce_loss(mm.forward(x), y)
            else:
                spec = NoiseSpec(site=sites[(case // 2) % 2],
                                 seed=int(rng.integers(10_000)))
                alpha = float(rng.uniform(0, 1))
                analytic = grad(m, x, y, "ep", alpha=alpha, noise=spec)
                loss_fn = lambda mm: ep_loss(mm, x, y, alpha, spec)
            for name, arr in m.params().items():
                g = np.zeros_like(arr)
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + 1e-5
                    hi = loss_fn(m)
                    arr[idx] = orig - 1e-5
                    lo = loss_fn(m)
                    arr[idx] = orig
                    g[idx] = (hi - lo) / 2e-5
                np.testing.assert_allclose(analytic[name], g,
                                           rtol=1e-4, atol=1e-8,
                                           err_msg=f"case {case} {name}")
                denom = np.maximum(np.abs(g), 1e-8)
                worst = max(worst, float(np.max(np.abs(analytic[name] - g) / denom)))
        report(2, f"100 cases, worst relative error {worst:.2e} <= 1e-4")


class TestCriterion03LossArithmetic:
    def test_ep_loss_is_affine_in_alpha(self):
        tiny = EmbeddingTable(["aa", "bb", "cc"],
                              np.array([[1.0, 0.0], [0.0, 2.0], [2.0, 2.0]]))
        rng = np.random.default_rng(303)
        worst = 0.0
        for case in range(10):
            m = MlpVictim.initialize(tiny, hidden_dim=3,
                                     seed=int(rng.integers(10_000)))
            x = rng.normal(scale=1.5, size=m.input_dim)
            y = bool(rng.integers(2))
            for site in ("representation", "logits"):
                spec = NoiseSpec(site=site, seed=int(rng.integers(10_000)))
                l0 = ep_loss(m, x, y, 0.0, spec)
                l1 = ep_loss(m, x, y, 1.0, spec)
                for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
                    got = ep_loss(m, x, y, alpha, spec)
                    err = abs(got - (l0 + alpha * (l1 - l0)))
                    worst = max(worst, err)
                    assert err < 1e-9
        report(3, f"affine in alpha at 5 points x 20 cases, "
                  f"worst deviation {worst:.2e} < 1e-9")


class TestCriterion04AttackEffectiveness:
    def test_strong_attack_drops_accuracy(self, suite):
        m = suite["mean"]
        drop = m["std_clean"] - m["std_attacked"]
        assert drop >= 0.05
        report(4, f"clean {m['std_clean']:.4f} -> attacked "
                  f"{m['std_attacked']:.4f}, drop {100 * drop:.1f} pts >= 5")


class TestCriterion05Monotonicity:
    def test_attacked_accuracy_monotone_in_strength(self, table, bench, suite):
        _, _, test = bench
        victim = suite["std_models"][0]
        by_cos = aggregate_grid(run_grid(
            victim, table, test,
            GridSpec((0.5,), (0.9, 0.6, 0.3), (100,), repeats=5, seed=11)))
        cos_vals = [r.attacked_acc for r in by_cos]
        by_pct = aggregate_grid(run_grid(
            victim, table, test,
            GridSpec((0.2, 0.5, 0.9), (0.3,), (100,), repeats=5, seed=12)))
        pct_vals = [r.attacked_acc for r in by_pct]
        assert adjacent_inversions(cos_vals) <= 1
        assert adjacent_inversions(pct_vals) <= 1
        report(5, "attacked acc over min_cos {0.9,0.6,0.3}: "
                  f"{[round(v, 4) for v in cos_vals]}; over pct "
                  f"{{0.2,0.5,0.9}}: {[round(v, 4) for v in pct_vals]}; "
                  "<= 1 inversion each")


class TestCriterion06Saturation:
    def test_candidate_cap_saturates(self, table, bench, suite):
        _, _, test = bench
        victim = suite["std_models"][0]
        rows = aggregate_grid(run_grid(
            victim, table, test,
            GridSpec((0.9,), (0.3,), (100, 300), repeats=5, seed=13)))
        delta = abs(rows[0].attacked_acc - rows[1].attacked_acc)
        assert delta < 0.02
        report(6, f"attacked acc at 100 vs 300 candidates: "
                  f"{rows[0].attacked_acc:.4f} vs {rows[1].attacked_acc:.4f}, "
                  f"delta {100 * delta:.2f} pts < 2")


class TestCriterion07FinetuneDefense:
    def test_finetune_trades_clean_for_attacked(self, suite):
        m = suite["mean"]
        gain = m["ft_attacked"] - m["std_attacked"]
        assert gain >= 0.03
        assert m["ft_clean"] < m["std_clean"]
        report(7, f"attacked {m['std_attacked']:.4f} -> {m['ft_attacked']:.4f} "
                  f"(+{100 * gain:.1f} pts >= 3); clean {m['std_clean']:.4f} "
                  f"-> {m['ft_clean']:.4f} (decreased)")


class TestCriterion08EpDefense:
    def test_ep_training_narrows_the_gap(self, suite):
        m = suite["mean"]
        gap_ce = m["std_clean"] - m["std_attacked"]
        gap_ep = m["ep50_clean"] - m["ep50_attacked"]
        assert gap_ep < gap_ce
        assert m["ep75_clean"] < m["ep50_clean"]
        disagree = sum(r["ep75_clean"] >= r["ep50_clean"]
                       for r in suite["rows"])
        if disagree:
            warnings.warn(f"alpha=0.75 clean-accuracy clause holds on the "
                          f"seed mean but not on {disagree}/5 individual seeds")
        report(8, f"gap CE {100 * gap_ce:.1f} pts > gap EP(0.5) "
                  f"{100 * gap_ep:.1f} pts; clean EP(0.75) "
                  f"{m['ep75_clean']:.4f} < EP(0.5) {m['ep50_clean']:.4f}")


def run_pipeline(root):
    data = root / "data"
    embeddings = str(data / "embeddings.txt")
    model = str(root / "model.json")
    assert cli_main(["gen-data", "--out", str(data),
                     "--n-per-class", "30", "--seed", "5"]) == 0
    assert cli_main(["train", "--data", str(data / "train.json"),
                     "--dev", str(data / "dev.json"),
                     "--embeddings", embeddings, "--out", model,
                     "--epochs", "15", "--hidden-dim", "16", "--seed", "3",
                     "--report", str(root / "report.json")]) == 0
    assert cli_main(["attack", "--model", model,
                     "--data", str(data / "test.json"),
                     "--embeddings", embeddings,
                     "--out", str(root / "results.jsonl"),
                     "--perturbed-out", str(root / "attacked.json"),
                     "--seed", "7"]) == 0
    assert cli_main(["grid", "--model", model,
                     "--data", str(data / "test.json"),
                     "--embeddings", embeddings,
                     "--out", str(root / "grid.csv"),
                     "--pct", "0.5,0.9", "--min-cos-sim", "0.3",
                     "--max-candidates", "10", "--repeats", "2",
                     "--seed", "9"]) == 0
    assert cli_main(["eval", "--model", model,
                     "--data", str(root / "attacked.json"),
                     "--embeddings", embeddings,
                     "--out", str(root / "eval.json")]) == 0
    names = ["data/embeddings.txt", "data/train.json", "data/dev.json",
             "data/test.json", "data/manifest.json", "model.json",
             "report.json", "results.jsonl", "attacked.json", "grid.csv",
             "eval.json"]
    return {n: (root / n).read_bytes() for n in names}


class TestCriterion09Determinism:
    def test_two_pipeline_runs_byte_identical(self, tmp_path):
        a = run_pipeline(tmp_path / "a")
        b = run_pipeline(tmp_path / "b")
        assert a.keys() == b.keys()
        differing = [n for n in a if a[n] != b[n]]
        assert differing == []
        report(9, f"{len(a)} artifacts byte-identical across two "
                  "gen-data/train/attack/grid/eval runs")


class LinearVictim:
    """Hypothesis-only additive scorer; never flips (margin by construction)."""

    def __init__(self, weights, bias=2.0):
        self.weights = weights
        self.bias = bias

    def predict_proba(self, dialogue, hypothesis):
        z = self.bias + sum(self.weights.get(t.text, 0.0)
                            for t in tokenize(hypothesis))
        p_true = 1.0 / (1.0 + math.exp(-z))
        return (1.0 - p_true, p_true)


def exhaustive_min_p_true(victim, table, ex, cfg):
    """Minimum p(true) over every constraint-respecting swap assignment."""
    toks = tokenize(ex.hypothesis)
    positions = modifiable_positions(toks, cfg)
    options = []
    for pos in positions:
        try:
            cands = nearest_synonyms(table, toks[pos].text,
                                     cfg.max_candidates, cfg.min_cos_sim)
        except UnknownTokenError:
            cands = []
        options.append([None] + [c.token for c in cands])
    dialogue = flatten_dialogue(ex)
    best = victim.predict_proba(dialogue, ex.hypothesis)[1]
    for combo in itertools.product(*options):
        reps = {pos: tok for pos, tok in zip(positions, combo)
                if tok is not None}
        text = reconstruct(ex.hypothesis, toks, reps)
        best = min(best, victim.predict_proba(dialogue, text)[1])
    return best


class TestCriterion10GreedyOptimality:
    def test_greedy_matches_exhaustive_on_micro_instances(self, table):
        rng = np.random.default_rng(404)
        pool = ["movie", "book", "good", "bad", "really", "trip",
                "teacher", "quick", "the", "was", "a"]
        dialogue = (DialogueTurn("A", "we watched the movie"),)
        cfg = AttackConfig(pct_words_to_swap=1.0, min_cos_sim=0.6,
                           max_candidates=3, seed=0)
        swaps_seen = 0
        for i in range(20):
            weights = {tok: float(rng.uniform(-0.1, 0.1))
                       for tok in table.tokens}
            victim = LinearVictim(weights)
            hyp = " ".join(rng.choice(pool, size=int(rng.integers(3, 7))))
            ex = EntailmentExample(f"c10-{i}", dialogue, hyp, True)
            res = attack_example(victim, table, ex,
                                 replace(cfg, seed=int(rng.integers(1000))))
            assert res.orig_pred is True and res.success is False
            got = victim.predict_proba(flatten_dialogue(ex),
                                       res.perturbed_hypothesis)[1]
            want = exhaustive_min_p_true(victim, table, ex, cfg)
            assert got == pytest.approx(want, abs=1e-12)
            swaps_seen += len(res.swaps)
        assert swaps_seen > 0
        report(10, f"20 micro-instances match the exhaustive minimum "
                   f"within 1e-12 ({swaps_seen} swaps committed in total)")
