"""Constrained synonym-swap attack against a black-box text-pair victim.

The attack tokenizes the target text, ranks modifiable positions by
leave-one-out importance, and greedily substitutes embedding-space synonyms
under three constraints: each position is swapped at most once, stopwords
and punctuation are immune, and the total number of swaps is capped at
ceil(pct_words_to_swap x modifiable count). A swap is committed only if it
strictly lowers the victim's probability of its original prediction; the
search halts as soon as the prediction flips.
"""

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .corpus import Dataset, DialogueTurn, EntailmentExample, flatten_dialogue
from .embedding import EmbeddingTable, UnknownTokenError, nearest_synonyms
from .seeding import derive_seed
from .tokenization import Token, reconstruct, tokenize
from .victim import VictimInterface

__all__ = [
    "DEFAULT_STOPWORDS", "TARGETS", "AttackConfig", "Swap", "AttackResult",
    "tokenize", "load_stopwords", "load_lexicon", "modifiable_positions",
    "word_importance", "attack_example", "attack_dataset",
    "save_results", "load_results", "result_to_dict", "result_from_dict",
]

# Standard English stopword list (NLTK's), with contractions kept intact
# because the tokenizer only detaches leading/trailing punctuation.
DEFAULT_STOPWORDS = frozenset("""
i me my myself we our ours ourselves you you're you've you'll you'd your
yours yourself yourselves he him his himself she she's her hers herself it
it's its itself they them their theirs themselves what which who whom this
that that'll these those am is are was were be been being have has had
having do does did doing a an the and but if or because as until while of
at by for with about against between into through during before after above
below to from up down in out on off over under again further then once here
there when where why how all any both each few more most other some such no
nor not only own same so than too very s t can will just don don't should
should've now d ll m o re ve y ain aren aren't couldn couldn't didn didn't
doesn doesn't hadn hadn't hasn hasn't haven haven't isn isn't ma mightn
mightn't mustn mustn't needn needn't shan shan't shouldn shouldn't wasn
wasn't weren weren't won won't wouldn wouldn't
""".split())

TARGET_HYPOTHESIS = "hypothesis_only"
TARGET_BOTH = "hypothesis_and_dialogue"
TARGETS = (TARGET_HYPOTHESIS, TARGET_BOTH)


def load_stopwords(path) -> frozenset[str]:
    """Read a stopword list, one token per line; blanks ignored."""
    words = (line.strip().lower() for line in Path(path).read_text(encoding="utf-8").splitlines())
    return frozenset(w for w in words if w)


def load_lexicon(path) -> frozenset[str]:
    """Read an allowed-token lexicon, one token per line."""
    return load_stopwords(path)


@dataclass(frozen=True)
class AttackConfig:
    pct_words_to_swap: float = 0.9
    min_cos_sim: float = 0.3
    max_candidates: int = 100
    target: str = TARGET_HYPOTHESIS
    pos_lexicon: frozenset[str] | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.pct_words_to_swap <= 1.0:
            raise ValueError("pct_words_to_swap must be in [0, 1]")
        if not 0.0 <= self.min_cos_sim <= 1.0:
            raise ValueError("min_cos_sim must be in [0, 1]")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")


@dataclass(frozen=True)
class Swap:
    position: int
    original: str
    replacement: str
    cosine: float

    def __post_init__(self):
        if self.original == self.replacement:
            raise ValueError("replacement must differ from original")


@dataclass(frozen=True)
class AttackResult:
    example_id: str
    original_hypothesis: str
    perturbed_hypothesis: str
    swaps: tuple[Swap, ...]
    orig_pred: bool
    new_pred: bool
    queries: int
    success: bool

    def __post_init__(self):
        positions = [s.position for s in self.swaps]
        if len(positions) != len(set(positions)):
            raise ValueError("swap positions must be pairwise distinct")
        if self.queries < 1:
            raise ValueError("queries must be >= 1")
        if self.success != (self.new_pred != self.orig_pred):
            raise ValueError("success must equal (new_pred != orig_pred)")


# --------------------------------------------------------------------------
# Target segmentation
#
# The attack operates on one or more text segments: just the hypothesis, or
# every dialogue turn followed by the hypothesis. Token positions are global
# across segments in that order, so Swap.position on the default target is
# simply the hypothesis token index.

@dataclass
class _Segment:
    kind: str  # "dialogue" or "hypothesis"
    turn: int  # dialogue turn index, -1 for the hypothesis
    text: str
    tokens: list[Token] = field(default_factory=list)
    replacements: dict[int, str] = field(default_factory=dict)

    def current_text(self) -> str:
        return reconstruct(self.text, self.tokens, self.replacements)


def _segments(example: EntailmentExample, target: str) -> list[_Segment]:
    segs = []
    if target == TARGET_BOTH:
        segs.extend(_Segment("dialogue", i, t.text) for i, t in enumerate(example.dialogue))
    segs.append(_Segment("hypothesis", -1, example.hypothesis))
    for seg in segs:
        seg.tokens = tokenize(seg.text)
    return segs


def _flat_tokens(segs: list[_Segment]) -> tuple[list[Token], list[tuple[int, int]]]:
    tokens, where = [], []
    for si, seg in enumerate(segs):
        for li, tok in enumerate(seg.tokens):
            tokens.append(tok)
            where.append((si, li))
    return tokens, where


def _query_fn(victim: VictimInterface, example: EntailmentExample,
              segs: list[_Segment]) -> Callable[..., tuple[float, float]]:
    """Build a closure that queries the victim on the segments' current text.

    An override (segment index, local position, replacement) probes a
    tentative swap or deletion without committing it.
    """
    def query(override: tuple[int, int, str] | None = None) -> tuple[float, float]:
        texts = []
        for si, seg in enumerate(segs):
            if override is not None and override[0] == si:
                reps = dict(seg.replacements)
                reps[override[1]] = override[2]
                texts.append(reconstruct(seg.text, seg.tokens, reps))
            else:
                texts.append(seg.current_text())
        if segs[0].kind == "hypothesis":
            return victim.predict_proba(flatten_dialogue(example), texts[0])
        premise = "\n".join(f"{example.dialogue[seg.turn].speaker}: {texts[si]}"
                            for si, seg in enumerate(segs) if seg.kind == "dialogue")
        return victim.predict_proba(premise, texts[-1])

    return query


# --------------------------------------------------------------------------
# Attack steps

def modifiable_positions(tokens: list[Token], config: AttackConfig,
                         stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[int]:
    """Indices eligible for swapping: not stopword, punctuation, or numeric."""
    out = []
    for i, tok in enumerate(tokens):
        if tok.is_punct or tok.is_numeric or tok.text in stopwords:
            continue
        if config.pos_lexicon is not None and tok.text not in config.pos_lexicon:
            continue
        out.append(i)
    return out


def _deletion_scores(query, where, positions, orig_idx: int, p_orig: float) -> np.ndarray:
    scores = np.empty(len(positions))
    for k, pos in enumerate(positions):
        si, li = where[pos]
        p_del = query((si, li, ""))[orig_idx]
        scores[k] = p_orig - p_del
    return scores


def word_importance(victim: VictimInterface, example: EntailmentExample,
                    positions: list[int], target: str = TARGET_HYPOTHESIS) -> np.ndarray:
    """Leave-one-out importance: drop in p(orig_pred) when a token is deleted.

    Queries the victim len(positions) + 1 times.
    """
    segs = _segments(example, target)
    _, where = _flat_tokens(segs)
    query = _query_fn(victim, example, segs)
    p_false, p_true = query()
    orig_idx = 1 if p_true > p_false else 0
    return _deletion_scores(query, where, positions, orig_idx, max(p_false, p_true))


def attack_example(victim: VictimInterface, table: EmbeddingTable,
                   example: EntailmentExample, config: AttackConfig,
                   stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> AttackResult:
    result, _ = _attack_one(victim, table, example, config, stopwords)
    return result


def _attack_one(victim, table, example, config, stopwords
                ) -> tuple[AttackResult, EntailmentExample]:
    segs = _segments(example, config.target)
    tokens, where = _flat_tokens(segs)
    queries = 0

    base_query = _query_fn(victim, example, segs)

    def query(override=None):
        nonlocal queries
        queries += 1
        return base_query(override)

    p_false, p_true = query()
    orig_pred = p_true > p_false
    orig_idx = int(orig_pred)
    p_cur = (p_false, p_true)[orig_idx]
    new_pred = orig_pred

    positions = modifiable_positions(tokens, config, stopwords)
    budget = math.ceil(config.pct_words_to_swap * len(positions))
    swaps: list[Swap] = []

    if budget > 0:
        scores = _deletion_scores(query, where, positions, orig_idx, p_cur)
        rng = np.random.default_rng(config.seed)
        tie = rng.random(len(positions))
        order = np.lexsort((tie, -scores))

        for k in order:
            if len(swaps) >= budget or new_pred != orig_pred:
                break
            pos = positions[k]
            si, li = where[pos]
            word = tokens[pos].text
            try:
                candidates = nearest_synonyms(table, word, config.max_candidates,
                                              config.min_cos_sim)
            except UnknownTokenError:
                continue
            best = None
            for cand in candidates:
                probs = query((si, li, cand.token))
                if best is None or probs[orig_idx] < best[0][orig_idx]:
                    best = (probs, cand)
            if best is None or best[0][orig_idx] >= p_cur:
                continue
            probs, cand = best
            segs[si].replacements[li] = cand.token
            swaps.append(Swap(pos, word, cand.token, cand.cosine))
            p_cur = probs[orig_idx]
            new_pred = probs[1] > probs[0]

    hyp_seg = segs[-1]
    perturbed = EntailmentExample(
        id=example.id,
        dialogue=tuple(
            DialogueTurn(t.speaker, segs[i].current_text())
            for i, t in enumerate(example.dialogue)
        ) if config.target == TARGET_BOTH else example.dialogue,
        hypothesis=hyp_seg.current_text(),
        label=example.label,
    )
    result = AttackResult(
        example_id=example.id,
        original_hypothesis=example.hypothesis,
        perturbed_hypothesis=perturbed.hypothesis,
        swaps=tuple(swaps),
        orig_pred=orig_pred,
        new_pred=new_pred,
        queries=queries,
        success=new_pred != orig_pred,
    )
    return result, perturbed


def attack_dataset(victim: VictimInterface, table: EmbeddingTable, ds: Dataset,
                   config: AttackConfig,
                   stopwords: frozenset[str] = DEFAULT_STOPWORDS
                   ) -> tuple[list[AttackResult], Dataset]:
    """Attack every example; returns per-example results and the perturbed set.

    Each example gets its own seed derived from (config.seed, example.id), so
    results do not depend on example order.
    """
    results, perturbed = [], []
    for ex in ds.examples:
        cfg = replace(config, seed=derive_seed(config.seed, ex.id))
        res, pex = _attack_one(victim, table, ex, cfg, stopwords)
        results.append(res)
        perturbed.append(pex)
    return results, Dataset(name=f"{ds.name}-attacked", split=ds.split,
                            examples=tuple(perturbed))


# --------------------------------------------------------------------------
# Results serialization (JSON lines)

def result_to_dict(result: AttackResult) -> dict:
    return {
        "example_id": result.example_id,
        "original_hypothesis": result.original_hypothesis,
        "perturbed_hypothesis": result.perturbed_hypothesis,
        "swaps": [
            {"position": s.position, "original": s.original,
             "replacement": s.replacement, "cosine": s.cosine}
            for s in result.swaps
        ],
        "orig_pred": result.orig_pred,
        "new_pred": result.new_pred,
        "queries": result.queries,
        "success": result.success,
    }


def result_from_dict(data: dict) -> AttackResult:
    return AttackResult(
        example_id=data["example_id"],
        original_hypothesis=data["original_hypothesis"],
        perturbed_hypothesis=data["perturbed_hypothesis"],
        swaps=tuple(Swap(s["position"], s["original"], s["replacement"], s["cosine"])
                    for s in data["swaps"]),
        orig_pred=data["orig_pred"],
        new_pred=data["new_pred"],
        queries=data["queries"],
        success=data["success"],
    )


def save_results(results: Iterable[AttackResult], path) -> None:
    lines = [json.dumps(result_to_dict(r), ensure_ascii=False) for r in results]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_results(path) -> list[AttackResult]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(result_from_dict(json.loads(line)))
    return out
