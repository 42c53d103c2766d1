"""Entailment dataset types, JSON ingestion, synthetic generation, splitting."""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from . import words
from .tokenization import tokenize

if TYPE_CHECKING:
    from .embedding import EmbeddingTable

SPLITS = ("train", "dev", "test")


class DatasetFormatError(ValueError):
    """Raised when a dataset file violates the JSON schema."""


class VocabularyError(ValueError):
    """Raised when the vocabulary cannot fill the synthetic templates."""


@dataclass(frozen=True)
class DialogueTurn:
    speaker: str
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("turn text must be non-empty")


@dataclass(frozen=True)
class EntailmentExample:
    id: str
    dialogue: tuple[DialogueTurn, ...]
    hypothesis: str
    label: bool

    def __post_init__(self):
        if not self.dialogue:
            raise ValueError(f"example {self.id!r}: dialogue must have at least one turn")
        if not self.hypothesis.strip():
            raise ValueError(f"example {self.id!r}: hypothesis must be non-empty")
        object.__setattr__(self, "dialogue", tuple(self.dialogue))


@dataclass(frozen=True)
class Dataset:
    name: str
    split: str
    examples: tuple[EntailmentExample, ...]

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        object.__setattr__(self, "examples", tuple(self.examples))
        seen = set()
        for ex in self.examples:
            if ex.id in seen:
                raise DatasetFormatError(f"duplicate example id {ex.id!r}")
            seen.add(ex.id)

    def __len__(self) -> int:
        return len(self.examples)

    def ids(self) -> set[str]:
        return {ex.id for ex in self.examples}


def flatten_dialogue(example: EntailmentExample) -> str:
    """Join turns into one premise string, one 'speaker: text' line per turn."""
    return "\n".join(f"{t.speaker}: {t.text}" for t in example.dialogue)


# --------------------------------------------------------------------------
# JSON ingestion

def _expect(cond: bool, path: str, message: str):
    if not cond:
        raise DatasetFormatError(f"{path}: {message}")


def load_dataset(path) -> Dataset:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: not valid JSON ({exc})") from exc
    return dataset_from_dict(data)


def dataset_from_dict(data) -> Dataset:
    _expect(isinstance(data, dict), "$", "expected a JSON object")
    _expect(isinstance(data.get("name"), str), "name", "expected a string")
    _expect(data.get("split") in SPLITS, "split", f"expected one of {list(SPLITS)}")
    _expect(isinstance(data.get("examples"), list), "examples", "expected an array")
    examples = []
    seen_ids = set()
    for i, ex in enumerate(data["examples"]):
        p = f"examples[{i}]"
        _expect(isinstance(ex, dict), p, "expected an object")
        _expect(isinstance(ex.get("id"), str) and ex["id"] != "", f"{p}.id", "expected a non-empty string")
        if ex["id"] in seen_ids:
            raise DatasetFormatError(f"{p}.id: duplicate example id {ex['id']!r}")
        seen_ids.add(ex["id"])
        _expect(isinstance(ex.get("dialogue"), list) and len(ex["dialogue"]) >= 1,
                f"{p}.dialogue", "expected a non-empty array")
        turns = []
        for j, turn in enumerate(ex["dialogue"]):
            q = f"{p}.dialogue[{j}]"
            _expect(isinstance(turn, dict), q, "expected an object")
            _expect(isinstance(turn.get("speaker"), str), f"{q}.speaker", "expected a string")
            _expect(isinstance(turn.get("text"), str) and turn["text"].strip() != "",
                    f"{q}.text", "expected a non-empty string")
            turns.append(DialogueTurn(speaker=turn["speaker"], text=turn["text"]))
        _expect(isinstance(ex.get("hypothesis"), str) and ex["hypothesis"].strip() != "",
                f"{p}.hypothesis", "expected a non-empty string")
        _expect(isinstance(ex.get("label"), bool), f"{p}.label", "expected a boolean")
        examples.append(EntailmentExample(
            id=ex["id"], dialogue=tuple(turns), hypothesis=ex["hypothesis"], label=ex["label"]))
    return Dataset(name=data["name"], split=data["split"], examples=tuple(examples))


def dataset_to_dict(ds: Dataset) -> dict:
    return {
        "name": ds.name,
        "split": ds.split,
        "examples": [
            {
                "id": ex.id,
                "dialogue": [{"speaker": t.speaker, "text": t.text} for t in ex.dialogue],
                "hypothesis": ex.hypothesis,
                "label": ex.label,
            }
            for ex in ds.examples
        ],
    }


def save_dataset(ds: Dataset, path) -> None:
    """Write canonical JSON: 2-space indent, UTF-8, trailing newline."""
    text = json.dumps(dataset_to_dict(ds), ensure_ascii=False, indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# Synthetic generation

_DIALOGUE_SHAPES = [
    [("A", "the {noun} was {adj1} and {adv} {adj2}."),
     ("B", "so i {verb} it because it was {adj3}.")],
    [("A", "we {verb} the {noun} again."),
     ("B", "it was {adv} {adj1} and then {adj2}."),
     ("A", "but it was {adj3} too.")],
    [("A", "that {noun} was {adj1}."),
     ("B", "i {verb} it because it was {adv} {adj2}."),
     ("A", "it was {adj3} for me.")],
]

_POSITIVE_TEMPLATES = [
    "the {noun} was {adj1}",
    "the {noun} was {adv} {adj2}",
    "they {verb} the {adj1} {noun}",
    "the {noun} was {adj1} and {adj3}",
]

# Negatives: negation insertion, or substitution with an out-of-dialogue word.
_NEGATIVE_TEMPLATES = [
    "the {noun} was not {adj1}",
    "the {alien_noun} was {adj1}",
    "the {noun} was {alien_adj}",
    "the {noun} was not {adv} {adj2}",
    "they {verb} the {alien_noun}",
]


def _available_heads(families: dict[str, list[str]], vocab) -> list[str]:
    return [head for head in families if head in vocab]


def generate_synthetic(n_per_class: int, seed: int, vocab: "EmbeddingTable") -> Dataset:
    """Build a balanced synthetic entailment dataset from templates.

    Positives recombine words from their own dialogue, giving majority token
    overlap; negatives insert a negation or substitute an out-of-dialogue
    word. Deterministic given the seed.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    nouns = _available_heads(words.NOUN_FAMILIES, vocab)
    adjs = _available_heads(words.ADJECTIVE_FAMILIES, vocab)
    advs = _available_heads(words.ADVERB_FAMILIES, vocab)
    verbs = _available_heads(words.VERB_FAMILIES, vocab)
    if len(nouns) < 2 or len(adjs) < 4 or len(advs) < 1 or len(verbs) < 1:
        raise VocabularyError(
            "vocabulary too small to fill templates: need >=2 noun, >=4 adjective, "
            f">=1 adverb and >=1 verb heads, got {len(nouns)}/{len(adjs)}/{len(advs)}/{len(verbs)}")

    rng = np.random.default_rng(seed)

    def pick(pool, k=1, exclude=()):
        avail = [w for w in pool if w not in exclude]
        idx = rng.choice(len(avail), size=k, replace=False)
        return [avail[i] for i in idx]

    examples = []
    for pair in range(n_per_class):
        for label in (True, False):
            noun = pick(nouns)[0]
            adj1, adj2, adj3 = pick(adjs, 3)
            adv = pick(advs)[0]
            verb = pick(verbs)[0]
            slots = {"noun": noun, "adj1": adj1, "adj2": adj2, "adj3": adj3,
                     "adv": adv, "verb": verb}
            shape = _DIALOGUE_SHAPES[rng.integers(len(_DIALOGUE_SHAPES))]
            turns = tuple(DialogueTurn(speaker=s, text=t.format(**slots)) for s, t in shape)
            if label:
                template = _POSITIVE_TEMPLATES[rng.integers(len(_POSITIVE_TEMPLATES))]
                hypothesis = template.format(**slots)
            else:
                template = _NEGATIVE_TEMPLATES[rng.integers(len(_NEGATIVE_TEMPLATES))]
                hypothesis = template.format(
                    alien_noun=pick(nouns, exclude=[noun])[0],
                    alien_adj=pick(adjs, exclude=[adj1, adj2, adj3])[0],
                    **slots)
            idx = 2 * pair + (0 if label else 1)
            example = EntailmentExample(
                id=f"syn-{idx:05d}", dialogue=turns, hypothesis=hypothesis, label=label)
            if label:
                assert _overlap_ratio(example) > 0.5
            examples.append(example)
    return Dataset(name=f"synthetic-{seed}", split="train", examples=tuple(examples))


def _overlap_ratio(example: EntailmentExample) -> float:
    dialogue_tokens = {t.text for turn in example.dialogue for t in tokenize(turn.text)}
    hyp_tokens = [t.text for t in tokenize(example.hypothesis)]
    hits = sum(1 for t in hyp_tokens if t in dialogue_tokens)
    return hits / len(hyp_tokens)


# --------------------------------------------------------------------------
# Splitting

def split_dataset(ds: Dataset, fractions: tuple[float, float, float], seed: int
                  ) -> tuple[Dataset, Dataset, Dataset]:
    """Partition into train/dev/test; rounding remainder goes to train."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("fractions must be three positive numbers")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    n = len(ds.examples)
    n_dev = round(fractions[1] * n)
    n_test = round(fractions[2] * n)
    n_train = n - n_dev - n_test
    if n_train < 0:
        raise ValueError("fractions round to more examples than available")
    perm = np.random.default_rng(seed).permutation(n)
    chunks = (perm[:n_train], perm[n_train:n_train + n_dev], perm[n_train + n_dev:])
    out = []
    for split, idxs in zip(SPLITS, chunks):
        exs = tuple(ds.examples[i] for i in idxs)
        out.append(Dataset(name=ds.name, split=split, examples=exs))
    return tuple(out)
