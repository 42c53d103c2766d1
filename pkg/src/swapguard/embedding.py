"""Static word embeddings: loading, cosine similarity, synonym retrieval."""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import words


class EmbeddingFormatError(ValueError):
    """Raised when an embedding file is malformed."""


class UnknownTokenError(KeyError):
    """Query token not in the table. Attackers treat this as 'skip position'."""


class EmbeddingTable:
    """Immutable vocabulary + dense vector matrix with precomputed norms."""

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray):
        vectors = np.ascontiguousarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise EmbeddingFormatError(
                f"expected a {len(tokens)} x d matrix, got shape {vectors.shape}")
        if vectors.shape[1] < 1:
            raise EmbeddingFormatError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(vectors)):
            raise EmbeddingFormatError("embedding vectors must be finite")
        self.tokens: list[str] = list(tokens)
        self._index: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            if tok in self._index:
                raise EmbeddingFormatError(f"duplicate token {tok!r}")
            self._index[tok] = i
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0.0):
            bad = self.tokens[int(np.argmin(norms))]
            raise EmbeddingFormatError(f"zero vector for token {bad!r}")
        self.vectors = vectors
        self.norms = norms
        self._unit = vectors / norms[:, None]
        for arr in (self.vectors, self.norms, self._unit):
            arr.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise UnknownTokenError(token) from None

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.index(token)]


@dataclass(frozen=True)
class SynonymCandidate:
    token: str
    cosine: float


def load_embeddings(path) -> EmbeddingTable:
    """Parse the text format: optional 'V d' header, then 'token v1 .. vd' lines."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    start = 0
    if lines:
        head = lines[0].split()
        if len(head) == 2:
            try:
                int(head[0]), int(head[1])
                start = 1
            except ValueError:
                pass
    tokens: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dim: int | None = None
    for lineno in range(start, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        fields = line.split()
        token, values = fields[0], fields[1:]
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise EmbeddingFormatError(f"line {lineno + 1}: no vector components")
        elif len(values) != dim:
            raise EmbeddingFormatError(
                f"line {lineno + 1}: expected {dim} components, got {len(values)}")
        if token in seen:
            raise EmbeddingFormatError(f"line {lineno + 1}: duplicate token {token!r}")
        seen.add(token)
        try:
            row = [float(v) for v in values]
        except ValueError as exc:
            raise EmbeddingFormatError(f"line {lineno + 1}: bad float ({exc})") from exc
        if not all(math.isfinite(v) for v in row):
            raise EmbeddingFormatError(f"line {lineno + 1}: non-finite value")
        tokens.append(token)
        rows.append(row)
    if not tokens:
        raise EmbeddingFormatError(f"{path}: no embedding entries")
    return EmbeddingTable(tokens, np.array(rows, dtype=np.float64))


def save_embeddings(table: EmbeddingTable, path) -> None:
    out = [f"{len(table)} {table.dim}"]
    for tok, row in zip(table.tokens, table.vectors):
        out.append(tok + " " + " ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm input")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def nearest_synonyms(table: EmbeddingTable, token: str, max_candidates: int,
                     min_cos_sim: float) -> list[SynonymCandidate]:
    """Top neighbors by cosine, threshold-filtered, query token excluded.

    Sorted by cosine descending, ties broken lexicographically.
    """
    if max_candidates < 1:
        raise ValueError("max_candidates must be >= 1")
    if not 0.0 <= min_cos_sim <= 1.0:
        raise ValueError("min_cos_sim must be in [0, 1]")
    qi = table.index(token)  # raises UnknownTokenError
    cos = np.clip(table._unit @ table._unit[qi], -1.0, 1.0)
    hits = [SynonymCandidate(table.tokens[i], float(cos[i]))
            for i in np.flatnonzero(cos >= min_cos_sim) if i != qi]
    hits.sort(key=lambda c: (-c.cosine, c.token))
    return hits[:max_candidates]


# --------------------------------------------------------------------------
# Synthetic table for the desk-scale benchmark

# Angles (degrees) of the k-th family member relative to the canonical word.
# Cosines: 0.94, 0.82, 0.64, 0.47, 0.31 -- spread so min_cos_sim thresholds
# of 0.9 / 0.6 / 0.3 admit 1 / 3 / 5 candidates per canonical word.
MEMBER_ANGLES_DEG = (20.0, 35.0, 50.0, 62.0, 72.0)


def synthetic_table(dim: int = 50, seed: int = 0, scale: float = 7.0) -> EmbeddingTable:
    """Toy embedding table over the built-in vocabulary.

    Each family occupies its own 2D plane spanned by two orthonormal basis
    columns: the canonical word sits on the first axis and the k-th member is
    rotated in-plane by MEMBER_ANGLES_DEG[k]. Planes are mutually orthogonal,
    so cross-family cosines are exactly zero while canonical-to-member
    cosines follow the fixed angle ladder. All vectors share the same norm
    (``scale``), so cosine structure is independent of scale.
    """
    families = words.ALL_FAMILIES
    axes_needed = sum(2 if members else 1 for members in families.values())
    if dim < axes_needed:
        raise ValueError(
            f"dim must be >= {axes_needed} to give each family its own plane")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    axis = 0
    for head, members in families.items():
        base = basis[:, axis]
        axis += 1
        tokens.append(head)
        rows.append(scale * base)
        if members:
            ortho = basis[:, axis]
            axis += 1
            for k, member in enumerate(members):
                theta = math.radians(MEMBER_ANGLES_DEG[k % len(MEMBER_ANGLES_DEG)])
                tokens.append(member)
                rows.append(scale * (math.cos(theta) * base + math.sin(theta) * ortho))
    return EmbeddingTable(tokens, np.vstack(rows))
