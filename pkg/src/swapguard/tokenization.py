"""Whitespace tokenizer with spans for lossless reconstruction.

Tokens are lowercased for matching; spans index into the original string so
that untouched positions keep their original casing and spacing exactly.
"""

import re
import unicodedata
from dataclasses import dataclass
from typing import Mapping

_CHUNK = re.compile(r"\S+")
_NUMERIC = re.compile(r"\d[\d.,]*")


@dataclass(frozen=True)
class Token:
    text: str  # lowercased
    start: int
    end: int

    @property
    def is_punct(self) -> bool:
        return all(_is_punct_char(c) for c in self.text)

    @property
    def is_numeric(self) -> bool:
        return _NUMERIC.fullmatch(self.text) is not None


def _is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[Token]:
    """Split on Unicode whitespace; detach leading/trailing punctuation chars."""
    tokens: list[Token] = []
    for m in _CHUNK.finditer(text):
        chunk = m.group()
        base = m.start()
        i, j = 0, len(chunk)
        while i < j and _is_punct_char(chunk[i]):
            i += 1
        while j > i and _is_punct_char(chunk[j - 1]):
            j -= 1
        for k in range(i):
            tokens.append(Token(chunk[k], base + k, base + k + 1))
        if i < j:
            tokens.append(Token(chunk[i:j].lower(), base + i, base + j))
        for k in range(j, len(chunk)):
            tokens.append(Token(chunk[k], base + k, base + k + 1))
    return tokens


def reconstruct(text: str, tokens: list[Token], replacements: Mapping[int, str] | None = None) -> str:
    """Rebuild ``text`` with tokens at the given positions replaced.

    With no replacements the original string is returned unchanged, whitespace
    and casing included.
    """
    if not replacements:
        return text
    for pos in replacements:
        if not 0 <= pos < len(tokens):
            raise IndexError(f"token position {pos} out of range")
    parts = []
    cursor = 0
    for pos, tok in enumerate(tokens):
        if pos in replacements:
            parts.append(text[cursor:tok.start])
            parts.append(replacements[pos])
            cursor = tok.end
    parts.append(text[cursor:])
    return "".join(parts)
