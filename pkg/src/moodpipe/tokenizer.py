"""Text normalization and greedy longest-match subword segmentation.

The vocabulary holds five special pieces on fixed ids 0-4, every single
character seen in the corpus, and the most frequent whole words. Segmentation
walks each word left to right taking the longest matching piece; continuation
pieces carry the "##" prefix.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

SPECIAL_PIECES = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
PAD_ID, UNK_ID, CLS_ID, SEP_ID, MASK_ID = range(5)
CONTINUATION = "##"


class VocabularyError(ValueError):
    """Invalid vocabulary contents or construction parameters."""


@dataclass
class SubwordVocabulary:
    pieces: list[str]
    index_of: dict[str, int] = field(repr=False)

    @classmethod
    def from_pieces(cls, pieces: Iterable[str]) -> "SubwordVocabulary":
        pieces = list(pieces)
        if tuple(pieces[:5]) != SPECIAL_PIECES:
            raise VocabularyError(f"vocabulary must start with {SPECIAL_PIECES}")
        index = {piece: i for i, piece in enumerate(pieces)}
        if len(index) != len(pieces):
            raise VocabularyError("vocabulary contains duplicate pieces")
        return cls(pieces, index)

    def __len__(self) -> int:
        return len(self.pieces)


@dataclass(frozen=True)
class TokenSequence:
    """Fixed-length token ids with the pieces and attention mask alongside."""

    ids: tuple[int, ...]
    pieces: tuple[str, ...]
    attention_mask: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.ids)


def normalize(text: str) -> str:
    """Lowercase, isolate punctuation, drop controls, collapse whitespace."""
    out: list[str] = []
    for ch in text.lower():
        if ch.isspace():
            out.append(" ")
        elif unicodedata.category(ch) == "Cc":
            continue
        elif unicodedata.category(ch).startswith("P"):
            out.append(f" {ch} ")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def build_vocab(corpus: Iterable[str], max_size: int, min_freq: int) -> SubwordVocabulary:
    """Build a vocabulary from normalized texts.

    Specials come first, then every observed single character (word-initial
    and "##"-continuation forms), then whole words with count >= min_freq
    ranked by descending frequency, until max_size pieces. Ties break
    lexicographically.
    """
    word_counts: Counter[str] = Counter()
    for text in corpus:
        word_counts.update(text.split())

    alphabet: set[str] = set()
    for word in word_counts:
        alphabet.add(word[0])
        for ch in word[1:]:
            alphabet.add(CONTINUATION + ch)

    if max_size < len(SPECIAL_PIECES) + len(alphabet):
        raise VocabularyError(
            f"max_size {max_size} cannot hold {len(SPECIAL_PIECES)} specials "
            f"plus {len(alphabet)} alphabet pieces"
        )

    pieces = list(SPECIAL_PIECES)
    pieces.extend(sorted(alphabet))
    seen = set(pieces)
    ranked = sorted(word_counts.items(), key=lambda item: (-item[1], item[0]))
    for word, count in ranked:
        if len(pieces) >= max_size:
            break
        if count < min_freq or word in seen:
            continue
        pieces.append(word)
        seen.add(word)
    return SubwordVocabulary.from_pieces(pieces)


def _segment_word(word: str, vocab: SubwordVocabulary) -> list[str] | None:
    """Greedy longest-match split of one word; None if not fully coverable."""
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while end > start:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION + piece
            if piece in vocab.index_of:
                found = piece
                break
            end -= 1
        if found is None:
            return None
        pieces.append(found)
        start = end
    return pieces


def tokenize(text: str, vocab: SubwordVocabulary, max_len: int) -> TokenSequence:
    """Normalize, segment, wrap with [CLS]/[SEP], truncate and pad to max_len."""
    if max_len < 3:
        raise ValueError(f"max_len must be at least 3, got {max_len}")
    content: list[str] = []
    for word in normalize(text).split():
        segmented = _segment_word(word, vocab)
        content.extend(segmented if segmented is not None else [SPECIAL_PIECES[UNK_ID]])
    # Keep the head, drop the tail; [CLS]/[SEP] always survive.
    content = content[: max_len - 2]
    pieces = [SPECIAL_PIECES[CLS_ID], *content, SPECIAL_PIECES[SEP_ID]]
    mask = [1] * len(pieces)
    while len(pieces) < max_len:
        pieces.append(SPECIAL_PIECES[PAD_ID])
        mask.append(0)
    ids = [vocab.index_of[p] for p in pieces]
    return TokenSequence(tuple(ids), tuple(pieces), tuple(mask))


def save_vocab(vocab: SubwordVocabulary, path: str | Path) -> None:
    """Write one piece per line; the line number is the id."""
    Path(path).write_text("".join(p + "\n" for p in vocab.pieces), encoding="utf-8")


def load_vocab(path: str | Path) -> SubwordVocabulary:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return SubwordVocabulary.from_pieces(lines)
