"""Sentence segmentation, tokenization and gazetteer entity detection."""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

from resco.embedding_store import VectorStore
from resco.errors import DegenerateDocumentError, ResCoError

SegmentMode = Literal["auto", "pre-segmented"]

ABBREVIATIONS = frozenset({"dr.", "mr.", "mrs.", "ms.", "st.", "e.g.", "i.e.", "u.s.", "vs."})

DEFAULT_MAX_SPAN = 4

# terminator, optional closing quotes/brackets, whitespace, then an upper-case
# letter or digit (possibly behind an opening quote/bracket)
_BOUNDARY = re.compile(r"""[.!?]["'”’)\]]*(?=\s+["'“‘(\[]*[^\W\d_a-z]|\s+["'“‘(\[]*\d)""", re.UNICODE)
_TOKEN = re.compile(r"[^\W_]+(?:(?:-|'|’|(?<=\d)[.,](?=\d))[^\W_]+)*", re.UNICODE)
_DIGIT_COMMA = re.compile(r"(?<=\d),(?=\d)")
_SPACE = re.compile(r"\s+")


class EmptyDocumentError(ResCoError, ValueError):
    """Segmentation produced no sentences."""


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    tokens: tuple[str, ...]
    entities: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self):
        if not self.sentences:
            raise EmptyDocumentError(f"document {self.id!r} has no sentences")
        for i, s in enumerate(self.sentences):
            if s.index != i:
                raise ValueError(f"sentence indices must be 0..n-1 in order, got {s.index} at {i}")

    @property
    def n(self) -> int:
        return len(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def require_multi(self) -> None:
        if self.n < 2:
            raise DegenerateDocumentError(f"document {self.id!r} has a single sentence")


def tokenize(text: str) -> list[str]:
    """Lower-case word tokens with surrounding punctuation removed.

    Hyphenated and apostrophised words stay whole, and thousands separators
    inside numbers are dropped::

        >>> tokenize("1,000 species!")
        ['1000', 'species']
    """
    return [_DIGIT_COMMA.sub("", m.group()) for m in _TOKEN.finditer(text.casefold())]


def _split_auto(text: str) -> list[str]:
    pieces: list[str] = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        end = m.end()
        last_word = text[start:end].rsplit(None, 1)[-1].casefold() if text[start:end].strip() else ""
        if last_word.rstrip("\"'”’)]") in ABBREVIATIONS:
            continue
        pieces.append(text[start:end])
        start = end
    pieces.append(text[start:])
    return pieces


def segment(raw_text: str, mode: SegmentMode = "auto", doc_id: str = "doc") -> Document:
    """Split an article into sentences.

    ``pre-segmented`` treats each non-blank line as one sentence. ``auto``
    splits after ``.``, ``!`` or ``?`` when whitespace and an upper-case
    letter or digit follow, except after a fixed list of abbreviations.
    Whitespace inside each sentence is collapsed to single spaces, so
    rejoining the sentences with newlines and re-segmenting in
    ``pre-segmented`` mode is the identity.

    Raises:
        EmptyDocumentError: nothing but whitespace in ``raw_text``.
    """
    if not raw_text.strip():
        raise EmptyDocumentError(f"document {doc_id!r} is empty")
    if mode == "pre-segmented":
        pieces = raw_text.splitlines()
    elif mode == "auto":
        pieces = _split_auto(raw_text)
    else:
        raise ValueError(f"unknown segmentation mode {mode!r}")
    texts = [_SPACE.sub(" ", p).strip() for p in pieces]
    texts = [t for t in texts if t]
    sentences = tuple(Sentence(i, t, tuple(tokenize(t))) for i, t in enumerate(texts))
    return Document(doc_id, sentences)


@functools.lru_cache(maxsize=8)
def _surface_index(store: VectorStore) -> dict[tuple[str, ...], str]:
    """Token-tuple surface form -> store key, first key winning on clashes."""
    index: dict[tuple[str, ...], str] = {}
    for key in store.keys():
        surface = tuple(tokenize(key))
        if surface and surface not in index:
            index[surface] = key
    return index


def detect_entities(
    sentence: Sentence | Sequence[str],
    entity_store: VectorStore,
    max_span: int = DEFAULT_MAX_SPAN,
) -> frozenset[str]:
    """Match entity-store surface forms against a sentence's tokens.

    Scans left to right taking the longest n-gram (``n <= max_span``) found in
    the store and skipping past it, so matched spans never overlap. Store keys
    are compared after running them through :func:`tokenize`, which lets
    ``"U.S."`` in a sentence meet an entity keyed ``"u.s."``.
    """
    if max_span < 1:
        raise ValueError("max_span must be >= 1")
    tokens = sentence.tokens if isinstance(sentence, Sentence) else tuple(sentence)
    if not len(entity_store):
        return frozenset()
    index = _surface_index(entity_store)
    found = set()
    i, n = 0, len(tokens)
    while i < n:
        for span in range(min(max_span, n - i), 0, -1):
            key = index.get(tuple(tokens[i:i + span]))
            if key is not None:
                found.add(key)
                i += span
                break
        else:
            i += 1
    return frozenset(found)


def attach_entities(doc: Document, entity_store: VectorStore, max_span: int = DEFAULT_MAX_SPAN) -> Document:
    sentences = tuple(replace(s, entities=detect_entities(s, entity_store, max_span)) for s in doc)
    return Document(doc.id, sentences)


def build_document(
    raw_text: str,
    doc_id: str = "doc",
    *,
    mode: SegmentMode = "auto",
    entity_store: VectorStore | None = None,
    max_span: int = DEFAULT_MAX_SPAN,
) -> Document:
    """Segment ``raw_text`` and, given an entity store, resolve mentions."""
    doc = segment(raw_text, mode, doc_id)
    if entity_store is not None:
        doc = attach_entities(doc, entity_store, max_span)
    return doc
