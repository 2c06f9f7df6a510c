"""
corpus.py

Segment ingestion, vocabulary building and bag-of-ids encoding.

Input files hold one JSON record per line, either pre-lemmatized
(``{"id": ..., "tokens": [...]}``) or raw (``{"id": ..., "text": ...}``).
Raw text goes through a whitespace/lowercase fallback tokenizer; real
lemmatization and POS filtering are expected to happen upstream.
"""
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "CorpusFormatError", "Segment", "Vocabulary", "EncodedCorpus",
    "tokenize", "read_segments", "read_stopwords", "encode_segments",
    "ingest", "keyword_lookup", "save_corpus", "load_corpus",
]

CORPUS_FORMAT_VERSION = 1

_TOKEN_RE = re.compile(r"[^\W\d_]+(?:['’-][^\W\d_]+)*", re.UNICODE)


class CorpusFormatError(ValueError):
    """Raised on malformed corpus, stopword or encoded-corpus files."""


@dataclass(frozen=True)
class Segment:
    id: str
    tokens: tuple


class Vocabulary:
    """Bijection between terms and contiguous integer ids."""

    def __init__(self, terms):
        self.terms = tuple(terms)
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise ValueError("vocabulary terms must be distinct")

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def encode(self, term):
        return self.index[term]

    def decode(self, token_id):
        return self.terms[token_id]

    def __repr__(self):
        return f"Vocabulary(V={len(self.terms)})"


@dataclass(frozen=True, eq=False)
class EncodedCorpus:
    """Segments as bags of token ids against one vocabulary.

    ``segments`` is a tuple of ``(segment_id, int32 array)`` pairs in file
    order. Segments emptied by filtering stay in the corpus so that lookups
    over annotated segments remain total; they are skipped for training.
    ``filtered`` counts how many raw tokens were removed and why.
    """
    vocabulary: Vocabulary
    segments: tuple
    filtered: dict = field(default_factory=dict)

    def __post_init__(self):
        V = len(self.vocabulary)
        seen = set()
        for sid, ids in self.segments:
            if sid in seen:
                raise CorpusFormatError(f"duplicate segment id {sid!r}")
            seen.add(sid)
            if len(ids) and (ids.min() < 0 or ids.max() >= V):
                raise ValueError(f"segment {sid!r} has token ids outside [0, {V})")
            ids.setflags(write=False)

    @property
    def M(self):
        return len(self.segments)

    @property
    def V(self):
        return len(self.vocabulary)

    @property
    def segment_ids(self):
        return [sid for sid, _ in self.segments]

    @property
    def n_tokens(self):
        return int(sum(len(ids) for _, ids in self.segments))

    def lengths(self):
        return np.array([len(ids) for _, ids in self.segments], dtype=np.int64)

    def nonempty(self):
        """Return a corpus restricted to segments with at least one token."""
        kept = tuple((sid, ids) for sid, ids in self.segments if len(ids))
        return EncodedCorpus(self.vocabulary, kept, dict(self.filtered))

    def tokens_of(self, segment_id):
        return self._by_id()[segment_id]

    def terms_of(self, segment_id):
        return [self.vocabulary.terms[i] for i in self._by_id()[segment_id]]

    def has_term(self, segment_id, term):
        """True when ``term`` is a retained token of the segment (unknown
        segments and out-of-vocabulary terms give False)."""
        ids = self._by_id().get(segment_id)
        tid = self.vocabulary.index.get(term)
        return ids is not None and tid is not None and bool(np.any(ids == tid))

    def _by_id(self):
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = {sid: ids for sid, ids in self.segments}
            object.__setattr__(self, "_index_cache", cache)
        return cache

    def term_frequencies(self):
        counts = np.zeros(self.V, dtype=np.int64)
        for _, ids in self.segments:
            np.add.at(counts, ids, 1)
        return counts


def tokenize(text):
    """Fallback tokenizer for raw text: lowercase alphabetic runs."""
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def read_segments(path):
    """Parse a corpus file into a list of :class:`Segment`.

    Every line must be a JSON object of the same kind (all ``tokens`` or all
    ``text``). Blank lines are ignored.
    """
    path = Path(path)
    segments = []
    kind = None
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or not isinstance(rec.get("id"), str):
                raise CorpusFormatError(f"{path}:{lineno}: record needs a string 'id'")
            has_tokens, has_text = "tokens" in rec, "text" in rec
            if has_tokens == has_text:
                raise CorpusFormatError(
                    f"{path}:{lineno}: record needs exactly one of 'tokens' or 'text'")
            this_kind = "tokens" if has_tokens else "text"
            if kind is None:
                kind = this_kind
            elif kind != this_kind:
                raise CorpusFormatError(
                    f"{path}:{lineno}: mixed file ('{this_kind}' record after '{kind}' records)")
            sid = rec["id"]
            if sid in seen:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate segment id {sid!r}")
            seen.add(sid)
            if has_tokens:
                toks = rec["tokens"]
                if not isinstance(toks, list) or not all(isinstance(t, str) for t in toks):
                    raise CorpusFormatError(f"{path}:{lineno}: 'tokens' must be a list of strings")
                toks = [t.lower() for t in toks if t.strip()]
            else:
                if not isinstance(rec["text"], str):
                    raise CorpusFormatError(f"{path}:{lineno}: 'text' must be a string")
                toks = tokenize(rec["text"])
            segments.append(Segment(sid, tuple(toks)))
    return segments


def read_stopwords(path):
    words = set()
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip().lower()
            if line:
                words.add(line)
    return words


def encode_segments(segments, stopwords=(), min_df=1):
    """Filter tokens and encode segments against a freshly built vocabulary.

    Terms are ordered by first occurrence so that ids are stable for a
    given input order.
    """
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    stop = {w.lower() for w in stopwords}
    n_stop = 0
    kept = []
    for seg in segments:
        toks = [t for t in seg.tokens if t not in stop]
        n_stop += len(seg.tokens) - len(toks)
        kept.append(toks)

    df = Counter()
    for toks in kept:
        df.update(set(toks))
    order = {}
    for toks in kept:
        for t in toks:
            if t not in order and df[t] >= min_df:
                order[t] = len(order)
    vocab = Vocabulary(order)

    n_rare = 0
    encoded = []
    for seg, toks in zip(segments, kept):
        ids = [order[t] for t in toks if t in order]
        n_rare += len(toks) - len(ids)
        encoded.append((seg.id, np.asarray(ids, dtype=np.int32)))
    filtered = {"stopword": n_stop, "min_df": n_rare}
    return EncodedCorpus(vocab, tuple(encoded), filtered)


def ingest(path, stopwords=(), min_df=1):
    """Read a corpus file and return the filtered, encoded corpus."""
    return encode_segments(read_segments(path), stopwords, min_df)


def keyword_lookup(corpus, word):
    """Token id of ``word`` or ``None`` when it did not survive preprocessing."""
    return corpus.vocabulary.index.get(word.lower())


def corpus_to_dict(corpus):
    return {
        "version": CORPUS_FORMAT_VERSION,
        "vocabulary": list(corpus.vocabulary.terms),
        "segments": [{"id": sid, "tokens": ids.tolist()} for sid, ids in corpus.segments],
        "filtered": dict(sorted(corpus.filtered.items())),
    }


def corpus_from_dict(data):
    try:
        if data.get("version") != CORPUS_FORMAT_VERSION:
            raise CorpusFormatError(f"unsupported corpus version {data.get('version')!r}")
        vocab = Vocabulary(data["vocabulary"])
        segs = tuple((s["id"], np.asarray(s["tokens"], dtype=np.int32))
                     for s in data["segments"])
        return EncodedCorpus(vocab, segs, dict(data.get("filtered", {})))
    except (KeyError, TypeError, AttributeError) as exc:
        raise CorpusFormatError(f"malformed encoded corpus: {exc}") from None


def save_corpus(corpus, path, provenance=None):
    data = corpus_to_dict(corpus)
    if provenance is not None:
        data = {"provenance": provenance, **data}
    Path(path).write_text(json.dumps(data, ensure_ascii=False, sort_keys=False) + "\n",
                          encoding="utf-8")


def load_corpus(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path}: not a valid encoded corpus ({exc.msg})") from None
    if not isinstance(data, dict):
        raise CorpusFormatError(f"{path}: not a valid encoded corpus")
    return corpus_from_dict(data)
