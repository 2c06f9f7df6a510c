"""
evaluate.py

Gold standards from rating-step annotations, precision/recall/F1, Gwet's AC1
with a seeded permutation p-value, reuse rate of annotation tags and the
keyword-present / keyword-absent analysis split.
"""
import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "AnnotationFormatError", "DegenerateAgreementError", "UndefinedRateError",
    "RatingRecord", "GoldStandard", "ContingencyTable", "PRF",
    "read_ratings", "read_tags", "build_gold", "prf", "gwet_ac1", "ac1_pvalue",
    "cohen_kappa", "contingency", "reuse_rate", "split_by_keyword",
    "format_report", "report_csv",
]

RATING_FIELDS = ("segment_id", "concept", "rater_id", "rating", "rater_group")
TAG_FIELDS = ("segment_id", "concept", "rater_id")


class AnnotationFormatError(ValueError):
    pass


class DegenerateAgreementError(ArithmeticError):
    """Agreement statistic or its test is undefined for this table."""


class UndefinedRateError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RatingRecord:
    segment_id: str
    concept: str
    rater_id: str
    rating: object
    rater_group: str = ""

    def __post_init__(self):
        r = self.rating
        if isinstance(r, bool):
            return
        if r in ("present", "absent"):
            object.__setattr__(self, "rating", r == "present")
        elif isinstance(r, (int, np.integer)) and 1 <= r <= 4:
            object.__setattr__(self, "rating", int(r))
        else:
            raise ValueError(f"rating must be 1..4, present or absent, got {r!r}")

    @property
    def present(self):
        """Rating 1 means absent; 2, 3 and 4 all count as present."""
        if isinstance(self.rating, bool):
            return self.rating
        return self.rating >= 2


def _read_csv(path, fields):
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = tuple(h.strip() for h in (reader.fieldnames or ()))
        missing = [f for f in fields if f not in header]
        if missing:
            raise AnnotationFormatError(f"{path}: missing columns {', '.join(missing)}")
        for lineno, row in enumerate(reader, start=2):
            row = {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}
            if any(not row.get(f) for f in fields if f != "rater_group"):
                raise AnnotationFormatError(f"{path}:{lineno}: empty required field")
            yield lineno, row


def read_ratings(path):
    """Rating-step CSV: ``segment_id,concept,rater_id,rating,rater_group``."""
    records = []
    seen = set()
    for lineno, row in _read_csv(path, RATING_FIELDS):
        raw = row["rating"].lower()
        rating = raw if raw in ("present", "absent") else None
        if rating is None:
            try:
                rating = int(raw)
            except ValueError:
                raise AnnotationFormatError(f"{path}:{lineno}: bad rating {row['rating']!r}") \
                    from None
        try:
            rec = RatingRecord(row["segment_id"], row["concept"].lower(), row["rater_id"],
                               rating, row.get("rater_group", ""))
        except ValueError as exc:
            raise AnnotationFormatError(f"{path}:{lineno}: {exc}") from None
        key = (rec.segment_id, rec.concept, rec.rater_id)
        if key in seen:
            raise AnnotationFormatError(f"{path}:{lineno}: duplicate rating for {key}")
        seen.add(key)
        records.append(rec)
    return records


def read_tags(path):
    """Tagging-step CSV: ``segment_id,concept,rater_id`` -> (segment, tag) list."""
    return [(row["segment_id"], row["concept"]) for _, row in _read_csv(path, TAG_FIELDS)]


class GoldStandard:
    """Binary presence per declared (segment, concept) pair."""

    def __init__(self, labels):
        self.labels = dict(labels)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(sorted(self.labels))

    def __getitem__(self, pair):
        return self.labels[pair]

    def __contains__(self, pair):
        return pair in self.labels

    @property
    def pairs(self):
        return set(self.labels)

    def present(self):
        return {p for p, v in self.labels.items() if v}

    @property
    def concepts(self):
        return sorted({c for _, c in self.labels})

    def restrict(self, keep):
        """Sub-standard over pairs for which ``keep(pair)`` is true."""
        return GoldStandard({p: v for p, v in self.labels.items() if keep(p)})


_AGGREGATIONS = {
    "majority": lambda k, n: 2 * k >= n,
    "any": lambda k, n: k >= 1,
    "all": lambda k, n: k == n,
}


def build_gold(records, aggregation="majority"):
    """Reduce rating records to binary presence per (segment, concept).

    ``majority`` resolves ties as present; ``any`` and ``all`` are the
    lenient and strict alternatives.
    """
    if not records:
        raise ValueError("no rating records")
    rule = _AGGREGATIONS[aggregation]
    votes = defaultdict(list)
    for r in records:
        votes[(r.segment_id, r.concept)].append(r.present)
    return GoldStandard({p: rule(sum(v), len(v)) for p, v in votes.items()})


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0


def _ratio(num, den):
    return num / den if den else 0.0


def _f1(p, r):
    return 2 * p * r / (p + r) if p + r else 0.0


def _counts(predicted, gold):
    truth = gold.present()
    pred = set(predicted) & gold.pairs
    tp = len(pred & truth)
    return tp, len(pred) - tp, len(truth) - tp


def prf(predicted, gold, average="micro"):
    """Precision, recall and F1 of predicted pairs over the gold's declared pairs.

    Predictions outside the declared pairs are ignored. Empty denominators
    give 0. ``average="macro"`` averages per-concept scores instead.
    """
    tp, fp, fn = _counts(predicted, gold)
    if average == "micro":
        p, r = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
        return PRF(p, r, _f1(p, r), tp, fp, fn)
    if average != "macro":
        raise ValueError(f"unknown average {average!r}")
    scores = [prf(predicted, gold.restrict(lambda pair, c=c: pair[1] == c))
              for c in gold.concepts]
    if not scores:
        return PRF(0.0, 0.0, 0.0, tp, fp, fn)
    return PRF(float(np.mean([s.precision for s in scores])),
               float(np.mean([s.recall for s in scores])),
               float(np.mean([s.f1 for s in scores])), tp, fp, fn)


@dataclass(frozen=True)
class ContingencyTable:
    """Two-rater presence table: ``a`` both present, ``b`` only rater 1,
    ``c`` only rater 2, ``d`` both absent."""
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("contingency counts must be non-negative")

    @property
    def n(self):
        return self.a + self.b + self.c + self.d

    def labels(self):
        """Expand to paired boolean label vectors (rater 1, rater 2)."""
        r1 = np.repeat([True, True, False, False], [self.a, self.b, self.c, self.d])
        r2 = np.repeat([True, False, True, False], [self.a, self.b, self.c, self.d])
        return r1, r2


def contingency(r1, r2):
    r1 = np.asarray(r1, dtype=bool)
    r2 = np.asarray(r2, dtype=bool)
    return ContingencyTable(int(np.sum(r1 & r2)), int(np.sum(r1 & ~r2)),
                            int(np.sum(~r1 & r2)), int(np.sum(~r1 & ~r2)))


def _ac1_parts(t):
    n = t.n
    if n <= 0:
        raise DegenerateAgreementError("empty contingency table")
    pa = (t.a + t.d) / n
    pi = ((t.a + t.b) / n + (t.a + t.c) / n) / 2.0
    pe = 2.0 * pi * (1.0 - pi)
    if pe >= 1.0:
        raise DegenerateAgreementError("chance agreement is 1; AC1 undefined")
    return pa, pe


def gwet_ac1(t):
    """Gwet's first-order agreement coefficient for two raters, two categories."""
    pa, pe = _ac1_parts(t)
    return (pa - pe) / (1.0 - pe)


def cohen_kappa(t):
    n = t.n
    if n <= 0:
        raise DegenerateAgreementError("empty contingency table")
    pa = (t.a + t.d) / n
    pe = ((t.a + t.b) * (t.a + t.c) + (t.c + t.d) * (t.b + t.d)) / n ** 2
    if pe >= 1.0:
        raise DegenerateAgreementError("chance agreement is 1; kappa undefined")
    return (pa - pe) / (1.0 - pe)


def ac1_pvalue(t, n_perm=10000, seed=0):
    """One-sided permutation p-value for AC1 above chance.

    Rater 2's labels are shuffled against rater 1's. Both marginals are
    fixed under shuffling, so chance agreement is constant and the
    comparison reduces to the count of agreeing items.
    """
    if n_perm < 1000:
        raise ValueError("n_perm must be >= 1000")
    _ac1_parts(t)
    r1, r2 = t.labels()
    if r1.all() or not r1.any() or r2.all() or not r2.any():
        raise DegenerateAgreementError("a rater uses a single category; permutation test undefined")
    observed = t.a + t.d
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(r2, (n_perm, 1)), axis=1)
    agree = (perms == r1).sum(axis=1)
    return (1 + int(np.sum(agree >= observed))) / (n_perm + 1)


def reuse_rate(tags, corpus):
    """Share of single-word tags that occur as a token of their segment."""
    single = [(sid, tag.strip().lower()) for sid, tag in tags if len(tag.split()) == 1]
    if not single:
        raise UndefinedRateError("no single-word tags")
    hits = sum(corpus.has_term(sid, tag) for sid, tag in single)
    return hits / len(single)


def split_by_keyword(gold, corpus, predictions, average="micro"):
    """Score every method separately on pairs whose segment contains the
    concept keyword and on pairs whose segment does not.

    ``predictions`` maps method name -> set of (segment, concept) pairs.
    Returns ``{"keyword_present": {...}, "keyword_absent": {...}}``.
    """
    def has_keyword(pair):
        return corpus.has_term(*pair)

    parts = {
        "keyword_present": gold.restrict(has_keyword),
        "keyword_absent": gold.restrict(lambda p: not has_keyword(p)),
    }
    return {name: {m: prf(pred, g, average) for m, pred in predictions.items()}
            for name, g in parts.items()}


def format_report(rows, groups):
    """Aligned text table: one row per method, P/R/F1 per gold group.

    ``rows`` is a list of ``(method, {group: PRF})``.
    """
    header = ["Method"] + [f"{g} {m}" for g in groups for m in ("P", "R", "F1")]
    body = [[name] + [f"{getattr(scores[g], m):.2f}" for g in groups
                      for m in ("precision", "recall", "f1")] for name, scores in rows]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                       for i, (c, w) in enumerate(zip(r, widths)))
             for r in [header] + body]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def report_csv(rows, groups):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method"] + [f"{g}_{m}" for g in groups for m in ("precision", "recall", "f1")])
    for name, scores in rows:
        w.writerow([name] + [f"{getattr(scores[g], m):.6f}" for g in groups
                             for m in ("precision", "recall", "f1")])
    return buf.getvalue()
