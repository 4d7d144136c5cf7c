"""Entity-level scoring of extractions against gold slot fills.

Conventions, fixed here and relied on by the tests:
  - A prediction and a gold fill match when they share a document id and a
    casefolded head lemma. Everything is deduplicated to (document, lemma)
    pairs per slot before counting, on both sides.
  - Gold fills marked optional can satisfy a prediction (they count toward
    precision) but are not owed (they leave the recall denominator). A
    duplicated gold that is both required and optional counts as required.
  - A slot with no predictions has precision 0; a slot with no required
    golds has recall 1; F1 is 0 when precision and recall are both 0.
  - Overall scores are micro-averages: counts are summed over gold slots
    first.
  - Induced slots are mapped onto gold slots greedily, up to n_to_one
    induced slots per gold slot, one addition at a time, each time taking
    the addition that most improves overall F1 and stopping when none
    helps. Ties prefer the lexicographically smallest (gold slot, induced
    label) pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .corpus import ParseError
from .extract import ExtractedEntity

Key = tuple[str, str]  # (doc_id, casefolded lemma)


@dataclass(frozen=True)
class GoldEntity:
    doc_id: str
    slot: str
    head_lemma: str
    optional: bool = False


def load_gold(path) -> list[GoldEntity]:
    """Line-delimited JSON: doc_id, slot, head_lemma, optional (default false)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"line {lineno}: invalid JSON ({e.msg})") from None
            if not isinstance(obj, dict):
                raise ParseError(f"line {lineno}: gold record is not an object")
            try:
                out.append(
                    GoldEntity(
                        doc_id=str(obj["doc_id"]),
                        slot=str(obj["slot"]),
                        head_lemma=str(obj["head_lemma"]),
                        optional=bool(obj.get("optional", False)),
                    )
                )
            except KeyError as e:
                raise ParseError(f"line {lineno}: missing field {e.args[0]!r}") from None
    return out


def match(pred_lemma: str, gold_lemma: str) -> bool:
    return pred_lemma.casefold() == gold_lemma.casefold()


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float
    n_predicted: int = 0
    n_correct: int = 0
    n_required: int = 0
    n_recalled: int = 0

    @classmethod
    def from_counts(cls, n_predicted: int, n_correct: int, n_required: int, n_recalled: int) -> "PRF":
        p = n_correct / n_predicted if n_predicted else 0.0
        r = n_recalled / n_required if n_required else 1.0
        f1 = 2 * p * r / (p + r) if p + r > 0.0 else 0.0
        return cls(p, r, f1, n_predicted, n_correct, n_required, n_recalled)


@dataclass
class Report:
    per_slot: dict  # gold slot -> PRF
    overall: PRF
    mapping: dict  # gold slot -> sorted list of induced labels

    def to_dict(self) -> dict:
        return {
            "per_slot": {k: vars(v) for k, v in self.per_slot.items()},
            "overall": vars(self.overall),
            "mapping": {k: list(v) for k, v in self.mapping.items()},
        }


@dataclass
class _SlotSets:
    required: set
    optional: set


def _gold_sets(golds: list[GoldEntity]) -> dict[str, _SlotSets]:
    by_slot: dict[str, _SlotSets] = {}
    for g in golds:
        sets = by_slot.setdefault(g.slot, _SlotSets(set(), set()))
        key: Key = (g.doc_id, g.head_lemma.casefold())
        if g.optional:
            sets.optional.add(key)
        else:
            sets.required.add(key)
    for sets in by_slot.values():
        # Required beats optional for a duplicated fill.
        sets.optional -= sets.required
    return by_slot


def _label_keys(entities: list[ExtractedEntity]) -> dict[str, set]:
    keys: dict[str, set] = {}
    for e in entities:
        keys.setdefault(e.label, set()).add((e.doc_id, e.head_lemma.casefold()))
    return keys


def _slot_counts(pred: set, sets: _SlotSets) -> tuple[int, int, int, int]:
    n_correct = len(pred & (sets.required | sets.optional))
    n_recalled = len(pred & sets.required)
    return len(pred), n_correct, len(sets.required), n_recalled


def score(
    entities: list[ExtractedEntity],
    golds: list[GoldEntity],
    mapping: dict[str, list[str]],
) -> Report:
    """Score entities under a fixed induced-to-gold slot mapping. Gold slots
    absent from the mapping are scored with an empty prediction set."""
    gold_sets = _gold_sets(golds)
    label_keys = _label_keys(entities)
    per_slot = {}
    tot = [0, 0, 0, 0]
    for slot in sorted(gold_sets):
        pred: set = set()
        for label in mapping.get(slot, []):
            pred |= label_keys.get(label, set())
        counts = _slot_counts(pred, gold_sets[slot])
        per_slot[slot] = PRF.from_counts(*counts)
        for i, c in enumerate(counts):
            tot[i] += c
    return Report(per_slot, PRF.from_counts(*tot), {k: sorted(v) for k, v in mapping.items()})


def fit_mapping(
    entities: list[ExtractedEntity],
    golds: list[GoldEntity],
    n_to_one: int = 1,
) -> dict[str, list[str]]:
    """Greedy assignment of induced labels to gold slots, n_to_one at most
    per gold slot, each induced label used at most once."""
    if n_to_one < 1:
        raise ValueError("n_to_one must be at least 1")
    gold_sets = _gold_sets(golds)
    label_keys = _label_keys(entities)
    mapping: dict[str, list[str]] = {slot: [] for slot in gold_sets}
    pred_sets: dict[str, set] = {slot: set() for slot in gold_sets}
    used: set[str] = set()

    def overall_f1(override_slot: str | None = None, extra: set | None = None) -> float:
        tot = [0, 0, 0, 0]
        for slot, sets in gold_sets.items():
            pred = pred_sets[slot]
            if slot == override_slot and extra is not None:
                pred = pred | extra
            counts = _slot_counts(pred, sets)
            for i, c in enumerate(counts):
                tot[i] += c
        return PRF.from_counts(*tot).f1

    current = overall_f1()
    while True:
        best: tuple[float, str, str] | None = None
        for slot in sorted(gold_sets):
            if len(mapping[slot]) >= n_to_one:
                continue
            for label in sorted(label_keys):
                if label in used:
                    continue
                f1 = overall_f1(slot, label_keys[label])
                if f1 > current and (best is None or f1 > best[0]):
                    best = (f1, slot, label)
        if best is None:
            break
        current, slot, label = best
        mapping[slot].append(label)
        pred_sets[slot] |= label_keys[label]
        used.add(label)
    return {k: sorted(v) for k, v in mapping.items()}


def evaluate(
    entities: list[ExtractedEntity],
    golds: list[GoldEntity],
    n_to_one: int = 1,
    mapping: dict[str, list[str]] | None = None,
) -> Report:
    """Fit a mapping (unless one is supplied) and score under it. Fitting and
    scoring on the same data measures the model's best case; for an honest
    held-out number, fit on development gold and pass the mapping in."""
    if mapping is None:
        mapping = fit_mapping(entities, golds, n_to_one)
    return score(entities, golds, mapping)
