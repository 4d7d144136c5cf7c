"""Clause-sequenced corpus model: ingestion, vocabularies, integer indexing.

The atomic observation is a clause: an event-head lemma plus its typed
syntactic arguments. Documents are ordered clause sequences; the chain
modules consume the integer-indexed view produced here.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

UNK = "<unk>"
UNK_ID = 0


class CorpusError(ValueError):
    """Base class for corpus ingestion failures."""


class ParseError(CorpusError):
    """A clause record line could not be parsed."""


class IntegrityError(CorpusError):
    """Parsed records violate corpus-level constraints."""


class ArgType(IntEnum):
    SUBJ = 0
    OBJ = 1
    PREP = 2


N_ARG_TYPES = 3

# Fixed dependency-label tables. nsubjpass/csubjpass are surface subjects of
# passives, i.e. semantic objects; "agent" is the demoted passive subject.
_SUBJ_LABELS = frozenset({"nsubj", "csubj", "xsubj", "agent"})
_OBJ_LABELS = frozenset({"dobj", "obj", "iobj", "nsubjpass", "csubjpass"})


def arg_type_for(dep_label: str) -> ArgType:
    """Map a dependency label to SUBJ/OBJ/PREP. Total: unknown labels -> PREP."""
    if dep_label in _SUBJ_LABELS:
        return ArgType.SUBJ
    if dep_label in _OBJ_LABELS:
        return ArgType.OBJ
    return ArgType.PREP


def make_caseframe(event_head_lemma: str, dep_label: str) -> str:
    return f"{event_head_lemma}>{dep_label}"


@dataclass
class ArgumentRecord:
    arg_type: ArgType
    head_lemma: str
    dep_label: str
    caseframe: str


@dataclass
class ClauseRecord:
    doc_id: str
    sentence_index: int
    clause_index: int
    event_head_lemma: str
    args: list[ArgumentRecord] = field(default_factory=list)


@dataclass
class Document:
    doc_id: str
    clauses: list[ClauseRecord]

    def __len__(self) -> int:
        return len(self.clauses)


@dataclass
class Corpus:
    documents: list[Document]
    warnings: list[str] = field(default_factory=list, compare=False)

    def __len__(self) -> int:
        return len(self.documents)

    def n_clauses(self) -> int:
        return sum(len(d) for d in self.documents)


def _parse_arg(obj: dict, head_lemma: str, lineno: int, warnings: list[str]) -> ArgumentRecord:
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: argument entry is not an object")
    try:
        arg_head = obj["head_lemma"]
        dep_label = obj["dep_label"]
    except KeyError as e:
        raise ParseError(f"line {lineno}: argument missing field {e.args[0]!r}") from None
    if not isinstance(arg_head, str) or not isinstance(dep_label, str):
        raise ParseError(f"line {lineno}: argument fields must be strings")

    raw_type = obj.get("arg_type")
    if raw_type is None:
        arg_type = arg_type_for(dep_label)
    else:
        try:
            arg_type = ArgType[str(raw_type).upper()]
        except KeyError:
            warnings.append(
                f"line {lineno}: unknown arg_type {raw_type!r}, derived from dep_label"
            )
            arg_type = arg_type_for(dep_label)

    # Explicit caseframes (e.g. from a synthetic sampler) are kept verbatim;
    # otherwise the caseframe is the event head paired with the dependency.
    caseframe = obj.get("caseframe")
    if caseframe is None:
        caseframe = make_caseframe(head_lemma, dep_label)
    return ArgumentRecord(arg_type, arg_head, dep_label, caseframe)


def _parse_clause(line: str, lineno: int, warnings: list[str]) -> ClauseRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {lineno}: invalid JSON ({e.msg})") from None
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: clause record is not an object")
    try:
        doc_id = obj["doc_id"]
        sentence_index = obj["sentence_index"]
        clause_index = obj["clause_index"]
        head = obj["event_head_lemma"]
    except KeyError as e:
        raise ParseError(f"line {lineno}: missing field {e.args[0]!r}") from None
    if not isinstance(doc_id, str) or not isinstance(head, str) or not head:
        raise ParseError(f"line {lineno}: doc_id/event_head_lemma must be non-empty strings")
    if not isinstance(sentence_index, int) or not isinstance(clause_index, int):
        raise ParseError(f"line {lineno}: sentence_index/clause_index must be integers")
    if sentence_index < 0 or clause_index < 0:
        raise ParseError(f"line {lineno}: indices must be non-negative")
    raw_args = obj.get("args", [])
    if not isinstance(raw_args, list):
        raise ParseError(f"line {lineno}: args must be an array")
    args = [_parse_arg(a, head, lineno, warnings) for a in raw_args]
    return ClauseRecord(doc_id, sentence_index, clause_index, head, args)


def load_corpus(path) -> Corpus:
    """Load a line-delimited clause-record file into a Corpus.

    Clauses are grouped by doc_id (documents keep first-appearance order) and
    sorted by (sentence_index, clause_index). Within each document the
    clause_index values must be the contiguous range 0..l-1.
    """
    warnings: list[str] = []
    by_doc: dict[str, list[ClauseRecord]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            clause = _parse_clause(line, lineno, warnings)
            by_doc.setdefault(clause.doc_id, []).append(clause)

    documents = []
    for doc_id, clauses in by_doc.items():
        seen = {c.clause_index for c in clauses}
        if len(seen) != len(clauses):
            raise IntegrityError(f"document {doc_id!r}: duplicate clause_index")
        clauses.sort(key=lambda c: (c.sentence_index, c.clause_index))
        if [c.clause_index for c in clauses] != list(range(len(clauses))):
            raise IntegrityError(
                f"document {doc_id!r}: clause_index values are not contiguous 0..{len(clauses) - 1}"
            )
        documents.append(Document(doc_id, clauses))
    for w in warnings:
        log.warning("%s", w)
    return Corpus(documents, warnings)


def write_corpus(corpus: Corpus, path) -> None:
    """Write a Corpus back to the line-delimited clause-record format."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            for clause in doc.clauses:
                rec = {
                    "doc_id": clause.doc_id,
                    "sentence_index": clause.sentence_index,
                    "clause_index": clause.clause_index,
                    "event_head_lemma": clause.event_head_lemma,
                    "args": [
                        {
                            "arg_type": a.arg_type.name,
                            "head_lemma": a.head_lemma,
                            "dep_label": a.dep_label,
                            "caseframe": a.caseframe,
                        }
                        for a in clause.args
                    ],
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


@dataclass
class Vocab:
    """Dense string<->id mapping with frequency counts; id 0 is reserved for UNK."""

    token_of: list[str]
    id_of: dict[str, int]
    counts: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def build(cls, counts: Counter, min_count: int) -> "Vocab":
        kept = sorted(
            (t for t, c in counts.items() if c >= min_count and t != UNK),
            key=lambda t: (-counts[t], t),
        )
        token_of = [UNK] + kept
        id_of = {t: i for i, t in enumerate(token_of)}
        return cls(token_of, id_of, dict(counts))

    def __len__(self) -> int:
        return len(self.token_of)

    def id(self, token: str) -> int:
        return self.id_of.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self.token_of[idx]

    def __contains__(self, token: str) -> bool:
        return token in self.id_of


@dataclass
class Vocabularies:
    event_heads: Vocab
    arg_heads: Vocab
    caseframes: Vocab


def build_vocab(corpus: Corpus, min_count: int = 1) -> Vocabularies:
    """Count event heads, argument heads, and caseframes; index types with
    frequency >= min_count, everything else collapses to UNK."""
    if not corpus.documents:
        raise CorpusError("cannot build vocabularies from an empty corpus")
    heads: Counter = Counter()
    arg_heads: Counter = Counter()
    caseframes: Counter = Counter()
    for doc in corpus.documents:
        for clause in doc.clauses:
            heads[clause.event_head_lemma] += 1
            for a in clause.args:
                arg_heads[a.head_lemma] += 1
                caseframes[a.caseframe] += 1
    return Vocabularies(
        event_heads=Vocab.build(heads, min_count),
        arg_heads=Vocab.build(arg_heads, min_count),
        caseframes=Vocab.build(caseframes, min_count),
    )


@dataclass
class IndexedClause:
    sentence_index: int
    head: int
    arg_types: np.ndarray  # (m,) int64, ArgType values
    arg_heads: np.ndarray  # (m,) int64
    arg_cfs: np.ndarray  # (m,) int64

    @property
    def n_args(self) -> int:
        return len(self.arg_types)


@dataclass
class IndexedDocument:
    doc_id: str
    clauses: list[IndexedClause]

    def __len__(self) -> int:
        return len(self.clauses)


@dataclass
class IndexedCorpus:
    documents: list[IndexedDocument]

    def __len__(self) -> int:
        return len(self.documents)


def index_corpus(corpus: Corpus, vocab: Vocabularies) -> IndexedCorpus:
    """Replace every string field by its vocabulary id (OOV -> UNK).

    Document/clause/argument shape is preserved exactly.
    """
    documents = []
    for doc in corpus.documents:
        clauses = []
        for c in doc.clauses:
            clauses.append(
                IndexedClause(
                    sentence_index=c.sentence_index,
                    head=vocab.event_heads.id(c.event_head_lemma),
                    arg_types=np.array([int(a.arg_type) for a in c.args], dtype=np.int64),
                    arg_heads=np.array([vocab.arg_heads.id(a.head_lemma) for a in c.args], dtype=np.int64),
                    arg_cfs=np.array([vocab.caseframes.id(a.caseframe) for a in c.args], dtype=np.int64),
                )
            )
        documents.append(IndexedDocument(doc.doc_id, clauses))
    return IndexedCorpus(documents)


def deindex_corpus(icorpus: IndexedCorpus, vocab: Vocabularies) -> Corpus:
    """Inverse of index_corpus for in-vocabulary corpora.

    Lemmas and caseframes round-trip exactly; dep_label is recovered from the
    caseframe tail, which matches the original only for canonical
    "head>dep" caseframes.
    """
    documents = []
    for idoc in icorpus.documents:
        clauses = []
        for i, ic in enumerate(idoc.clauses):
            head = vocab.event_heads.token(ic.head)
            args = []
            for t, a, cf in zip(ic.arg_types, ic.arg_heads, ic.arg_cfs):
                cf_tok = vocab.caseframes.token(int(cf))
                dep = cf_tok.split(">", 1)[1] if ">" in cf_tok else cf_tok
                args.append(ArgumentRecord(ArgType(int(t)), vocab.arg_heads.token(int(a)), dep, cf_tok))
            clauses.append(ClauseRecord(idoc.doc_id, ic.sentence_index, i, head, args))
        documents.append(Document(idoc.doc_id, clauses))
    return Corpus(documents)
