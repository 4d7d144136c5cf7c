"""Shared builders for the test suite."""

import numpy as np

from framelearn.corpus import IndexedClause, IndexedDocument


def random_doc(rng, params, n_clauses, max_args=2, doc_id="doc"):
    """Document of random in-vocabulary observations; not sampled from the
    model, so likelihood code sees arbitrary inputs."""
    ve = len(params.vocab.event_heads)
    va = len(params.vocab.arg_heads)
    vc = len(params.vocab.caseframes)
    clauses = []
    for t in range(n_clauses):
        m = int(rng.integers(0, max_args + 1))
        clauses.append(
            IndexedClause(
                sentence_index=t,
                head=int(rng.integers(0, ve)),
                arg_types=rng.integers(0, 3, m),
                arg_heads=rng.integers(0, va, m),
                arg_cfs=rng.integers(0, vc, m),
            )
        )
    return IndexedDocument(doc_id, clauses)


def make_doc(heads, args_per_clause=None, doc_id="doc"):
    """Document with explicit head ids and (type, head, cf) triples per clause."""
    clauses = []
    for t, head in enumerate(heads):
        args = args_per_clause[t] if args_per_clause else []
        clauses.append(
            IndexedClause(
                sentence_index=t,
                head=head,
                arg_types=np.array([a[0] for a in args], dtype=np.int64),
                arg_heads=np.array([a[1] for a in args], dtype=np.int64),
                arg_cfs=np.array([a[2] for a in args], dtype=np.int64),
            )
        )
    return IndexedDocument(doc_id, clauses)


def tiny_vocab(n):
    """Vocabulary with n tokens per field (verb0.., noun0.., verb0>dobj..)
    plus the unknown sentinel at id 0."""
    from framelearn.corpus import (
        ArgType,
        ArgumentRecord,
        ClauseRecord,
        Corpus,
        Document,
        build_vocab,
    )

    docs = []
    for i in range(n):
        docs.append(
            Document(
                doc_id=f"v{i}",
                clauses=[
                    ClauseRecord(
                        doc_id=f"v{i}",
                        sentence_index=0,
                        clause_index=0,
                        event_head_lemma=f"verb{i}",
                        args=[
                            ArgumentRecord(
                                arg_type=ArgType.OBJ,
                                head_lemma=f"noun{i}",
                                dep_label="dobj",
                                caseframe=f"verb{i}>dobj",
                            )
                        ],
                    )
                ],
            )
        )
    return build_vocab(Corpus(docs))
