"""Decoding trained models into events, entities, and frame reports.

Viterbi gives each clause a (frame, event, background) state; each argument
then takes its single best slot given that state. Arguments of content
clauses become extracted entities labeled frame.slot; background clauses
are chaff and produce none.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .chain import (
    Assignment,
    CollapsedState,
    Tables,
    build_tables,
    clause_emission_detail,
    forward_backward,
    viterbi,
)
from .corpus import ArgType, Corpus, IndexedCorpus, IndexedDocument
from .params import ModelParams


def slot_label(frame: int, slot: int) -> str:
    return f"bkg.s{slot}" if frame < 0 else f"f{frame}.s{slot}"


@dataclass
class ExtractedEntity:
    doc_id: str
    clause_index: int
    arg_index: int
    frame: int
    slot: int
    head_lemma: str
    arg_type: ArgType
    caseframe: str

    @property
    def label(self) -> str:
        return slot_label(self.frame, self.slot)


def decode_document(
    tables: Tables, doc: IndexedDocument
) -> Assignment:
    details = [clause_emission_detail(tables, c) for c in doc.clauses]
    log_emis = np.stack([d.log_emis for d in details])
    path, score = viterbi(tables, doc, log_emis)

    states: list[CollapsedState] = []
    slots: list[np.ndarray] = []
    for t, clause in enumerate(doc.clauses):
        st = tables.state(path[t])
        states.append(st)
        chosen = np.empty(clause.n_args, dtype=np.int64)
        det = details[t]
        if st.bkg:
            # Slot score mixes over background events weighted by their
            # posterior given the whole clause.
            logr = det.bkg_event_logmix - logsumexp(det.bkg_event_logmix)
            for j in range(clause.n_args):
                scores = logsumexp(logr[:, None] + det.bkg_arg_scores[j], axis=0)
                chosen[j] = int(np.argmax(scores))
        else:
            for j in range(clause.n_args):
                chosen[j] = int(np.argmax(det.frame_arg_scores[st.frame][j][st.event]))
        slots.append(chosen)
    return Assignment(doc.doc_id, states, slots, score)


def decode_corpus(
    params: ModelParams,
    icorpus: IndexedCorpus,
    corpus: Corpus | None = None,
) -> tuple[list[Assignment], list[ExtractedEntity]]:
    """Decode every document. Entities come from content clauses only.

    When the original string corpus is given, entity lemmas and caseframes
    are the raw strings (out-of-vocabulary forms survive); otherwise they
    are read back from the vocabulary and out-of-vocabulary items show up
    as the unknown token.
    """
    if corpus is not None and len(corpus.documents) != len(icorpus.documents):
        raise ValueError("string corpus does not match indexed corpus")
    tables = build_tables(params)
    assignments = []
    entities = []
    for d, idoc in enumerate(icorpus.documents):
        asg = decode_document(tables, idoc)
        assignments.append(asg)
        for t, iclause in enumerate(idoc.clauses):
            st = asg.states[t]
            if st.bkg:
                continue
            for j in range(iclause.n_args):
                if corpus is not None:
                    arg = corpus.documents[d].clauses[t].args[j]
                    lemma, cf = arg.head_lemma, arg.caseframe
                else:
                    lemma = params.vocab.arg_heads.token(int(iclause.arg_heads[j]))
                    cf = params.vocab.caseframes.token(int(iclause.arg_cfs[j]))
                entities.append(
                    ExtractedEntity(
                        doc_id=idoc.doc_id,
                        clause_index=t,
                        arg_index=j,
                        frame=st.frame,
                        slot=int(asg.slots[t][j]),
                        head_lemma=lemma,
                        arg_type=ArgType(int(iclause.arg_types[j])),
                        caseframe=cf,
                    )
                )
    return assignments, entities


def arg_labels(assignments: list[Assignment]) -> list[tuple]:
    """Per-argument labels in corpus order, matching the synthetic truth
    format: ("bkg", slot) on background clauses, (frame, slot) otherwise."""
    labels = []
    for asg in assignments:
        for st, slots in zip(asg.states, asg.slots):
            for s in slots:
                labels.append(("bkg", int(s)) if st.bkg else (st.frame, int(s)))
    return labels


# ---------------------------------------------------------------------------
# Word-level frame affinity and document classification


def frame_word_prob(params: ModelParams, frame: int, word: int) -> float:
    """Probability of an event-head word under a frame: the plain average of
    the frame's per-event head emissions."""
    fp = params.frames[frame]
    return float(fp.e_head[:, word].mean())


def frame_posterior(params: ModelParams, word: int) -> np.ndarray:
    """Distribution over content frames given that an event head is the word,
    with frames weighted equally."""
    p = np.array([frame_word_prob(params, f, word) for f in range(params.n_frames)])
    total = p.sum()
    if total <= 0.0:
        return np.full(params.n_frames, 1.0 / params.n_frames)
    return p / total


def classify_document(
    params: ModelParams,
    doc: IndexedDocument,
    frame: int,
    avg_threshold: float,
    trigger_threshold: float = 0.2,
) -> bool:
    """Relevance test for one frame: the document's mean event-head
    probability under the frame must clear avg_threshold, and at least one
    event head must point to the frame with posterior above
    trigger_threshold."""
    heads = [c.head for c in doc.clauses]
    if not heads:
        return False
    mean_prob = float(np.mean([frame_word_prob(params, frame, h) for h in heads]))
    if mean_prob <= avg_threshold:
        return False
    return any(frame_posterior(params, h)[frame] > trigger_threshold for h in heads)


# ---------------------------------------------------------------------------
# Reporting


def dump_frames(params: ModelParams, top_k: int = 5) -> dict:
    """Readable summary of what each frame has learned: top event heads per
    event and top argument heads and caseframes per slot."""

    def top(vocab, row: np.ndarray) -> list[dict]:
        order = np.argsort(-row)[:top_k]
        return [
            {"token": vocab.token(int(i)), "p": float(row[int(i)])}
            for i in order
            if row[int(i)] > 0.0
        ]

    v = params.vocab
    out = {"frames": [], "background": None}
    blocks = [(f, fp) for f, fp in enumerate(params.frames)] + [(-1, params.background)]
    for f, fp in blocks:
        block = {
            "frame": f,
            "events": [
                {"event": e, "p_init": float(fp.e_init[e]), "heads": top(v.event_heads, fp.e_head[e])}
                for e in range(fp.n_events)
            ],
            "slots": [
                {
                    "slot": s,
                    "label": slot_label(f, s),
                    "arg_heads": top(v.arg_heads, fp.a_head[s]),
                    "caseframes": top(v.caseframes, fp.a_dep[s]),
                }
                for s in range(fp.n_slots)
            ],
        }
        if f < 0:
            out["background"] = block
        else:
            out["frames"].append(block)
    return out
