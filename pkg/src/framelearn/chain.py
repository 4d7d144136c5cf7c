"""Collapsed-state chain over (frame, event, background-flag) triples.

The latent state of a clause is collapsed to one integer. Content copies of
every (frame, event) pair come first in frame-major order, then background
copies of the same pairs. A background clause keeps its nominal (frame,
event); the pair is carried through so the chain resumes from it.

Transition structure, with b' the next clause's background flag:
  b' = background: the nominal pair must persist; anything else has
    probability zero.
  b' = content, same frame: the frame persists either through the sticky
    mass beta or through an explicit self-transition, and the event is drawn
    from the frame's event-transition row.
  b' = content, new frame: the frame is drawn from the non-sticky
    (1 - beta) share of the frame-transition row, and the event is drawn
    fresh from the new frame's initial-event distribution.
The first clause is always content.

Emissions marginalize per-argument slots; background emissions additionally
marginalize the background event, so all background copies of a clause share
one emission value.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .corpus import IndexedClause, IndexedCorpus, IndexedDocument
from .params import BKG, CNT, FrameParams, ModelParams

NEG_INF = float("-inf")


@dataclass(frozen=True)
class CollapsedState:
    frame: int
    event: int
    bkg: bool


@dataclass(eq=False)
class Assignment:
    """A decoded document: best state path plus per-argument slots.

    score is the Viterbi path log score, in which slots (and background
    events) are marginalized; it is not the log joint of the fixed slot
    assignment, which assignment_log_joint computes.
    """

    doc_id: str
    states: list[CollapsedState]
    slots: list[np.ndarray]
    score: float


@dataclass(eq=False)
class FrameLog:
    e_init: np.ndarray
    e_tran: np.ndarray
    e_head: np.ndarray
    slot: np.ndarray
    a_head: np.ndarray
    a_dep: np.ndarray

    @classmethod
    def of(cls, fp: FrameParams) -> "FrameLog":
        with np.errstate(divide="ignore"):
            return cls(
                e_init=np.log(fp.e_init),
                e_tran=np.log(fp.e_tran),
                e_head=np.log(fp.e_head),
                slot=np.log(fp.slot),
                a_head=np.log(fp.a_head),
                a_dep=np.log(fp.a_dep),
            )


@dataclass(eq=False)
class Tables:
    """Log-space view of a model, plus the dense state-transition matrix."""

    params: ModelParams
    n_content: int
    n_states: int
    offsets: np.ndarray      # (F+1,) content-state offset of each frame
    state_frame: np.ndarray  # (n_states,)
    state_event: np.ndarray  # (n_states,)
    state_is_bkg: np.ndarray  # (n_states,) bool
    log_p_bkg: np.ndarray
    init_lp: np.ndarray      # (n_states,)
    trans_lp: np.ndarray     # (n_states, n_states)
    resp_tran_same: np.ndarray  # (F,) see e-step: share of a same-frame move
                                # owed to the explicit transition draw
    frames: list[FrameLog]
    background: FrameLog

    def state_index(self, frame: int, event: int, bkg: bool) -> int:
        idx = int(self.offsets[frame]) + event
        return idx + self.n_content if bkg else idx

    def state(self, idx: int) -> CollapsedState:
        return CollapsedState(
            int(self.state_frame[idx]), int(self.state_event[idx]), bool(self.state_is_bkg[idx])
        )


def build_tables(params: ModelParams) -> Tables:
    s = params.structure
    offsets = s.frame_offsets()
    n_content = s.n_content_states
    n_states = 2 * n_content

    content_frame = np.concatenate(
        [np.full(s.events_per_frame[f], f, dtype=np.int64) for f in range(s.n_frames)]
    )
    content_event = np.concatenate(
        [np.arange(s.events_per_frame[f], dtype=np.int64) for f in range(s.n_frames)]
    )
    state_frame = np.concatenate([content_frame, content_frame])
    state_event = np.concatenate([content_event, content_event])
    state_is_bkg = np.zeros(n_states, dtype=bool)
    state_is_bkg[n_content:] = True

    frames = [FrameLog.of(fp) for fp in params.frames]
    background = FrameLog.of(params.background)
    with np.errstate(divide="ignore"):
        log_p_bkg = np.log(params.p_bkg)
        log_p_f_init = np.log(params.p_f_init)

    init_lp = np.full(n_states, NEG_INF)
    for f in range(s.n_frames):
        lo, hi = offsets[f], offsets[f + 1]
        init_lp[lo:hi] = log_p_f_init[f] + frames[f].e_init

    # Frame persistence mixes the sticky mass with an explicit self-move.
    beta = params.beta
    frame_factor = (1.0 - beta) * params.p_f_tran
    diag = np.arange(s.n_frames)
    frame_factor[diag, diag] += beta
    with np.errstate(divide="ignore"):
        log_frame_factor = np.log(frame_factor)
    denom = frame_factor[diag, diag]
    resp_tran_same = np.where(denom > 0.0, (1.0 - beta) * np.diag(params.p_f_tran) / denom, 0.0)

    # Rows are indexed by the nominal previous pair; both copies share a row.
    cnt_block = np.empty((n_content, n_content))
    for f in range(s.n_frames):
        plo, phi = offsets[f], offsets[f + 1]
        for g in range(s.n_frames):
            qlo, qhi = offsets[g], offsets[g + 1]
            if g == f:
                ev = frames[f].e_tran
            else:
                ev = np.broadcast_to(frames[g].e_init, (phi - plo, qhi - qlo))
            cnt_block[plo:phi, qlo:qhi] = log_p_bkg[CNT] + log_frame_factor[f, g] + ev
    bkg_block = np.full((n_content, n_content), NEG_INF)
    np.fill_diagonal(bkg_block, log_p_bkg[BKG])
    row_block = np.hstack([cnt_block, bkg_block])
    trans_lp = np.vstack([row_block, row_block])

    return Tables(
        params=params,
        n_content=n_content,
        n_states=n_states,
        offsets=offsets,
        state_frame=state_frame,
        state_event=state_event,
        state_is_bkg=state_is_bkg,
        log_p_bkg=log_p_bkg,
        init_lp=init_lp,
        trans_lp=trans_lp,
        resp_tran_same=resp_tran_same,
        frames=frames,
        background=background,
    )


def initial_log_prob(params: ModelParams, state: CollapsedState) -> float:
    """Log probability of the first clause's state. Background is impossible."""
    if state.bkg:
        return NEG_INF
    with np.errstate(divide="ignore"):
        return float(
            np.log(params.p_f_init[state.frame])
            + np.log(params.frames[state.frame].e_init[state.event])
        )


def transition_log_prob(params: ModelParams, prev: CollapsedState, nxt: CollapsedState) -> float:
    """Log transition probability between collapsed states, straight from the
    raw tables. Reference form for property checks; build_tables must agree."""
    if nxt.bkg:
        if nxt.frame == prev.frame and nxt.event == prev.event:
            p = params.p_bkg[BKG]
        else:
            p = 0.0
    else:
        beta = params.beta
        if nxt.frame == prev.frame:
            frame_factor = beta + (1.0 - beta) * params.p_f_tran[prev.frame, nxt.frame]
            event_factor = params.frames[prev.frame].e_tran[prev.event, nxt.event]
        else:
            frame_factor = (1.0 - beta) * params.p_f_tran[prev.frame, nxt.frame]
            event_factor = params.frames[nxt.frame].e_init[nxt.event]
        p = params.p_bkg[CNT] * frame_factor * event_factor
    with np.errstate(divide="ignore"):
        return float(np.log(p))


@dataclass(eq=False)
class ClauseEmission:
    """Per-clause emission value plus the pieces the e-step reuses."""

    log_emis: np.ndarray  # (n_states,)
    # [frame][arg] -> (E_f, S_f) log score of (event, slot) for that argument
    frame_arg_scores: list[list[np.ndarray]]
    # [arg] -> (E_b, S_b) for the background block
    bkg_arg_scores: list[np.ndarray]
    # (E_b,) unnormalized log posterior over background events for the clause
    bkg_event_logmix: np.ndarray


def _arg_scores(flog: FrameLog, clause: IndexedClause) -> list[np.ndarray]:
    out = []
    for j in range(clause.n_args):
        a_t = int(clause.arg_types[j])
        sl = flog.slot[:, a_t, :]
        tail = flog.a_head[:, clause.arg_heads[j]] + flog.a_dep[:, clause.arg_cfs[j]]
        out.append(sl + tail[None, :])
    return out


def clause_emission_detail(tables: Tables, clause: IndexedClause) -> ClauseEmission:
    content = np.empty(tables.n_content)
    frame_arg_scores = []
    for f, flog in enumerate(tables.frames):
        scores = _arg_scores(flog, clause)
        frame_arg_scores.append(scores)
        total = flog.e_head[:, clause.head].copy()
        for sc in scores:
            total += logsumexp(sc, axis=1)
        lo, hi = tables.offsets[f], tables.offsets[f + 1]
        content[lo:hi] = total

    blog = tables.background
    bkg_scores = _arg_scores(blog, clause)
    logmix = blog.e_init + blog.e_head[:, clause.head]
    for sc in bkg_scores:
        logmix = logmix + logsumexp(sc, axis=1)
    bkg_value = logsumexp(logmix)

    log_emis = np.concatenate([content, np.full(tables.n_content, bkg_value)])
    return ClauseEmission(log_emis, frame_arg_scores, bkg_scores, logmix)


def clause_log_emission(tables: Tables, clause: IndexedClause) -> np.ndarray:
    return clause_emission_detail(tables, clause).log_emis


def doc_emission_details(tables: Tables, doc: IndexedDocument) -> list[ClauseEmission]:
    return [clause_emission_detail(tables, c) for c in doc.clauses]


def doc_log_emissions(tables: Tables, doc: IndexedDocument) -> np.ndarray:
    return np.stack([clause_log_emission(tables, c) for c in doc.clauses])


@dataclass(eq=False)
class Trellis:
    log_emis: np.ndarray   # (L, n_states)
    log_alpha: np.ndarray  # (L, n_states)
    log_beta: np.ndarray   # (L, n_states)
    loglik: float


def forward_backward(tables: Tables, doc: IndexedDocument, log_emis: np.ndarray | None = None) -> Trellis:
    if len(doc) == 0:
        raise ValueError("cannot run the chain on an empty document")
    if log_emis is None:
        log_emis = doc_log_emissions(tables, doc)
    length, n = log_emis.shape
    la = np.empty((length, n))
    lb = np.empty((length, n))
    la[0] = tables.init_lp + log_emis[0]
    for t in range(1, length):
        la[t] = logsumexp(la[t - 1][:, None] + tables.trans_lp, axis=0) + log_emis[t]
    lb[length - 1] = 0.0
    for t in range(length - 2, -1, -1):
        lb[t] = logsumexp(tables.trans_lp + (log_emis[t + 1] + lb[t + 1])[None, :], axis=1)
    loglik = float(logsumexp(la[length - 1]))
    return Trellis(log_emis, la, lb, loglik)


def doc_loglik(tables: Tables, doc: IndexedDocument) -> float:
    return forward_backward(tables, doc).loglik


def corpus_loglik(params: ModelParams, corpus: IndexedCorpus) -> float:
    tables = build_tables(params)
    return float(sum(doc_loglik(tables, doc) for doc in corpus.documents))


def viterbi(tables: Tables, doc: IndexedDocument, log_emis: np.ndarray | None = None) -> tuple[list[int], float]:
    """Best state path. Ties resolve to the lowest state index, chosen at the
    final clause and at every backpointer."""
    if log_emis is None:
        log_emis = doc_log_emissions(tables, doc)
    length, n = log_emis.shape
    delta = tables.init_lp + log_emis[0]
    psi = np.empty((length, n), dtype=np.int64)
    for t in range(1, length):
        cand = delta[:, None] + tables.trans_lp
        psi[t] = np.argmax(cand, axis=0)
        delta = cand[psi[t], np.arange(n)] + log_emis[t]
    last = int(np.argmax(delta))
    path = [last]
    for t in range(length - 1, 0, -1):
        path.append(int(psi[t, path[-1]]))
    path.reverse()
    return path, float(delta[last])


def brute_force_viterbi(tables: Tables, doc: IndexedDocument) -> tuple[list[int], float]:
    """Exhaustive best-path search, for testing the dynamic program.

    Scores accumulate left to right with the same float operations as the
    dynamic program, so exact score comparison is meaningful. Ties prefer
    the path whose reversed state sequence is lexicographically smallest,
    which is the order the backpointer rule induces.
    """
    log_emis = doc_log_emissions(tables, doc)
    length, n = log_emis.shape
    if n ** length > 1e6:
        raise ValueError("state space too large for exhaustive search")
    best_score = NEG_INF
    best_rev: tuple[int, ...] | None = None
    for seq in itertools.product(range(n), repeat=length):
        score = tables.init_lp[seq[0]] + log_emis[0][seq[0]]
        for t in range(1, length):
            score = score + tables.trans_lp[seq[t - 1], seq[t]]
            score = score + log_emis[t][seq[t]]
        rev = tuple(reversed(seq))
        if score > best_score or (score == best_score and (best_rev is None or rev < best_rev)):
            best_score = float(score)
            best_rev = rev
    assert best_rev is not None
    return list(reversed(best_rev)), best_score


def _emission_prob(params: ModelParams, clause: IndexedClause, state: CollapsedState) -> float:
    """Probability-space clause emission, written with explicit loops."""
    if state.bkg:
        fp = params.background
        total = 0.0
        for e in range(fp.n_events):
            term = float(fp.e_init[e]) * float(fp.e_head[e, clause.head])
            for j in range(clause.n_args):
                acc = 0.0
                for s in range(fp.n_slots):
                    acc += (
                        float(fp.slot[e, int(clause.arg_types[j]), s])
                        * float(fp.a_head[s, clause.arg_heads[j]])
                        * float(fp.a_dep[s, clause.arg_cfs[j]])
                    )
                term *= acc
            total += term
        return total
    fp = params.frames[state.frame]
    e = state.event
    total = float(fp.e_head[e, clause.head])
    for j in range(clause.n_args):
        acc = 0.0
        for s in range(fp.n_slots):
            acc += (
                float(fp.slot[e, int(clause.arg_types[j]), s])
                * float(fp.a_head[s, clause.arg_heads[j]])
                * float(fp.a_dep[s, clause.arg_cfs[j]])
            )
        total *= acc
    return total


def _transition_prob(params: ModelParams, prev: CollapsedState, nxt: CollapsedState) -> float:
    if nxt.bkg:
        if nxt.frame == prev.frame and nxt.event == prev.event:
            return float(params.p_bkg[BKG])
        return 0.0
    beta = params.beta
    if nxt.frame == prev.frame:
        frame_factor = beta + (1.0 - beta) * float(params.p_f_tran[prev.frame, nxt.frame])
        event_factor = float(params.frames[prev.frame].e_tran[prev.event, nxt.event])
    else:
        frame_factor = (1.0 - beta) * float(params.p_f_tran[prev.frame, nxt.frame])
        event_factor = float(params.frames[nxt.frame].e_init[nxt.event])
    return float(params.p_bkg[CNT]) * frame_factor * event_factor


def all_states(params: ModelParams) -> list[CollapsedState]:
    """All collapsed states in index order (content block, then background)."""
    s = params.structure
    content = [
        CollapsedState(f, e, False)
        for f in range(s.n_frames)
        for e in range(s.events_per_frame[f])
    ]
    return content + [CollapsedState(st.frame, st.event, True) for st in content]


def brute_force_loglik(params: ModelParams, doc: IndexedDocument) -> float:
    """Document log likelihood by explicit enumeration of state sequences.

    Independent of the trellis code: probability space, plain Python loops,
    exact summation via math.fsum. Only safe for tiny state spaces; refuses
    anything over a million sequences.
    """
    states = all_states(params)
    n, length = len(states), len(doc)
    if n ** length > 1e6:
        raise ValueError("state space too large for exhaustive enumeration")
    emis = [
        [_emission_prob(params, clause, st) for st in states] for clause in doc.clauses
    ]
    init = [
        0.0 if st.bkg else float(params.p_f_init[st.frame]) * float(params.frames[st.frame].e_init[st.event])
        for st in states
    ]
    trans = [[_transition_prob(params, a, b) for b in states] for a in states]
    terms = []
    for seq in itertools.product(range(n), repeat=length):
        p = init[seq[0]] * emis[0][seq[0]]
        for t in range(1, length):
            p *= trans[seq[t - 1]][seq[t]] * emis[t][seq[t]]
        terms.append(p)
    total = math.fsum(terms)
    return math.log(total) if total > 0.0 else NEG_INF


def assignment_log_joint(
    params: ModelParams,
    doc: IndexedDocument,
    states: list[CollapsedState],
    slots: list[np.ndarray],
) -> float:
    """Log joint of a document with a fixed state path and fixed per-argument
    slots. Background events stay marginalized (slots and argument emissions
    are shared across them, so only the event-head term mixes)."""
    if len(states) != len(doc) or len(slots) != len(doc):
        raise ValueError("path length does not match document")
    total = initial_log_prob(params, states[0])
    for t in range(1, len(doc)):
        total += transition_log_prob(params, states[t - 1], states[t])
    with np.errstate(divide="ignore"):
        for t, clause in enumerate(doc.clauses):
            st = states[t]
            if st.bkg:
                fp = params.background
                mix = np.log(fp.e_init) + np.log(fp.e_head[:, clause.head])
                for j in range(clause.n_args):
                    mix = mix + np.log(fp.slot[:, int(clause.arg_types[j]), int(slots[t][j])])
                total += float(logsumexp(mix))
            else:
                fp = params.frames[st.frame]
                total += float(np.log(fp.e_head[st.event, clause.head]))
                for j in range(clause.n_args):
                    total += float(np.log(fp.slot[st.event, int(clause.arg_types[j]), int(slots[t][j])]))
            for j in range(clause.n_args):
                fp = params.background if st.bkg else params.frames[st.frame]
                total += float(np.log(fp.a_head[int(slots[t][j]), clause.arg_heads[j]]))
                total += float(np.log(fp.a_dep[int(slots[t][j]), clause.arg_cfs[j]]))
    return float(total)
