"""Parameter fitting and structure search.

Fitting is expectation-maximization over the collapsed chain, in two
flavors: batch (one M-step per corpus pass; the smoothed objective never
decreases) and incremental (per-document count replacement with an M-step
after every document; faster convergence, no monotonicity guarantee).

Structure search interleaves EM with split-merge moves: every event and
slot is split in two, EM specializes the twins, then the pairs whose merge
would cost the least likelihood are merged back. Split sizes double, so
per-row pseudocounts are halved at each split to keep total smoothing mass
comparable.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .corpus import IndexedCorpus, IndexedDocument, Vocabularies
from .params import (
    BKG,
    CNT,
    FrameParams,
    FrameStats,
    ModelParams,
    StructureConfig,
    SufficientStats,
    init_model,
    log_prior,
    m_step,
)
from .chain import (
    Tables,
    Trellis,
    build_tables,
    doc_emission_details,
    forward_backward,
)

log = logging.getLogger(__name__)

BACKGROUND_FRAME = -1


class NumericError(RuntimeError):
    """The objective went non-finite; the run cannot continue."""


class TrainMode(str, Enum):
    BATCH = "batch"
    INCREMENTAL = "incremental"


class MergeScoring(str, Enum):
    EXACT = "exact"
    APPROX = "approx"
    AUTO = "auto"


# Exact merge scoring re-evaluates the corpus once per candidate; past this
# many documents the pointwise approximation takes over under AUTO.
EXACT_SCORING_MAX_DOCS = 50


@dataclass
class TrainSchedule:
    cycles: int = 3
    em_iters_per_cycle: int = 10
    post_merge_iters: int = 5
    merge_fraction: float = 0.5
    perturb_eps: float = 0.02
    mode: TrainMode = TrainMode.BATCH
    merge_scoring: MergeScoring = MergeScoring.AUTO
    seed: int = 0


@dataclass
class MergeCandidate:
    kind: str  # "event" or "slot"
    frame: int  # BACKGROUND_FRAME for the background block
    pair: tuple[int, int]
    loss: float = math.nan
    weights: tuple[float, float] = (0.5, 0.5)


# ---------------------------------------------------------------------------
# E-step


def e_step_doc(tables: Tables, doc: IndexedDocument) -> SufficientStats:
    """Expected counts for one document under the model behind `tables`."""
    params = tables.params
    stats = SufficientStats.zeros(params)
    details = doc_emission_details(tables, doc)
    log_emis = np.stack([d.log_emis for d in details])
    trellis = forward_backward(tables, doc, log_emis)
    _accumulate_doc(stats, tables, doc, details, trellis)
    stats.loglik = trellis.loglik
    stats.n_docs = 1
    return stats


def _chunk_stats(params: ModelParams, docs: list[IndexedDocument]) -> SufficientStats:
    tables = build_tables(params)
    out = SufficientStats.zeros(params)
    for doc in docs:
        out.iadd(e_step_doc(tables, doc))
    return out


def e_step(
    params: ModelParams,
    corpus: IndexedCorpus,
    workers: int = 1,
    executor: Executor | None = None,
) -> SufficientStats:
    """Full E pass. With workers > 1 documents are processed in contiguous
    chunks across processes; chunk results are combined in document order,
    so output is deterministic for a fixed worker count."""
    docs = corpus.documents
    if workers <= 1 or len(docs) < 2 * workers:
        return _chunk_stats(params, docs)
    bounds = np.linspace(0, len(docs), workers + 1).astype(int)
    chunks = [docs[bounds[i]:bounds[i + 1]] for i in range(workers) if bounds[i] < bounds[i + 1]]
    ctx = nullcontext(executor) if executor is not None else ProcessPoolExecutor(max_workers=workers)
    with ctx as ex:
        futures = [ex.submit(_chunk_stats, params, chunk) for chunk in chunks]
        total = SufficientStats.zeros(params)
        for fut in futures:
            total.iadd(fut.result())
    return total


def _accumulate_doc(
    stats: SufficientStats,
    tables: Tables,
    doc: IndexedDocument,
    details: list,
    trellis: Trellis,
) -> None:
    params = tables.params
    s = params.structure
    n_c = tables.n_content
    offsets = tables.offsets
    la, lb, emis, ll = trellis.log_alpha, trellis.log_beta, trellis.log_emis, trellis.loglik
    length = len(doc)
    gamma = np.exp(la + lb - ll)

    # First clause is content by construction: frame and event initials.
    for f in range(s.n_frames):
        lo, hi = offsets[f], offsets[f + 1]
        g0 = gamma[0, lo:hi]
        stats.f_init[f] += g0.sum()
        stats.frames[f].e_init += g0

    # Background switch is drawn at every clause after the first.
    if length > 1:
        stats.bkg[CNT] += gamma[1:, :n_c].sum()
        stats.bkg[BKG] += gamma[1:, n_c:].sum()

    for t in range(length - 1):
        xi = np.exp(la[t][:, None] + tables.trans_lp + (emis[t + 1] + lb[t + 1])[None, :] - ll)
        # Both copies of a nominal pair share a transition row; fold them.
        cc = (xi[:n_c] + xi[n_c:])[:, :n_c]
        for f in range(s.n_frames):
            plo, phi = offsets[f], offsets[f + 1]
            for g in range(s.n_frames):
                qlo, qhi = offsets[g], offsets[g + 1]
                block = cc[plo:phi, qlo:qhi]
                mass = block.sum()
                if g == f:
                    # A same-frame move is explained partly by stickiness;
                    # only the explicit-transition share counts.
                    stats.f_tran[f, f] += mass * tables.resp_tran_same[f]
                    stats.frames[f].e_tran += block
                else:
                    stats.f_tran[f, g] += mass
                    stats.frames[g].e_init += block.sum(axis=0)

    for t, clause in enumerate(doc.clauses):
        det = details[t]
        for f in range(s.n_frames):
            lo, hi = offsets[f], offsets[f + 1]
            g_f = gamma[t, lo:hi]
            if g_f.sum() <= 0.0:
                continue
            fs = stats.frames[f]
            fs.e_head[:, clause.head] += g_f
            for j in range(clause.n_args):
                scores = det.frame_arg_scores[f][j]
                q = np.exp(scores - logsumexp(scores, axis=1, keepdims=True))
                w = g_f[:, None] * q
                fs.slot[:, int(clause.arg_types[j]), :] += w
                col = w.sum(axis=0)
                fs.a_head[:, clause.arg_heads[j]] += col
                fs.a_dep[:, clause.arg_cfs[j]] += col
        g_b = gamma[t, n_c:].sum()
        if g_b > 0.0:
            bs = stats.background
            r = np.exp(det.bkg_event_logmix - logsumexp(det.bkg_event_logmix))
            bs.e_init += g_b * r
            bs.e_head[:, clause.head] += g_b * r
            for j in range(clause.n_args):
                scores = det.bkg_arg_scores[j]
                q = np.exp(scores - logsumexp(scores, axis=1, keepdims=True))
                w = g_b * r[:, None] * q
                bs.slot[:, int(clause.arg_types[j]), :] += w
                col = w.sum(axis=0)
                bs.a_head[:, clause.arg_heads[j]] += col
                bs.a_dep[:, clause.arg_cfs[j]] += col


# ---------------------------------------------------------------------------
# EM drivers


def penalized_loglik(params: ModelParams, corpus: IndexedCorpus) -> float:
    """Data log likelihood plus the Dirichlet log prior the M-step maximizes."""
    from .chain import corpus_loglik

    return corpus_loglik(params, corpus) + log_prior(params)


def batch_em(
    params: ModelParams,
    corpus: IndexedCorpus,
    n_iters: int,
    tol: float | None = None,
    workers: int = 1,
) -> tuple[ModelParams, list[float]]:
    """Plain EM. Returns the fitted model and the penalized objective at each
    iterate; the sequence is non-decreasing up to float noise.

    With tol set, stops early once the objective improves by less than tol.
    """
    history: list[float] = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for it in range(n_iters):
            stats = e_step(params, corpus, workers, pool)
            objective = stats.loglik + log_prior(params)
            if not math.isfinite(objective):
                raise NumericError(f"objective became {objective} at EM iteration {it}")
            history.append(objective)
            params = m_step(stats, params)
            if tol is not None and len(history) >= 2 and history[-1] - history[-2] < tol:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return params, history


def incremental_em(
    params: ModelParams,
    corpus: IndexedCorpus,
    n_iters: int,
    seed: int = 0,
) -> tuple[ModelParams, list[float]]:
    """EM with per-document count replacement.

    The first pass is a full batch sweep that seeds the global count pool
    and the per-document contributions. Each later pass visits documents in
    a seeded random order; a document's old contribution is swapped for one
    computed under the current model, and the M-step runs after every swap.
    The history records the pooled data log likelihood plus prior after each
    pass; entries after the first mix stale per-document terms.
    """
    if n_iters < 1:
        return params, []
    rng = np.random.default_rng(seed)
    pool = SufficientStats.zeros(params)
    per_doc: list[SufficientStats] = []
    tables = build_tables(params)
    for doc in corpus.documents:
        ds = e_step_doc(tables, doc)
        per_doc.append(ds)
        pool.iadd(ds)
    history = [pool.loglik + log_prior(params)]
    params = m_step(pool, params)
    for _ in range(n_iters - 1):
        order = rng.permutation(len(corpus.documents))
        for i in order:
            tables = build_tables(params)
            fresh = e_step_doc(tables, corpus.documents[int(i)])
            pool.isub(per_doc[int(i)])
            pool.iadd(fresh)
            per_doc[int(i)] = fresh
            params = m_step(pool, params)
        history.append(pool.loglik + log_prior(params))
    if not math.isfinite(history[-1]):
        raise NumericError("objective became non-finite during incremental EM")
    return params, history


def run_em(
    params: ModelParams,
    corpus: IndexedCorpus,
    n_iters: int,
    mode: TrainMode = TrainMode.BATCH,
    seed: int = 0,
    workers: int = 1,
) -> tuple[ModelParams, list[float]]:
    if mode == TrainMode.BATCH:
        return batch_em(params, corpus, n_iters, workers=workers)
    # Incremental passes re-estimate after every document; there is nothing
    # safe to parallelize, so workers is ignored here.
    return incremental_em(params, corpus, n_iters, seed=seed)


# ---------------------------------------------------------------------------
# Split


def _perturb_rows(arr: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    w = arr * (1.0 + eps * rng.uniform(-1.0, 1.0, size=arr.shape))
    return w / w.sum(axis=-1, keepdims=True)


def _split_frame(fp: FrameParams, eps: float, rng: np.random.Generator | None) -> FrameParams:
    n_e, n_s = fp.n_events, fp.n_slots
    e_init = np.repeat(fp.e_init, 2) / 2.0
    # Outgoing rows are duplicated, incoming probability is halved between twins.
    e_tran = np.repeat(np.repeat(fp.e_tran, 2, axis=0), 2, axis=1) / 2.0
    e_head = np.repeat(fp.e_head, 2, axis=0)
    slot = np.repeat(np.repeat(fp.slot, 2, axis=0), 2, axis=2) / 2.0
    a_head = np.repeat(fp.a_head, 2, axis=0)
    a_dep = np.repeat(fp.a_dep, 2, axis=0)
    out = FrameParams(e_init, e_tran, e_head, slot, a_head, a_dep)
    if eps > 0.0 and rng is not None:
        # Emission noise breaks the twin symmetry; eps=0 leaves the
        # distribution over observations exactly unchanged.
        out.e_head = _perturb_rows(out.e_head, eps, rng)
        out.slot = _perturb_rows(out.slot, eps, rng)
        out.a_head = _perturb_rows(out.a_head, eps, rng)
        out.a_dep = _perturb_rows(out.a_dep, eps, rng)
    return out


def split_all(params: ModelParams, eps: float = 0.0, seed: int | None = None) -> ModelParams:
    """Split every event and every slot (background included) into twins.

    Twin k of parent p lands at index 2p+k. Incoming probability mass is
    halved between twins, outgoing and emission rows are duplicated, then
    emission rows get multiplicative noise of relative size eps. With eps=0
    the new model assigns every corpus exactly the old likelihood.

    Per-row pseudocounts are halved, keeping total smoothing mass stable as
    row sizes double. The twin pairs are recorded on the result for the
    merge scorer.
    """
    rng = np.random.default_rng(seed) if eps > 0.0 else None
    s = params.structure
    new_structure = StructureConfig(
        n_frames=s.n_frames,
        events_per_frame=[2 * e for e in s.events_per_frame],
        slots_per_frame=[2 * k for k in s.slots_per_frame],
        n_bkg_events=2 * s.n_bkg_events,
        n_bkg_slots=2 * s.n_bkg_slots,
    )
    out = ModelParams(
        structure=new_structure,
        vocab=params.vocab,
        p_bkg=params.p_bkg.copy(),
        p_f_init=params.p_f_init.copy(),
        p_f_tran=params.p_f_tran.copy(),
        frames=[_split_frame(fp, eps, rng) for fp in params.frames],
        background=_split_frame(params.background, eps, rng),
        beta=params.beta,
        alpha={k: v / 2.0 for k, v in params.alpha.items()},
    )
    pairs: list[MergeCandidate] = []
    for f in range(s.n_frames):
        pairs += [MergeCandidate("event", f, (2 * p, 2 * p + 1)) for p in range(s.events_per_frame[f])]
        pairs += [MergeCandidate("slot", f, (2 * p, 2 * p + 1)) for p in range(s.slots_per_frame[f])]
    pairs += [MergeCandidate("event", BACKGROUND_FRAME, (2 * p, 2 * p + 1)) for p in range(s.n_bkg_events)]
    pairs += [MergeCandidate("slot", BACKGROUND_FRAME, (2 * p, 2 * p + 1)) for p in range(s.n_bkg_slots)]
    out.split_pairs = pairs
    return out


# ---------------------------------------------------------------------------
# Merge


def _group_weights(freq: np.ndarray, group: list[int]) -> np.ndarray:
    w = np.array([max(float(freq[k]), 0.0) for k in group])
    if w.sum() <= 0.0:
        return np.full(len(group), 1.0 / len(group))
    return w / w.sum()


def _merge_frame(
    fp: FrameParams,
    event_groups: list[list[int]],
    slot_groups: list[list[int]],
    event_freq: np.ndarray,
    slot_freq: np.ndarray,
) -> FrameParams:
    """Collapse grouped events/slots. Incoming probability sums over a group,
    emission and outgoing rows average with frequency weights."""
    n_e, n_s = len(event_groups), len(slot_groups)
    ew = [_group_weights(event_freq, g) for g in event_groups]
    sw = [_group_weights(slot_freq, g) for g in slot_groups]

    e_init = np.array([fp.e_init[g].sum() for g in event_groups])
    e_tran = np.empty((n_e, n_e))
    for i, gi in enumerate(event_groups):
        rows = np.tensordot(ew[i], fp.e_tran[gi, :], axes=1)
        e_tran[i] = [rows[gj].sum() for gj in event_groups]
    e_head = np.stack([np.tensordot(ew[i], fp.e_head[gi, :], axes=1) for i, gi in enumerate(event_groups)])
    slot = np.empty((n_e, 3, n_s))
    for i, gi in enumerate(event_groups):
        mixed = np.tensordot(ew[i], fp.slot[gi, :, :], axes=1)  # (3, S_old)
        for j, gj in enumerate(slot_groups):
            slot[i, :, j] = mixed[:, gj].sum(axis=1)
    a_head = np.stack([np.tensordot(sw[j], fp.a_head[gj, :], axes=1) for j, gj in enumerate(slot_groups)])
    a_dep = np.stack([np.tensordot(sw[j], fp.a_dep[gj, :], axes=1) for j, gj in enumerate(slot_groups)])
    return FrameParams(e_init, e_tran, e_head, slot, a_head, a_dep)


def _groups_for(n: int, merged_pairs: list[tuple[int, int]]) -> list[list[int]]:
    starts = {a: b for a, b in merged_pairs}
    absorbed = set(starts.values())
    groups = []
    for k in range(n):
        if k in absorbed:
            continue
        groups.append([k, starts[k]] if k in starts else [k])
    return groups


def apply_merges(params: ModelParams, merges: list[MergeCandidate], stats: SufficientStats | None = None) -> ModelParams:
    """Merge the given twin pairs. Weights for row averaging come from the
    expected usage counts in `stats` when provided, else equal weights."""
    s = params.structure
    by_frame: dict[tuple[int, str], list[tuple[int, int]]] = {}
    for m in merges:
        a, b = sorted(m.pair)
        if b != a + 1 or a % 2 != 0:
            raise ValueError(f"merge pair {m.pair} is not a twin pair")
        by_frame.setdefault((m.frame, m.kind), []).append((a, b))

    def freq(frame: int) -> tuple[np.ndarray, np.ndarray]:
        if stats is None:
            fs = None
        else:
            fs = stats.background if frame == BACKGROUND_FRAME else stats.frames[frame]
        fp = params.background if frame == BACKGROUND_FRAME else params.frames[frame]
        if fs is None:
            return np.ones(fp.n_events), np.ones(fp.n_slots)
        return fs.e_head.sum(axis=1), fs.a_head.sum(axis=1)

    frames = []
    events_per_frame = []
    slots_per_frame = []
    for f in range(s.n_frames):
        eg = _groups_for(s.events_per_frame[f], by_frame.get((f, "event"), []))
        sg = _groups_for(s.slots_per_frame[f], by_frame.get((f, "slot"), []))
        ef, sf = freq(f)
        frames.append(_merge_frame(params.frames[f], eg, sg, ef, sf))
        events_per_frame.append(len(eg))
        slots_per_frame.append(len(sg))
    beg = _groups_for(s.n_bkg_events, by_frame.get((BACKGROUND_FRAME, "event"), []))
    bsg = _groups_for(s.n_bkg_slots, by_frame.get((BACKGROUND_FRAME, "slot"), []))
    bef, bsf = freq(BACKGROUND_FRAME)
    background = _merge_frame(params.background, beg, bsg, bef, bsf)

    return ModelParams(
        structure=StructureConfig(
            n_frames=s.n_frames,
            events_per_frame=events_per_frame,
            slots_per_frame=slots_per_frame,
            n_bkg_events=len(beg),
            n_bkg_slots=len(bsg),
        ),
        vocab=params.vocab,
        p_bkg=params.p_bkg.copy(),
        p_f_init=params.p_f_init.copy(),
        p_f_tran=params.p_f_tran.copy(),
        frames=frames,
        background=background,
        beta=params.beta,
        alpha=dict(params.alpha),
    )


def _pointwise_loss(
    trellises: list[Trellis],
    deltas: list[np.ndarray],
) -> float:
    """Likelihood loss when each clause's emissions change by the given
    per-state log ratios, counting one change at a time."""
    loss = 0.0
    for tr, delta in zip(trellises, deltas):
        merged = logsumexp(tr.log_alpha + tr.log_beta + delta, axis=1)
        loss += float(np.sum(tr.loglik - merged))
    return loss


def _event_pair_loss(
    trellises: list[Trellis],
    s1: int,
    s2: int,
    b1: int,
    b2: int,
    w1: float,
    w2: float,
) -> float:
    """Loss of merging two chain states, one clause position at a time:
    forward mass mixes with the usage weights, backward mass adds."""
    loss = 0.0
    idx = [s1, s2, b1, b2]
    lw1, lw2 = _safe_log(w1), _safe_log(w2)
    for tr in trellises:
        la, lb = tr.log_alpha, tr.log_beta
        point = la + lb
        keep = np.delete(point, idx, axis=1)
        rest = logsumexp(keep, axis=1) if keep.shape[1] else np.full(len(point), -np.inf)
        parts = [rest]
        for a, b in ((s1, s2), (b1, b2)):
            ain = logsumexp(np.stack([lw1 + la[:, a], lw2 + la[:, b]]), axis=0)
            aout = logsumexp(np.stack([lb[:, a], lb[:, b]]), axis=0)
            parts.append(ain + aout)
        merged = logsumexp(np.stack(parts), axis=0)
        loss += float(np.sum(tr.loglik - merged))
    return loss


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def score_merges(
    params: ModelParams,
    corpus: IndexedCorpus,
    mode: MergeScoring = MergeScoring.AUTO,
) -> tuple[list[MergeCandidate], SufficientStats]:
    """Estimate the likelihood loss of re-merging each twin pair from the
    last split. Returns scored candidates plus the E-step statistics used
    for usage weights (callers pass both to merge_back).
    """
    if not params.split_pairs:
        raise ValueError("no split pairs recorded; run split_all first")
    if mode == MergeScoring.AUTO:
        mode = MergeScoring.EXACT if len(corpus.documents) <= EXACT_SCORING_MAX_DOCS else MergeScoring.APPROX

    tables = build_tables(params)
    stats = SufficientStats.zeros(params)
    trellises: list[Trellis] = []
    all_details: list[list] = []
    for doc in corpus.documents:
        details = doc_emission_details(tables, doc)
        log_emis = np.stack([d.log_emis for d in details])
        tr = forward_backward(tables, doc, log_emis)
        _accumulate_doc(stats, tables, doc, details, tr)
        stats.loglik += tr.loglik
        stats.n_docs += 1
        trellises.append(tr)
        all_details.append(details)

    candidates = []
    for cand in params.split_pairs:
        a, b = cand.pair
        if cand.frame == BACKGROUND_FRAME:
            fstats = stats.background
        else:
            fstats = stats.frames[cand.frame]
        if cand.kind == "event":
            freq = fstats.e_head.sum(axis=1)
        else:
            freq = fstats.a_head.sum(axis=1)
        tot = float(freq[a] + freq[b])
        w1, w2 = (float(freq[a]) / tot, float(freq[b]) / tot) if tot > 0.0 else (0.5, 0.5)

        if mode == MergeScoring.EXACT:
            loss = _exact_loss(params, corpus, cand, stats, baseline=stats.loglik)
        elif cand.kind == "event" and cand.frame != BACKGROUND_FRAME:
            s1 = tables.state_index(cand.frame, a, False)
            s2 = tables.state_index(cand.frame, b, False)
            b1 = tables.state_index(cand.frame, a, True)
            b2 = tables.state_index(cand.frame, b, True)
            loss = _event_pair_loss(trellises, s1, s2, b1, b2, w1, w2)
        else:
            loss = _emission_ratio_loss(params, corpus, tables, trellises, all_details, cand, (w1, w2))
        candidates.append(MergeCandidate(cand.kind, cand.frame, (a, b), loss, (w1, w2)))
    return candidates, stats


def _exact_loss(
    params: ModelParams,
    corpus: IndexedCorpus,
    cand: MergeCandidate,
    stats: SufficientStats,
    baseline: float,
) -> float:
    from .chain import corpus_loglik

    merged = apply_merges(params, [cand], stats)
    return baseline - corpus_loglik(merged, corpus)


def _emission_ratio_loss(
    params: ModelParams,
    corpus: IndexedCorpus,
    tables: Tables,
    trellises: list[Trellis],
    all_details: list[list],
    cand: MergeCandidate,
    weights: tuple[float, float],
) -> float:
    """Slot merges and background merges only reweight emissions, so the loss
    is a per-clause emission ratio applied to the affected states."""
    merged = apply_merges(params, [cand], None if weights == (0.5, 0.5) else _weight_stats(params, cand, weights))
    mtables = build_tables(merged)
    n_states = tables.n_states
    deltas_by_doc = []
    for doc, details in zip(corpus.documents, all_details):
        deltas = np.zeros((len(doc), n_states))
        for t, clause in enumerate(doc.clauses):
            new_emis = _merged_clause_emission(mtables, clause, cand)
            old_emis = details[t].log_emis
            with np.errstate(invalid="ignore"):
                d = new_emis - old_emis
            # A state impossible both before and after contributes no change.
            deltas[t] = np.where(np.isneginf(new_emis) & np.isneginf(old_emis), 0.0, d)
        deltas_by_doc.append(deltas)
    return _pointwise_loss(trellises, deltas_by_doc)


def _weight_stats(params: ModelParams, cand: MergeCandidate, weights: tuple[float, float]) -> SufficientStats:
    """Minimal stats object that encodes the two usage weights for one merge."""
    stats = SufficientStats.zeros(params)
    fs = stats.background if cand.frame == BACKGROUND_FRAME else stats.frames[cand.frame]
    a, b = cand.pair
    if cand.kind == "event":
        fs.e_head[a, 0] = weights[0]
        fs.e_head[b, 0] = weights[1]
    else:
        fs.a_head[a, 0] = weights[0]
        fs.a_head[b, 0] = weights[1]
    return stats


def _merged_clause_emission(mtables: Tables, clause, cand: MergeCandidate) -> np.ndarray:
    """Emission vector under the merged model. Slot and background merges
    leave the chain's state count unchanged, so indices align one to one
    with the cached trellises."""
    from .chain import clause_log_emission

    if cand.kind == "event" and cand.frame != BACKGROUND_FRAME:
        raise AssertionError("content event pairs use the in/out formula")
    return clause_log_emission(mtables, clause)


# ---------------------------------------------------------------------------


def merge_back(
    params: ModelParams,
    candidates: list[MergeCandidate],
    fraction: float,
    stats: SufficientStats | None = None,
) -> tuple[ModelParams, list[MergeCandidate]]:
    """Merge the ceil(fraction * n) candidates with the lowest loss, pooled
    across kinds and frames. Returns the merged model and what was merged."""
    if not candidates:
        return params, []
    n = math.ceil(fraction * len(candidates))
    chosen = sorted(candidates, key=lambda c: (c.loss, c.kind, c.frame, c.pair))[:n]
    out = apply_merges(params, chosen, stats)
    out.split_pairs = []
    return out, chosen


# ---------------------------------------------------------------------------
# Full training loop


@dataclass
class StageReport:
    cycle: int
    stage: str
    objective: float
    structure: dict
    seconds: float


@dataclass
class TrainReport:
    stages: list[StageReport] = field(default_factory=list)
    final_objective: float = math.nan

    def to_dict(self) -> dict:
        return {
            "stages": [vars(s) for s in self.stages],
            "final_objective": self.final_objective,
        }


def _structure_snapshot(params: ModelParams) -> dict:
    s = params.structure
    return {
        "n_frames": s.n_frames,
        "events_per_frame": list(s.events_per_frame),
        "slots_per_frame": list(s.slots_per_frame),
        "n_bkg_events": s.n_bkg_events,
        "n_bkg_slots": s.n_bkg_slots,
    }


def train(
    corpus: IndexedCorpus,
    vocab: Vocabularies,
    n_frames: int,
    schedule: TrainSchedule | None = None,
    beta: float | None = None,
    alpha: dict | None = None,
    start: ModelParams | None = None,
    workers: int = 1,
) -> tuple[ModelParams, TrainReport]:
    """Fit a model with interleaved EM and split-merge rounds.

    Each cycle runs EM at the current structure; all but the last cycle then
    split every event and slot, specialize the twins with EM, merge back the
    least useful fraction, and settle with a short EM run.
    """
    schedule = schedule or TrainSchedule()
    if start is not None:
        params = start
    else:
        kwargs = {}
        if beta is not None:
            kwargs["beta"] = beta
        params = init_model(
            StructureConfig.initial(n_frames),
            vocab,
            alpha=alpha,
            seed=schedule.seed,
            jitter=schedule.perturb_eps,
            **kwargs,
        )
    report = TrainReport()

    def record(cycle: int, stage: str, objective: float, t0: float) -> None:
        report.stages.append(
            StageReport(cycle, stage, objective, _structure_snapshot(params), time.monotonic() - t0)
        )
        log.info(
            "cycle %d %s: objective %.4f structure %s",
            cycle, stage, objective, report.stages[-1].structure,
        )

    for cycle in range(1, schedule.cycles + 1):
        t0 = time.monotonic()
        params, hist = run_em(
            params, corpus, schedule.em_iters_per_cycle, schedule.mode, schedule.seed + cycle, workers
        )
        record(cycle, "em", hist[-1] if hist else math.nan, t0)

        if cycle == schedule.cycles:
            break

        t0 = time.monotonic()
        params = split_all(params, eps=schedule.perturb_eps, seed=schedule.seed + 1000 + cycle)
        split_pairs = params.split_pairs
        params, hist = run_em(
            params, corpus, schedule.em_iters_per_cycle, schedule.mode, schedule.seed + cycle, workers
        )
        params.split_pairs = split_pairs
        record(cycle, "split+em", hist[-1] if hist else math.nan, t0)

        t0 = time.monotonic()
        candidates, stats = score_merges(params, corpus, schedule.merge_scoring)
        params, chosen = merge_back(params, candidates, schedule.merge_fraction, stats)
        params, hist = run_em(
            params, corpus, schedule.post_merge_iters, schedule.mode, schedule.seed + cycle, workers
        )
        record(cycle, "merge+em", hist[-1] if hist else math.nan, t0)

    report.final_objective = report.stages[-1].objective if report.stages else math.nan
    return params, report
