"""Synthetic corpora with known latent structure.

The sampler walks the generative story forward: frame, event, and
background flag per clause, then the event head and, per argument, a slot
with its head and caseframe. The sampled latents are kept so learners can
be scored against ground truth, and each document's log joint is
accumulated factor by factor during sampling (background events are
marginalized in the joint, matching the fixed-assignment scorer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .chain import CollapsedState
from .corpus import (
    UNK,
    ArgType,
    ArgumentRecord,
    ClauseRecord,
    Corpus,
    Document,
    Vocab,
    Vocabularies,
)
from .params import BKG, CNT, FrameParams, ModelParams, StructureConfig


@dataclass
class DocTruth:
    states: list[CollapsedState]
    slots: list[list[int]]  # per clause, slot id per argument
    bkg_events: list[int | None]  # sampled background event, None on content clauses


@dataclass
class PlantedCorpus:
    corpus: Corpus
    truth: list[DocTruth]
    log_joints: list[float]


def _draw(rng: np.random.Generator, p: np.ndarray) -> int:
    return int(rng.choice(len(p), p=p / p.sum()))


def _dep_of(caseframe: str) -> str:
    return caseframe.split(">", 1)[1] if ">" in caseframe else caseframe


def sample_corpus(
    params: ModelParams,
    n_docs: int,
    seed: int = 0,
    min_clauses: int = 2,
    max_clauses: int = 8,
    min_args: int = 0,
    max_args: int = 3,
    doc_prefix: str = "synth",
) -> PlantedCorpus:
    """Ancestral sampling of whole documents.

    Clause counts are uniform on [min_clauses, max_clauses], argument counts
    uniform on [min_args, max_args], argument types uniform. The returned
    corpus carries explicit arg_type and caseframe fields, so it indexes
    back to exactly what was sampled.
    """
    rng = np.random.default_rng(seed)
    vocab = params.vocab
    docs: list[Document] = []
    truths: list[DocTruth] = []
    log_joints: list[float] = []

    for d in range(n_docs):
        doc_id = f"{doc_prefix}-{d:04d}"
        length = int(rng.integers(min_clauses, max_clauses + 1))
        clauses: list[ClauseRecord] = []
        states: list[CollapsedState] = []
        slot_truth: list[list[int]] = []
        bkg_events: list[int | None] = []
        lj = 0.0
        frame = event = -1
        for t in range(length):
            if t == 0:
                frame = _draw(rng, params.p_f_init)
                event = _draw(rng, params.frames[frame].e_init)
                bkg = False
                lj += math.log(float(params.p_f_init[frame]))
                lj += math.log(float(params.frames[frame].e_init[event]))
            else:
                bkg = bool(_draw(rng, params.p_bkg) == BKG)
                lj += math.log(float(params.p_bkg[BKG if bkg else CNT]))
                if not bkg:
                    prev_frame, prev_event = frame, event
                    if rng.random() < params.beta:
                        frame = prev_frame
                    else:
                        frame = _draw(rng, params.p_f_tran[prev_frame])
                    # The joint marginalizes the sticky-vs-explicit route.
                    if frame == prev_frame:
                        lj += math.log(
                            params.beta
                            + (1.0 - params.beta) * float(params.p_f_tran[prev_frame, frame])
                        )
                        event = _draw(rng, params.frames[frame].e_tran[prev_event])
                        lj += math.log(float(params.frames[frame].e_tran[prev_event, event]))
                    else:
                        lj += math.log(
                            (1.0 - params.beta) * float(params.p_f_tran[prev_frame, frame])
                        )
                        event = _draw(rng, params.frames[frame].e_init)
                        lj += math.log(float(params.frames[frame].e_init[event]))

            n_args = int(rng.integers(min_args, max_args + 1))
            arg_types = [ArgType(int(rng.integers(0, 3))) for _ in range(n_args)]
            if bkg:
                fp = params.background
                bev = _draw(rng, fp.e_init)
                head = _draw(rng, fp.e_head[bev])
                slots = [_draw(rng, fp.slot[bev, int(a)]) for a in arg_types]
                # Marginalize the background event: mix event-dependent factors.
                mix = 0.0
                for e in range(fp.n_events):
                    term = float(fp.e_init[e]) * float(fp.e_head[e, head])
                    for a, s in zip(arg_types, slots):
                        term *= float(fp.slot[e, int(a), s])
                    mix += term
                lj += math.log(mix)
                bkg_events.append(bev)
            else:
                fp = params.frames[frame]
                head = _draw(rng, fp.e_head[event])
                slots = [_draw(rng, fp.slot[event, int(a)]) for a in arg_types]
                lj += math.log(float(fp.e_head[event, head]))
                for a, s in zip(arg_types, slots):
                    lj += math.log(float(fp.slot[event, int(a), s]))
                bkg_events.append(None)

            args = []
            for a, s in zip(arg_types, slots):
                ah = _draw(rng, fp.a_head[s])
                cf = _draw(rng, fp.a_dep[s])
                lj += math.log(float(fp.a_head[s, ah])) + math.log(float(fp.a_dep[s, cf]))
                cf_tok = vocab.caseframes.token(cf)
                args.append(
                    ArgumentRecord(a, vocab.arg_heads.token(ah), _dep_of(cf_tok), cf_tok)
                )
            clauses.append(
                ClauseRecord(doc_id, t, t, vocab.event_heads.token(head), args)
            )
            states.append(CollapsedState(frame, event, bkg))
            slot_truth.append(list(slots))

        docs.append(Document(doc_id, clauses))
        truths.append(DocTruth(states, slot_truth, bkg_events))
        log_joints.append(lj)

    return PlantedCorpus(Corpus(docs), truths, log_joints)


# ---------------------------------------------------------------------------
# Model constructors


def _vocab_of(tokens: list[str]) -> Vocab:
    token_of = [UNK] + tokens
    return Vocab(token_of=token_of, id_of={t: i for i, t in enumerate(token_of)})


def _spread(size: int, hot: list[int], mass: float) -> np.ndarray:
    """Distribution with `mass` shared by the hot ids, the rest spread
    uniformly over everything else."""
    p = np.full(size, (1.0 - mass) / (size - len(hot)))
    for i in hot:
        p[i] = mass / len(hot)
    return p / p.sum()


def planted_model(
    n_frames: int = 2,
    events_per_frame: int = 2,
    slots_per_frame: int = 3,
    tokens_per_unit: int = 3,
    sharpness: float = 0.9,
    beta: float = 0.9,
    p_background: float = 0.2,
) -> ModelParams:
    """A sharp model with disjoint emission supports.

    Every event gets its own event-head tokens carrying `sharpness` of the
    mass, every slot its own argument-head and caseframe tokens, and the
    background block its own vocabulary region. Slot choice is tied to the
    argument type (type k prefers slot k mod S), so slots are identifiable.
    """
    k = tokens_per_unit
    head_tokens: list[str] = []
    arg_tokens: list[str] = []
    cf_tokens: list[str] = []
    for f in range(n_frames):
        for e in range(events_per_frame):
            head_tokens += [f"ev-f{f}e{e}-{i}" for i in range(k)]
        for s in range(slots_per_frame):
            arg_tokens += [f"arg-f{f}s{s}-{i}" for i in range(k)]
            cf_tokens += [f"cf-f{f}s{s}>dep{i}" for i in range(k)]
    head_tokens += [f"ev-bkg-{i}" for i in range(k)]
    arg_tokens += [f"arg-bkg-{i}" for i in range(k)]
    cf_tokens += [f"cf-bkg>dep{i}" for i in range(k)]

    vocab = Vocabularies(_vocab_of(head_tokens), _vocab_of(arg_tokens), _vocab_of(cf_tokens))
    ve, va, vc = len(vocab.event_heads), len(vocab.arg_heads), len(vocab.caseframes)

    def head_ids(f: int, e: int) -> list[int]:
        base = 1 + (f * events_per_frame + e) * k
        return list(range(base, base + k))

    def slot_ids(f: int, s: int) -> list[int]:
        base = 1 + (f * slots_per_frame + s) * k
        return list(range(base, base + k))

    bkg_head_ids = list(range(1 + n_frames * events_per_frame * k, ve))
    bkg_arg_ids = list(range(1 + n_frames * slots_per_frame * k, va))

    frames = []
    for f in range(n_frames):
        ne, ns = events_per_frame, slots_per_frame
        e_init = _spread(ne, [0], 0.7) if ne > 1 else np.ones(1)
        e_tran = np.stack([_spread(ne, [(e + 1) % ne], 0.7) for e in range(ne)]) if ne > 1 else np.ones((1, 1))
        e_head = np.stack([_spread(ve, head_ids(f, e), sharpness) for e in range(ne)])
        slot = np.stack(
            [
                np.stack([_spread(ns, [a % ns], 0.8) for a in range(3)])
                for _ in range(ne)
            ]
        )
        a_head = np.stack([_spread(va, slot_ids(f, s), sharpness) for s in range(ns)])
        a_dep = np.stack([_spread(vc, slot_ids(f, s), sharpness) for s in range(ns)])
        frames.append(FrameParams(e_init, e_tran, e_head, slot, a_head, a_dep))

    background = FrameParams(
        e_init=np.ones(1),
        e_tran=np.ones((1, 1)),
        e_head=_spread(ve, bkg_head_ids, sharpness)[None, :],
        slot=np.ones((1, 3, 1)),
        a_head=_spread(va, bkg_arg_ids, sharpness)[None, :],
        a_dep=_spread(vc, bkg_arg_ids, sharpness)[None, :],
    )

    structure = StructureConfig(
        n_frames=n_frames,
        events_per_frame=[events_per_frame] * n_frames,
        slots_per_frame=[slots_per_frame] * n_frames,
        n_bkg_events=1,
        n_bkg_slots=1,
    )
    return ModelParams(
        structure=structure,
        vocab=vocab,
        p_bkg=np.array([1.0 - p_background, p_background]),
        p_f_init=np.full(n_frames, 1.0 / n_frames),
        p_f_tran=np.full((n_frames, n_frames), 1.0 / n_frames),
        frames=frames,
        background=background,
        beta=beta,
    )


def random_model(
    seed: int,
    n_frames: int = 2,
    max_events: int = 2,
    max_slots: int = 2,
    vocab_size: int = 5,
    concentration: float = 1.0,
) -> ModelParams:
    """Model with Dirichlet-random rows and random per-frame sizes. Intended
    for differential tests against the exhaustive reference implementations."""
    rng = np.random.default_rng(seed)
    structure = StructureConfig(
        n_frames=n_frames,
        events_per_frame=[int(rng.integers(1, max_events + 1)) for _ in range(n_frames)],
        slots_per_frame=[int(rng.integers(1, max_slots + 1)) for _ in range(n_frames)],
        n_bkg_events=int(rng.integers(1, max_events + 1)),
        n_bkg_slots=int(rng.integers(1, max_slots + 1)),
    )
    tokens = [f"w{i}" for i in range(vocab_size - 1)]
    vocab = Vocabularies(_vocab_of(tokens), _vocab_of(tokens), _vocab_of(tokens))
    ve = vocab_size

    def row(*shape: int) -> np.ndarray:
        return rng.dirichlet(np.full(shape[-1], concentration), size=shape[:-1] or None)

    def frame(ne: int, ns: int) -> FrameParams:
        return FrameParams(
            e_init=row(ne),
            e_tran=row(ne, ne),
            e_head=row(ne, ve),
            slot=row(ne, 3, ns),
            a_head=row(ns, ve),
            a_dep=row(ns, ve),
        )

    return ModelParams(
        structure=structure,
        vocab=vocab,
        p_bkg=row(2),
        p_f_init=row(n_frames),
        p_f_tran=row(n_frames, n_frames),
        frames=[
            frame(structure.events_per_frame[f], structure.slots_per_frame[f])
            for f in range(n_frames)
        ],
        background=frame(structure.n_bkg_events, structure.n_bkg_slots),
        beta=float(rng.uniform(0.2, 0.95)),
    )


# ---------------------------------------------------------------------------
# Recovery scoring


def true_arg_labels(planted: PlantedCorpus) -> list[tuple]:
    """One label per argument, in corpus order: ("bkg", slot) on background
    clauses, (frame, slot) otherwise."""
    labels = []
    for doc, truth in zip(planted.corpus.documents, planted.truth):
        for clause, state, slots in zip(doc.clauses, truth.states, truth.slots):
            for s in slots:
                labels.append(("bkg", s) if state.bkg else (state.frame, s))
    return labels


@dataclass
class RecoveryScore:
    f1: float
    purity: float
    n_args: int
    matching: dict = field(default_factory=dict)


def recovery_score(true_labels: list, pred_labels: list) -> RecoveryScore:
    """Agreement between two labelings of the same arguments under the best
    one-to-one relabeling, found on the label contingency table. With every
    argument carrying exactly one label on each side, precision and recall
    coincide, so the score is a single F1. Purity ignores the one-to-one
    constraint and is always at least as high.
    """
    if len(true_labels) != len(pred_labels):
        raise ValueError("label lists differ in length")
    n = len(true_labels)
    if n == 0:
        return RecoveryScore(0.0, 0.0, 0, {})
    # Labels are opaque hashables; sort by repr only to fix an order.
    t_ids = {lab: i for i, lab in enumerate(sorted(set(true_labels), key=repr))}
    p_ids = {lab: i for i, lab in enumerate(sorted(set(pred_labels), key=repr))}
    table = np.zeros((len(t_ids), len(p_ids)))
    for t, p in zip(true_labels, pred_labels):
        table[t_ids[t], p_ids[p]] += 1
    rows, cols = linear_sum_assignment(table, maximize=True)
    matched = float(table[rows, cols].sum())
    t_names = {i: lab for lab, i in t_ids.items()}
    p_names = {i: lab for lab, i in p_ids.items()}
    matching = {t_names[r]: p_names[c] for r, c in zip(rows, cols) if table[r, c] > 0}
    purity = float(table.max(axis=0).sum()) / n
    return RecoveryScore(matched / n, purity, n, matching)
