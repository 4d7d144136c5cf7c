"""Model structure, parameters, sufficient statistics, and (de)serialization.

A model is a set of frames. Each frame owns events and slots; each event has
an initial/transition/emission role within its frame, and each slot emits
argument heads and caseframes. One extra frame-shaped block holds the
background events and slots that absorb off-topic clauses. Frame-level
chain parameters (initial, transition, background switch) live at the top.

Every probability table is a row-stochastic numpy array. The mapping from
counts to probabilities is additive smoothing with a per-family pseudocount,
so the M-step is the mode of a Dirichlet posterior.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .corpus import Vocab, Vocabularies

# p_bkg index convention: content first, background second.
CNT = 0
BKG = 1

# Families that take a pseudocount. "bkg" is the content/background switch.
ALPHA_FAMILIES = (
    "bkg",
    "f_init",
    "f_tran",
    "e_init",
    "e_tran",
    "e_head",
    "slot",
    "a_head",
    "a_dep",
)

DEFAULT_ALPHA = 0.1
DEFAULT_BETA = 0.9

MODEL_FORMAT = "framelearn-model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """A serialized model document is malformed or from an unknown version."""


@dataclass
class StructureConfig:
    """Frame/event/slot counts. Index -1 refers to the background block."""

    n_frames: int
    events_per_frame: list[int]
    slots_per_frame: list[int]
    n_bkg_events: int = 1
    n_bkg_slots: int = 1

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise ValueError("need at least one frame")
        if len(self.events_per_frame) != self.n_frames or len(self.slots_per_frame) != self.n_frames:
            raise ValueError("per-frame count lists must match n_frames")
        counts = self.events_per_frame + self.slots_per_frame + [self.n_bkg_events, self.n_bkg_slots]
        if any(c < 1 for c in counts):
            raise ValueError("every frame needs at least one event and one slot")

    @classmethod
    def initial(cls, n_frames: int, n_bkg_events: int = 1, n_bkg_slots: int = 1) -> "StructureConfig":
        """Starting point for structure search: one event and two slots per frame."""
        return cls(n_frames, [1] * n_frames, [2] * n_frames, n_bkg_events, n_bkg_slots)

    @property
    def n_content_states(self) -> int:
        return sum(self.events_per_frame)

    @property
    def n_states(self) -> int:
        # Every (frame, event) pair exists in a content and a background copy.
        return 2 * self.n_content_states

    def frame_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.events_per_frame)])

    def copy(self) -> "StructureConfig":
        return StructureConfig(
            self.n_frames,
            list(self.events_per_frame),
            list(self.slots_per_frame),
            self.n_bkg_events,
            self.n_bkg_slots,
        )


def _np_eq(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and bool(np.array_equal(a, b))


@dataclass(eq=False)
class FrameParams:
    """Per-frame tables. Shapes: E events, S slots, vocab sizes from the model."""

    e_init: np.ndarray  # (E,)
    e_tran: np.ndarray  # (E, E), rows = previous event
    e_head: np.ndarray  # (E, Ve)
    slot: np.ndarray    # (E, 3, S), rows indexed by (event, arg type)
    a_head: np.ndarray  # (S, Va)
    a_dep: np.ndarray   # (S, Vc)

    @property
    def n_events(self) -> int:
        return len(self.e_init)

    @property
    def n_slots(self) -> int:
        return self.a_head.shape[0]

    def copy(self) -> "FrameParams":
        return FrameParams(*(getattr(self, f).copy() for f in _FRAME_FIELDS))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameParams):
            return NotImplemented
        return all(_np_eq(getattr(self, f), getattr(other, f)) for f in _FRAME_FIELDS)


_FRAME_FIELDS = ("e_init", "e_tran", "e_head", "slot", "a_head", "a_dep")


@dataclass(eq=False)
class ModelParams:
    structure: StructureConfig
    vocab: Vocabularies
    p_bkg: np.ndarray    # (2,), [content, background]
    p_f_init: np.ndarray  # (F,)
    p_f_tran: np.ndarray  # (F, F)
    frames: list[FrameParams]
    background: FrameParams
    beta: float = DEFAULT_BETA
    alpha: dict = field(default_factory=dict)
    # Bookkeeping from the most recent split, consumed by merge scoring.
    # Transient: never serialized, never part of equality.
    split_pairs: list = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        for fam in ALPHA_FAMILIES:
            self.alpha.setdefault(fam, DEFAULT_ALPHA)

    @property
    def n_frames(self) -> int:
        return self.structure.n_frames

    def vocab_sizes(self) -> tuple[int, int, int]:
        v = self.vocab
        return len(v.event_heads), len(v.arg_heads), len(v.caseframes)

    def copy(self) -> "ModelParams":
        return ModelParams(
            structure=self.structure.copy(),
            vocab=self.vocab,
            p_bkg=self.p_bkg.copy(),
            p_f_init=self.p_f_init.copy(),
            p_f_tran=self.p_f_tran.copy(),
            frames=[f.copy() for f in self.frames],
            background=self.background.copy(),
            beta=self.beta,
            alpha=dict(self.alpha),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            self.structure == other.structure
            and self.vocab == other.vocab
            and self.beta == other.beta
            and self.alpha == other.alpha
            and _np_eq(self.p_bkg, other.p_bkg)
            and _np_eq(self.p_f_init, other.p_f_init)
            and _np_eq(self.p_f_tran, other.p_f_tran)
            and self.frames == other.frames
            and self.background == other.background
        )


@dataclass(eq=False)
class FrameStats:
    e_init: np.ndarray
    e_tran: np.ndarray
    e_head: np.ndarray
    slot: np.ndarray
    a_head: np.ndarray
    a_dep: np.ndarray

    @classmethod
    def zeros(cls, n_events: int, n_slots: int, ve: int, va: int, vc: int) -> "FrameStats":
        return cls(
            e_init=np.zeros(n_events),
            e_tran=np.zeros((n_events, n_events)),
            e_head=np.zeros((n_events, ve)),
            slot=np.zeros((n_events, 3, n_slots)),
            a_head=np.zeros((n_slots, va)),
            a_dep=np.zeros((n_slots, vc)),
        )

    def iadd(self, other: "FrameStats", sign: float = 1.0) -> None:
        for f in _FRAME_FIELDS:
            arr = getattr(self, f)
            arr += sign * getattr(other, f)


@dataclass(eq=False)
class SufficientStats:
    """Expected counts from one E pass (or one document's contribution)."""

    bkg: np.ndarray
    f_init: np.ndarray
    f_tran: np.ndarray
    frames: list[FrameStats]
    background: FrameStats
    loglik: float = 0.0
    n_docs: int = 0

    @classmethod
    def zeros(cls, params: ModelParams) -> "SufficientStats":
        s = params.structure
        ve, va, vc = params.vocab_sizes()
        return cls(
            bkg=np.zeros(2),
            f_init=np.zeros(s.n_frames),
            f_tran=np.zeros((s.n_frames, s.n_frames)),
            frames=[
                FrameStats.zeros(s.events_per_frame[f], s.slots_per_frame[f], ve, va, vc)
                for f in range(s.n_frames)
            ],
            background=FrameStats.zeros(s.n_bkg_events, s.n_bkg_slots, ve, va, vc),
        )

    def iadd(self, other: "SufficientStats", sign: float = 1.0) -> None:
        self.bkg += sign * other.bkg
        self.f_init += sign * other.f_init
        self.f_tran += sign * other.f_tran
        for mine, theirs in zip(self.frames, other.frames):
            mine.iadd(theirs, sign)
        self.background.iadd(other.background, sign)
        self.loglik += sign * other.loglik
        self.n_docs += int(sign * other.n_docs)

    def isub(self, other: "SufficientStats") -> None:
        self.iadd(other, sign=-1.0)


def _smooth_rows(counts: np.ndarray, alpha: float) -> np.ndarray:
    """(c + a) / (sum(c) + a*K) along the last axis.

    Incremental count replacement can leave tiny negative residue; clip it
    before normalizing so probabilities stay valid.
    """
    c = np.clip(counts, 0.0, None)
    k = c.shape[-1]
    denom = c.sum(axis=-1, keepdims=True) + alpha * k
    return (c + alpha) / denom


def m_step(stats: SufficientStats, params: ModelParams) -> ModelParams:
    """Maximize the smoothed objective given expected counts.

    Structure, vocab, beta, and pseudocounts carry over from the current
    model; only the probability tables are re-estimated.
    """
    a = params.alpha
    frames = []
    for fs in stats.frames:
        frames.append(_frame_from_stats(fs, a))
    return ModelParams(
        structure=params.structure.copy(),
        vocab=params.vocab,
        p_bkg=_smooth_rows(stats.bkg, a["bkg"]),
        p_f_init=_smooth_rows(stats.f_init, a["f_init"]),
        p_f_tran=_smooth_rows(stats.f_tran, a["f_tran"]),
        frames=frames,
        background=_frame_from_stats(stats.background, a),
        beta=params.beta,
        alpha=dict(a),
    )


def _frame_from_stats(fs: FrameStats, a: dict) -> FrameParams:
    return FrameParams(
        e_init=_smooth_rows(fs.e_init, a["e_init"]),
        e_tran=_smooth_rows(fs.e_tran, a["e_tran"]),
        e_head=_smooth_rows(fs.e_head, a["e_head"]),
        slot=_smooth_rows(fs.slot, a["slot"]),
        a_head=_smooth_rows(fs.a_head, a["a_head"]),
        a_dep=_smooth_rows(fs.a_dep, a["a_dep"]),
    )


def log_prior(params: ModelParams) -> float:
    """Dirichlet log prior up to a constant: sum over families of a * sum(log p).

    Together with the data log likelihood this is the quantity EM with
    additive smoothing cannot decrease.
    """
    a = params.alpha
    total = a["bkg"] * np.log(params.p_bkg).sum()
    total += a["f_init"] * np.log(params.p_f_init).sum()
    total += a["f_tran"] * np.log(params.p_f_tran).sum()
    for fp in [*params.frames, params.background]:
        total += a["e_init"] * np.log(fp.e_init).sum()
        total += a["e_tran"] * np.log(fp.e_tran).sum()
        total += a["e_head"] * np.log(fp.e_head).sum()
        total += a["slot"] * np.log(fp.slot).sum()
        total += a["a_head"] * np.log(fp.a_head).sum()
        total += a["a_dep"] * np.log(fp.a_dep).sum()
    return float(total)


def _jittered_rows(shape: tuple, rng: np.random.Generator | None, jitter: float) -> np.ndarray:
    w = np.ones(shape)
    if rng is not None and jitter > 0.0:
        w *= 1.0 + jitter * rng.uniform(-1.0, 1.0, size=shape)
    return w / w.sum(axis=-1, keepdims=True)


def init_model(
    structure: StructureConfig,
    vocab: Vocabularies,
    beta: float = DEFAULT_BETA,
    alpha: dict | None = None,
    seed: int | None = None,
    jitter: float = 0.05,
) -> ModelParams:
    """Near-uniform starting model.

    jitter=0 gives exactly uniform rows; otherwise each cell is scaled by a
    random factor in [1-jitter, 1+jitter] and the row renormalized, which
    breaks the ties EM cannot break on its own.
    """
    rng = np.random.default_rng(seed) if jitter > 0.0 else None
    ve, va, vc = len(vocab.event_heads), len(vocab.arg_heads), len(vocab.caseframes)

    def frame(n_events: int, n_slots: int) -> FrameParams:
        return FrameParams(
            e_init=_jittered_rows((n_events,), rng, jitter),
            e_tran=_jittered_rows((n_events, n_events), rng, jitter),
            e_head=_jittered_rows((n_events, ve), rng, jitter),
            slot=_jittered_rows((n_events, 3, n_slots), rng, jitter),
            a_head=_jittered_rows((n_slots, va), rng, jitter),
            a_dep=_jittered_rows((n_slots, vc), rng, jitter),
        )

    return ModelParams(
        structure=structure.copy(),
        vocab=vocab,
        p_bkg=_jittered_rows((2,), rng, jitter),
        p_f_init=_jittered_rows((structure.n_frames,), rng, jitter),
        p_f_tran=_jittered_rows((structure.n_frames, structure.n_frames), rng, jitter),
        frames=[
            frame(structure.events_per_frame[f], structure.slots_per_frame[f])
            for f in range(structure.n_frames)
        ],
        background=frame(structure.n_bkg_events, structure.n_bkg_slots),
        beta=beta,
        alpha=dict(alpha) if alpha else {},
    )


def _frame_to_doc(fp: FrameParams) -> dict:
    return {f: getattr(fp, f).tolist() for f in _FRAME_FIELDS}


def _frame_from_doc(doc: dict, n_events: int, n_slots: int, ve: int, va: int, vc: int) -> FrameParams:
    shapes = {
        "e_init": (n_events,),
        "e_tran": (n_events, n_events),
        "e_head": (n_events, ve),
        "slot": (n_events, 3, n_slots),
        "a_head": (n_slots, va),
        "a_dep": (n_slots, vc),
    }
    arrays = {}
    for name, shape in shapes.items():
        if name not in doc:
            raise ModelFormatError(f"frame table {name!r} missing")
        arr = np.asarray(doc[name], dtype=float)
        if arr.shape != shape:
            raise ModelFormatError(f"frame table {name!r} has shape {arr.shape}, expected {shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ModelFormatError(f"frame table {name!r} has invalid entries")
        arrays[name] = arr
    return FrameParams(**arrays)


def serialize_model(params: ModelParams) -> dict:
    s = params.structure
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "structure": {
            "n_frames": s.n_frames,
            "events_per_frame": list(s.events_per_frame),
            "slots_per_frame": list(s.slots_per_frame),
            "n_bkg_events": s.n_bkg_events,
            "n_bkg_slots": s.n_bkg_slots,
        },
        "beta": params.beta,
        "alpha": dict(params.alpha),
        "vocab": {
            "event_heads": list(params.vocab.event_heads.token_of),
            "arg_heads": list(params.vocab.arg_heads.token_of),
            "caseframes": list(params.vocab.caseframes.token_of),
        },
        "p_bkg": params.p_bkg.tolist(),
        "p_f_init": params.p_f_init.tolist(),
        "p_f_tran": params.p_f_tran.tolist(),
        "frames": [_frame_to_doc(fp) for fp in params.frames],
        "background": _frame_to_doc(params.background),
    }


def deserialize_model(doc: dict) -> ModelParams:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a model document")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    try:
        sdoc = doc["structure"]
        structure = StructureConfig(
            n_frames=int(sdoc["n_frames"]),
            events_per_frame=[int(x) for x in sdoc["events_per_frame"]],
            slots_per_frame=[int(x) for x in sdoc["slots_per_frame"]],
            n_bkg_events=int(sdoc["n_bkg_events"]),
            n_bkg_slots=int(sdoc["n_bkg_slots"]),
        )
        vdoc = doc["vocab"]
        vocab = Vocabularies(
            event_heads=_vocab_from_tokens(vdoc["event_heads"]),
            arg_heads=_vocab_from_tokens(vdoc["arg_heads"]),
            caseframes=_vocab_from_tokens(vdoc["caseframes"]),
        )
        beta = float(doc["beta"])
        alpha = {k: float(v) for k, v in doc["alpha"].items()}
        ve, va, vc = len(vocab.event_heads), len(vocab.arg_heads), len(vocab.caseframes)
        p_bkg = np.asarray(doc["p_bkg"], dtype=float)
        p_f_init = np.asarray(doc["p_f_init"], dtype=float)
        p_f_tran = np.asarray(doc["p_f_tran"], dtype=float)
        frames = [
            _frame_from_doc(
                fdoc, structure.events_per_frame[f], structure.slots_per_frame[f], ve, va, vc
            )
            for f, fdoc in enumerate(doc["frames"])
        ]
        background = _frame_from_doc(
            doc["background"], structure.n_bkg_events, structure.n_bkg_slots, ve, va, vc
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model document: {e}") from None
    if len(doc["frames"]) != structure.n_frames:
        raise ModelFormatError("frame list length does not match structure")
    if p_bkg.shape != (2,) or p_f_init.shape != (structure.n_frames,):
        raise ModelFormatError("top-level table shapes do not match structure")
    if p_f_tran.shape != (structure.n_frames, structure.n_frames):
        raise ModelFormatError("frame transition shape does not match structure")
    return ModelParams(
        structure=structure,
        vocab=vocab,
        p_bkg=p_bkg,
        p_f_init=p_f_init,
        p_f_tran=p_f_tran,
        frames=frames,
        background=background,
        beta=beta,
        alpha=alpha,
    )


def _vocab_from_tokens(tokens: list) -> Vocab:
    token_of = [str(t) for t in tokens]
    return Vocab(token_of=token_of, id_of={t: i for i, t in enumerate(token_of)})


def save_model(params: ModelParams, path) -> None:
    """Serialize to JSON, writing atomically (temp file + rename)."""
    doc = serialize_model(params)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize_model(json.load(fh))
