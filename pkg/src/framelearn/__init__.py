"""Unsupervised frame induction over clause-sequenced documents.

Learns frames (event sequences plus entity slots) from corpora of
syntactically analyzed clauses, extracts events and entities by decoding,
and scores extractions against gold slot fills.
"""

from .corpus import (
    ArgType,
    ArgumentRecord,
    ClauseRecord,
    Corpus,
    CorpusError,
    Document,
    IndexedCorpus,
    IntegrityError,
    ParseError,
    Vocab,
    Vocabularies,
    build_vocab,
    index_corpus,
    load_corpus,
    write_corpus,
)
from .params import (
    FrameParams,
    ModelFormatError,
    ModelParams,
    StructureConfig,
    SufficientStats,
    init_model,
    load_model,
    m_step,
    save_model,
)
from .chain import (
    Assignment,
    CollapsedState,
    Tables,
    Trellis,
    assignment_log_joint,
    brute_force_loglik,
    build_tables,
    corpus_loglik,
    forward_backward,
    viterbi,
)
from .learn import (
    MergeCandidate,
    MergeScoring,
    NumericError,
    TrainMode,
    TrainReport,
    TrainSchedule,
    batch_em,
    e_step,
    incremental_em,
    merge_back,
    score_merges,
    split_all,
    train,
)
from .extract import (
    ExtractedEntity,
    classify_document,
    decode_corpus,
    dump_frames,
    frame_posterior,
    frame_word_prob,
)
from .evaluate import GoldEntity, Report, evaluate, fit_mapping, load_gold, score
from .synth import PlantedCorpus, planted_model, recovery_score, sample_corpus

__version__ = "0.1.0"
