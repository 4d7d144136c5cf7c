"""Command-line front end.

Subcommands: train, decode, classify, evaluate, inspect, synth. Every
subcommand accepts --config pointing at a JSON object of option defaults;
explicit flags win over config values, config values win over built-ins.

Exit codes: 0 success, 1 usage problems, 2 bad input data, 3 numeric
failure during fitting.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

from .corpus import (
    CorpusError,
    build_vocab,
    index_corpus,
    load_corpus,
    write_corpus,
)
from .evaluate import evaluate, load_gold
from .extract import classify_document, decode_corpus, dump_frames
from .learn import (
    MergeScoring,
    NumericError,
    TrainMode,
    TrainSchedule,
    train,
)
from .params import (
    ALPHA_FAMILIES,
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    ModelFormatError,
    load_model,
    save_model,
)
from .synth import planted_model, sample_corpus

log = logging.getLogger(__name__)

_UNSET = object()


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


class _Sub:
    """A subcommand with config-aware options."""

    def __init__(self, subparsers, name: str, help_text: str):
        self.parser = subparsers.add_parser(name, help=help_text, description=help_text)
        self.parser.add_argument(
            "--config", default=None, metavar="FILE",
            help="JSON object of option defaults; explicit flags override it",
        )
        self.specs: dict[str, tuple] = {}  # dest -> (default, type, required, choices)

    def opt(self, flag: str, *, type=str, default=None, required: bool = False,
            choices=None, help: str = "", metavar=None):
        dest = flag.lstrip("-").replace("-", "_")
        self.parser.add_argument(
            flag, dest=dest, type=type, default=_UNSET, choices=choices,
            help=help, metavar=metavar,
        )
        self.specs[dest] = (default, type, required, choices)
        return self

    def resolve(self, args: argparse.Namespace) -> None:
        config = {}
        if args.config is not None:
            try:
                with open(args.config, "r", encoding="utf-8") as fh:
                    config = json.load(fh)
            except (OSError, json.JSONDecodeError) as e:
                self.parser.error(f"cannot read config file: {e}")
            if not isinstance(config, dict):
                self.parser.error("config file must hold a JSON object")
            unknown = sorted(set(config) - set(self.specs))
            if unknown:
                self.parser.error(f"unknown config keys: {', '.join(unknown)}")
        for dest, (default, typ, required, choices) in self.specs.items():
            value = getattr(args, dest)
            if value is _UNSET:
                if dest in config:
                    value = config[dest]
                    if value is not None:
                        try:
                            value = typ(value)
                        except (TypeError, ValueError):
                            self.parser.error(f"config key {dest!r}: bad value {config[dest]!r}")
                    if choices is not None and value not in choices:
                        self.parser.error(f"config key {dest!r}: must be one of {choices}")
                else:
                    value = default
                setattr(args, dest, value)
            if required and getattr(args, dest) is None:
                self.parser.error(f"--{dest.replace('_', '-')} is required")


@contextmanager
def _out_stream(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _load_indexed(corpus_path, model):
    corpus = load_corpus(corpus_path)
    return corpus, index_corpus(corpus, model.vocab)


# ---------------------------------------------------------------------------
# Handlers


def _cmd_train(args) -> int:
    corpus = load_corpus(args.corpus)
    vocab = build_vocab(corpus, args.min_count)
    icorpus = index_corpus(corpus, vocab)
    schedule = TrainSchedule(
        cycles=args.cycles,
        em_iters_per_cycle=args.em_iters,
        post_merge_iters=args.post_merge_iters,
        merge_fraction=args.merge_fraction,
        perturb_eps=args.perturb_eps,
        mode=TrainMode(args.mode),
        merge_scoring=MergeScoring(args.merge_scoring),
        seed=args.seed,
    )
    alpha = {fam: args.alpha for fam in ALPHA_FAMILIES}
    params, report = train(
        icorpus, vocab, args.frames, schedule,
        beta=args.beta, alpha=alpha, workers=args.workers,
    )
    save_model(params, args.model)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    s = params.structure
    print(
        f"trained {s.n_frames} frames "
        f"(events {s.events_per_frame}, slots {s.slots_per_frame}); "
        f"objective {report.final_objective:.4f}; model written to {args.model}"
    )
    return 0


def _cmd_decode(args) -> int:
    model = load_model(args.model)
    corpus, icorpus = _load_indexed(args.corpus, model)
    assignments, entities = decode_corpus(model, icorpus, corpus)
    with _out_stream(args.out) as fh:
        for e in entities:
            fh.write(json.dumps({
                "doc_id": e.doc_id,
                "clause_index": e.clause_index,
                "arg_index": e.arg_index,
                "frame": e.frame,
                "slot": e.slot,
                "label": e.label,
                "head_lemma": e.head_lemma,
                "arg_type": e.arg_type.name,
                "caseframe": e.caseframe,
            }, ensure_ascii=False) + "\n")
    if args.assignments:
        with open(args.assignments, "w", encoding="utf-8") as fh:
            for a in assignments:
                fh.write(json.dumps({
                    "doc_id": a.doc_id,
                    "states": [[st.frame, st.event, st.bkg] for st in a.states],
                    "slots": [[int(s) for s in row] for row in a.slots],
                    "score": a.score,
                }) + "\n")
    log.info("decoded %d documents into %d entities", len(assignments), len(entities))
    return 0


def _cmd_classify(args) -> int:
    model = load_model(args.model)
    if not 0 <= args.frame < model.n_frames:
        raise CorpusError(f"frame {args.frame} out of range (model has {model.n_frames})")
    _, icorpus = _load_indexed(args.corpus, model)
    with _out_stream(args.out) as fh:
        for doc in icorpus.documents:
            relevant = classify_document(
                model, doc, args.frame, args.avg_threshold, args.trigger_threshold
            )
            fh.write(json.dumps({"doc_id": doc.doc_id, "frame": args.frame, "relevant": relevant}) + "\n")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    corpus, icorpus = _load_indexed(args.corpus, model)
    _, entities = decode_corpus(model, icorpus, corpus)
    golds = load_gold(args.gold)
    report = evaluate(entities, golds, n_to_one=args.n_to_one)
    with _out_stream(args.out) as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    return 0


def _cmd_inspect(args) -> int:
    model = load_model(args.model)
    with _out_stream(args.out) as fh:
        json.dump(dump_frames(model, args.top_k), fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return 0


def _cmd_synth(args) -> int:
    params = load_model(args.model) if args.model else planted_model()
    planted = sample_corpus(
        params, args.docs, seed=args.seed,
        min_clauses=args.min_clauses, max_clauses=args.max_clauses,
        min_args=args.min_args, max_args=args.max_args,
    )
    write_corpus(planted.corpus, args.out)
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            for doc, truth, lj in zip(planted.corpus.documents, planted.truth, planted.log_joints):
                fh.write(json.dumps({
                    "doc_id": doc.doc_id,
                    "states": [[st.frame, st.event, st.bkg] for st in truth.states],
                    "slots": truth.slots,
                    "log_joint": lj,
                }) + "\n")
    print(f"wrote {len(planted.corpus.documents)} documents to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser() -> tuple[_Parser, dict[str, _Sub]]:
    parser = _Parser(prog="framelearn", description="Frame induction over clause-sequenced text")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    subs: dict[str, _Sub] = {}

    sub = _Sub(subparsers, "train", "fit a model on a corpus")
    sub.opt("--corpus", required=True, help="clause-record JSONL file")
    sub.opt("--model", required=True, help="output model path (written atomically)")
    sub.opt("--frames", type=int, default=10, help="number of content frames")
    sub.opt("--cycles", type=int, default=3, help="split-merge cycles")
    sub.opt("--em-iters", type=int, default=10, help="EM iterations per stage")
    sub.opt("--post-merge-iters", type=int, default=5, help="EM iterations after each merge")
    sub.opt("--merge-fraction", type=float, default=0.5, help="fraction of split pairs to merge back")
    sub.opt("--merge-scoring", default="auto", choices=[m.value for m in MergeScoring],
            help="merge loss scoring: exact, approx, or auto")
    sub.opt("--beta", type=float, default=DEFAULT_BETA, help="frame stickiness in [0,1]")
    sub.opt("--alpha", type=float, default=DEFAULT_ALPHA, help="pseudocount for all families")
    sub.opt("--perturb-eps", type=float, default=0.02, help="noise for init and split twins")
    sub.opt("--seed", type=int, default=0, help="random seed")
    sub.opt("--mode", default="batch", choices=[m.value for m in TrainMode], help="EM flavor")
    sub.opt("--workers", type=int, default=1, help="parallel processes for batch E passes")
    sub.opt("--min-count", type=int, default=1, help="vocabulary frequency cutoff")
    sub.opt("--report", default=None, help="optional path for the training report JSON")
    sub.parser.set_defaults(handler=_cmd_train)
    subs["train"] = sub

    sub = _Sub(subparsers, "decode", "extract events and entities with a trained model")
    sub.opt("--corpus", required=True, help="clause-record JSONL file")
    sub.opt("--model", required=True, help="trained model path")
    sub.opt("--out", default=None, help="entity JSONL output (default stdout)")
    sub.opt("--assignments", default=None, help="optional per-document state dump")
    sub.parser.set_defaults(handler=_cmd_decode)
    subs["decode"] = sub

    sub = _Sub(subparsers, "classify", "test documents for relevance to a frame")
    sub.opt("--corpus", required=True, help="clause-record JSONL file")
    sub.opt("--model", required=True, help="trained model path")
    sub.opt("--frame", type=int, required=True, help="frame index to test against")
    sub.opt("--avg-threshold", type=float, default=0.01,
            help="minimum mean event-head probability under the frame")
    sub.opt("--trigger-threshold", type=float, default=0.2,
            help="minimum per-word frame posterior for a trigger")
    sub.opt("--out", default=None, help="JSONL output (default stdout)")
    sub.parser.set_defaults(handler=_cmd_classify)
    subs["classify"] = sub

    sub = _Sub(subparsers, "evaluate", "score extractions against gold slot fills")
    sub.opt("--corpus", required=True, help="clause-record JSONL file")
    sub.opt("--model", required=True, help="trained model path")
    sub.opt("--gold", required=True, help="gold entity JSONL file")
    sub.opt("--n-to-one", type=int, default=1, help="induced slots mappable to one gold slot")
    sub.opt("--out", default=None, help="report JSON output (default stdout)")
    sub.parser.set_defaults(handler=_cmd_evaluate)
    subs["evaluate"] = sub

    sub = _Sub(subparsers, "inspect", "print what each frame has learned")
    sub.opt("--model", required=True, help="trained model path")
    sub.opt("--top-k", type=int, default=5, help="entries per emission list")
    sub.opt("--out", default=None, help="JSON output (default stdout)")
    sub.parser.set_defaults(handler=_cmd_inspect)
    subs["inspect"] = sub

    sub = _Sub(subparsers, "synth", "sample a synthetic corpus with known structure")
    sub.opt("--out", required=True, help="corpus JSONL output path")
    sub.opt("--docs", type=int, default=100, help="number of documents")
    sub.opt("--seed", type=int, default=0, help="random seed")
    sub.opt("--model", default=None, help="sample from this model instead of the built-in one")
    sub.opt("--truth", default=None, help="optional JSONL dump of the sampled latents")
    sub.opt("--min-clauses", type=int, default=2)
    sub.opt("--max-clauses", type=int, default=8)
    sub.opt("--min-args", type=int, default=0)
    sub.opt("--max-args", type=int, default=3)
    sub.parser.set_defaults(handler=_cmd_synth)
    subs["synth"] = sub

    return parser, subs


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command is None:
        parser.error("a subcommand is required")
    subs[args.command].resolve(args)
    try:
        return args.handler(args)
    except (CorpusError, ModelFormatError) as e:
        print(f"framelearn: data error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"framelearn: cannot read or write: {e}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"framelearn: malformed JSON input: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"framelearn: numeric failure: {e}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
