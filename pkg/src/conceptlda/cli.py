"""Command-line front end: ingest, synth, train, query, eval, agree.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/degenerate error.
"""
import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__, gibbs, online
from .corpus import CorpusFormatError, ingest, load_corpus, read_stopwords, save_corpus
from .detect import OutOfVocabularyError, write_detections
from .evaluate import (AnnotationFormatError, DegenerateAgreementError, UndefinedRateError,
                       ac1_pvalue, build_gold, contingency, format_report, gwet_ac1, prf,
                       read_ratings, read_tags, report_csv, reuse_rate, split_by_keyword)
from .model import Hyperparameters, ModelFormatError, generate_corpus, load_model, save_model
from .pipeline import default_methods, method_predictions, query_set, run_method

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _unit_float(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


# destinations do not change results, so they stay out of the config hash
_NOT_CONFIG = ("func", "output", "state", "truth")


def provenance(args, seed=None):
    """Header recorded in every output file: config hash, seed, version."""
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
              if k not in _NOT_CONFIG}
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()
    return {"tool": "conceptlda", "version": __version__, "config_hash": digest[:16],
            "seed": seed, "config": config}


def _hyper(args):
    return Hyperparameters(args.k, args.alpha, args.beta)


def cmd_ingest(args):
    stop = read_stopwords(args.stopwords) if args.stopwords else ()
    corpus = ingest(args.input, stop, args.min_df)
    save_corpus(corpus, args.output, provenance(args))
    print(f"segments (M): {corpus.M}")
    print(f"empty segments: {sum(1 for _, ids in corpus.segments if len(ids) == 0)}")
    print(f"vocabulary (V): {corpus.V}")
    print(f"tokens: {corpus.n_tokens}")
    for reason, n in sorted(corpus.filtered.items()):
        print(f"filtered ({reason}): {n}")


def cmd_synth(args):
    hyper = _hyper(args)
    corpus, phi, theta, z = generate_corpus(hyper, args.segments, args.length, args.seed,
                                            vocabulary=args.vocab_size)
    save_corpus(corpus, args.output, provenance(args, args.seed))
    if args.truth:
        truth = {"provenance": provenance(args, args.seed), "phi": phi.tolist(),
                 "theta": theta.tolist(), "z": [zi.tolist() for zi in z]}
        Path(args.truth).write_text(json.dumps(truth) + "\n", encoding="utf-8")
    print(f"segments (M): {corpus.M}\nvocabulary (V): {corpus.V}\ntokens: {corpus.n_tokens}")


def cmd_train(args):
    corpus = load_corpus(args.corpus)
    hyper = _hyper(args)
    prov = provenance(args, args.seed)
    config = {"engine": args.engine, "seed": args.seed, **hyper.to_dict()}
    if args.engine == "gibbs":
        config.update(burn_in=args.burn_in, n_average=args.average)
        state, model = gibbs.run(corpus, hyper, args.burn_in, args.seed, args.average, config)
        if args.state:
            gibbs.save_state(state, args.state, prov)
    else:
        config.update(passes=args.passes, batch_size=args.batch_size, tau0=args.tau0,
                      kappa=args.kappa)
        state, model = online.train(corpus, hyper, args.passes, args.batch_size, args.tau0,
                                    args.kappa, args.seed, config=config)
        if args.state:
            online.save_state(state, args.state, prov)
    save_model(model, args.output, prov)
    print(f"trained {args.engine} model: K={model.K} V={model.V} M={model.M}")


def _load_models(args, corpus):
    models = {"online_model": None, "gibbs_model": None, "gibbs_state": None}
    if getattr(args, "online_model", None):
        models["online_model"] = load_model(args.online_model)
    if getattr(args, "gibbs_model", None):
        models["gibbs_model"] = load_model(args.gibbs_model)
        if not args.gibbs_state:
            raise UsageError("--gibbs-model needs --gibbs-state")
        models["gibbs_state"] = gibbs.load_state(args.gibbs_state, corpus)
    for key in ("online_model", "gibbs_model"):
        m = models[key]
        if m is not None and m.vocabulary and m.vocabulary != corpus.vocabulary.terms:
            raise ModelFormatError(f"{key.replace('_', ' ')} was trained on another vocabulary")
    return models


def cmd_query(args):
    corpus = load_corpus(args.corpus)
    models = _load_models(args, corpus)
    hits = []
    for word in args.word:
        try:
            segs = run_method(args.method, corpus, word, top_n=args.top_n,
                              theta_threshold=args.theta_threshold, fallback=args.fallback,
                              **models)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        hits.extend((word.lower(), sid, args.method) for sid in segs)
        print(f"{word}: {len(segs)} segment(s)")
    write_detections(args.output, hits, provenance(args))


def cmd_eval(args):
    corpus = load_corpus(args.corpus)
    models = _load_models(args, corpus)
    golds = {}
    for spec in args.annotations:
        label, sep, path = spec.partition("=")
        if not sep:
            label, path = Path(spec).stem, spec
        golds[label] = build_gold(read_ratings(path), args.aggregation)
    methods = args.methods.split(",") if args.methods else default_methods(
        models["online_model"] is not None, models["gibbs_model"] is not None, args.top_n)
    concepts = query_set({c for g in golds.values() for c in g.concepts}, corpus)
    if not concepts:
        raise AnnotationFormatError("no annotated concept is in the corpus lexicon")
    try:
        preds = method_predictions(methods, corpus, concepts, top_n=args.top_n,
                                   theta_threshold=args.theta_threshold,
                                   fallback=args.fallback, **models)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    golds = {k: g.restrict(lambda p: p[1] in set(concepts)) for k, g in golds.items()}
    groups = list(golds)
    rows = [(m, {g: prf(preds[m], golds[g], args.average) for g in groups}) for m in methods]
    prov = provenance(args)
    header = f"# {json.dumps(prov, sort_keys=True)}\n"
    text = format_report(rows, groups)
    out = Path(args.output)
    out.with_suffix(".txt").write_text(header + text, encoding="utf-8")
    out.with_suffix(".csv").write_text(header + report_csv(rows, groups), encoding="utf-8")
    print(f"concepts evaluated: {len(concepts)}")
    print(text, end="")
    if args.split:
        split_rows = []
        parts = {g: split_by_keyword(golds[g], corpus, preds, args.average) for g in groups}
        cols = [f"{g}:{part}" for g in groups for part in ("keyword_present", "keyword_absent")]
        for m in methods:
            split_rows.append((m, {f"{g}:{part}": parts[g][part][m] for g in groups
                                   for part in ("keyword_present", "keyword_absent")}))
        split_text = format_report(split_rows, cols)
        base = out.with_name(out.stem + "_split")
        base.with_suffix(".txt").write_text(header + split_text, encoding="utf-8")
        base.with_suffix(".csv").write_text(header + report_csv(split_rows, cols),
                                            encoding="utf-8")
        print(split_text, end="")
    if args.tags:
        rate = reuse_rate(read_tags(args.tags), corpus)
        print(f"reuse rate: {rate:.2f}")


def cmd_agree(args):
    g1 = build_gold(read_ratings(args.first), args.aggregation)
    g2 = build_gold(read_ratings(args.second), args.aggregation)
    joined = sorted(g1.pairs & g2.pairs)
    if not joined:
        raise AnnotationFormatError("annotation files share no (segment, concept) pair")
    table = contingency([g1[p] for p in joined], [g2[p] for p in joined])
    ac1 = gwet_ac1(table)
    p = ac1_pvalue(table, args.n_perm, args.seed)
    n1, n2 = Path(args.first).stem, Path(args.second).stem
    heads = [f"{n2} present", f"{n2} absent"]
    w0 = len(n1) + len(" present")
    w = max(len(h) for h in heads)
    lines = [
        f"# {json.dumps(provenance(args, args.seed), sort_keys=True)}",
        f"pairs: {table.n}",
        f"{'':<{w0}}  {heads[0]:>{w}}  {heads[1]:>{w}}",
        f"{n1 + ' present':<{w0}}  {table.a:>{w}}  {table.b:>{w}}",
        f"{n1 + ' absent':<{w0}}  {table.c:>{w}}  {table.d:>{w}}",
        f"AC1: {ac1:.4f}",
        f"p-value (one-sided permutation, n_perm={args.n_perm}): {p:.4f}",
    ]
    report = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(report, encoding="utf-8")
    print(report, end="")


def build_parser():
    p = _Parser(prog="conceptlda", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"conceptlda {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_opts(sp, k_default=150):
        sp.add_argument("--k", type=_positive_int, default=k_default, help="number of topics")
        sp.add_argument("--alpha", type=_positive_float, default=None,
                        help="segment-topic prior (default 50/K)")
        sp.add_argument("--beta", type=_positive_float, default=0.1, help="topic-word prior")

    def detect_opts(sp):
        sp.add_argument("--corpus", required=True, type=Path, help="encoded corpus (from ingest)")
        sp.add_argument("--online-model", type=Path)
        sp.add_argument("--gibbs-model", type=Path)
        sp.add_argument("--gibbs-state", type=Path)
        sp.add_argument("--top-n", type=_positive_int, default=30)
        sp.add_argument("--theta-threshold", type=_unit_float, default=0.01)
        sp.add_argument("--fallback", default="online/top_30",
                        help="topic method used by hybrid outside keyword hits")

    sp = sub.add_parser("ingest", help="filter and encode a segmented corpus")
    sp.add_argument("input", type=Path)
    sp.add_argument("-o", "--output", required=True, type=Path)
    sp.add_argument("--stopwords", type=Path)
    sp.add_argument("--min-df", type=_positive_int, default=1)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("synth", help="draw a synthetic corpus from the LDA generative process")
    model_opts(sp, k_default=3)
    sp.add_argument("--vocab-size", type=_positive_int, default=30)
    sp.add_argument("--segments", type=_positive_int, default=200)
    sp.add_argument("--length", type=_positive_int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output", required=True, type=Path)
    sp.add_argument("--truth", type=Path, help="also write true phi, theta and z")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="fit an LDA model with either engine")
    sp.add_argument("--corpus", required=True, type=Path)
    sp.add_argument("--engine", choices=("gibbs", "online"), required=True)
    model_opts(sp)
    sp.add_argument("--burn-in", type=_positive_int, default=150)
    sp.add_argument("--average", type=int, default=0,
                    help="gibbs: average estimates over this many extra sweeps")
    sp.add_argument("--passes", type=_positive_int, default=1)
    sp.add_argument("--batch-size", type=_positive_int, default=256)
    sp.add_argument("--tau0", type=float, default=1.0)
    sp.add_argument("--kappa", type=float, default=0.7)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output", required=True, type=Path, help="model file")
    sp.add_argument("--state", type=Path, help="also write the engine state file")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("query", help="detect segments expressing a concept keyword")
    detect_opts(sp)
    sp.add_argument("--word", action="append", required=True)
    sp.add_argument("--method", default="online/top_30",
                    help="keyword, hybrid, or ENGINE/HEURISTIC (e.g. gibbs/concrete_assignment)")
    sp.add_argument("-o", "--output", required=True, type=Path)
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("eval", help="score detection methods against rating annotations")
    detect_opts(sp)
    sp.add_argument("--annotations", action="append", required=True,
                    help="rating CSV, optionally LABEL=PATH; repeatable")
    sp.add_argument("--methods", help="comma-separated method names (default: all available)")
    sp.add_argument("--aggregation", choices=("majority", "any", "all"), default="majority")
    sp.add_argument("--average", choices=("micro", "macro"), default="micro")
    sp.add_argument("--split", action="store_true", help="also report keyword-present/absent")
    sp.add_argument("--tags", type=Path, help="tagging-step CSV for the reuse rate")
    sp.add_argument("-o", "--output", required=True, type=Path, help="report path prefix")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("agree", help="Gwet's AC1 between two rating files")
    sp.add_argument("first", type=Path)
    sp.add_argument("second", type=Path)
    sp.add_argument("--aggregation", choices=("majority", "any", "all"), default="majority")
    sp.add_argument("--n-perm", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output", type=Path)
    sp.set_defaults(func=cmd_agree)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"conceptlda: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OutOfVocabularyError as exc:
        print(f"conceptlda: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"conceptlda: error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except (CorpusFormatError, ModelFormatError, AnnotationFormatError) as exc:
        print(f"conceptlda: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateAgreementError, UndefinedRateError) as exc:
        print(f"conceptlda: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"conceptlda: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
