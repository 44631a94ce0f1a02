"""Batch command-line entry points.

Every experiment artifact (index directories, curve CSVs, timing CSVs,
model files) is written by exactly one subcommand; all stochastic
subcommands require explicit seeds, and outputs are written atomically so
two runs with the same flags produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from .corpus import read_conll, read_judgments, read_plaintext, write_conll
from .errors import ConfigError, EntityScoutError
from .evaluation import (
    LearningCurve,
    RankedToken,
    curve_aggregate,
    time_queries,
    unique_ap,
)
from .features import FAMILY_PREFIXES, FeatureConfig, load_clusters
from .index import build_index, open_index
from .model import TrainConfig, load_model, save_model, train, LabeledToken
from .session import (
    STRATEGIES,
    SimulatedUser,
    read_doc_rankings,
    run_simulation,
)
from .synth import SynthConfig, synth_corpus

RUN_CONFIG_VERSION = 1

CURVES_HEADER = "strategy,query_id,round,uap,seed"
TIMING_HEADER = "q_size,median_s,trials"
AGG_HEADER = "strategy,round,mean_uap,stderr,n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_run_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config: file {p} does not exist")
    cfg = json.loads(p.read_text(encoding="utf-8"))
    version = cfg.get("version")
    if version != RUN_CONFIG_VERSION:
        raise ConfigError(f"config.version: expected {RUN_CONFIG_VERSION}, got {version}")
    for key in ("corpus", "clusters", "judgments", "doc_rankings", "index_dir"):
        value = cfg.get(key)
        if value is not None and not Path(value).exists():
            raise ConfigError(f"config.{key}: path {value} does not exist")
    return cfg


def _feature_config(args, cfg: dict) -> FeatureConfig:
    feat = dict(cfg.get("features", {}))
    if args.window is not None:
        feat["window"] = args.window
    if args.ngram_max is not None:
        feat["ngram_max"] = args.ngram_max
    if args.families is not None:
        feat["enabled_families"] = [f for f in args.families.split(",") if f]
    if getattr(args, "clusters", None) or cfg.get("clusters"):
        feat.setdefault("cluster_path", getattr(args, "clusters", None) or cfg.get("clusters"))
        feat.setdefault("enabled_families", sorted(DEFAULTS_WITH_CLUSTERS))
    kwargs = {}
    if "window" in feat:
        kwargs["window"] = int(feat["window"])
    if "ngram_max" in feat:
        kwargs["ngram_max"] = int(feat["ngram_max"])
    if "enabled_families" in feat:
        kwargs["enabled_families"] = frozenset(feat["enabled_families"])
    if "cluster_path" in feat:
        kwargs["cluster_path"] = feat["cluster_path"]
    if "cluster_prefix_lengths" in feat:
        kwargs["cluster_prefix_lengths"] = tuple(feat["cluster_prefix_lengths"])
    return FeatureConfig(**kwargs)


DEFAULTS_WITH_CLUSTERS = frozenset({"words", "shapes", "ngrams", "pos", "clusters"})


def _trainer_config(args, cfg: dict) -> TrainConfig:
    hp = dict(cfg.get("trainer", {}))
    if getattr(args, "l2", None) is not None:
        hp["l2"] = args.l2
    return TrainConfig(**hp)


def _read_corpus(path: str, fmt: str):
    if fmt == "conll":
        return read_conll(path)
    if fmt == "text":
        return read_plaintext(path)
    if fmt == "text-records":
        return read_plaintext(path, records=True)
    raise ConfigError(f"corpus_format: unknown format {fmt!r}")


# --- subcommands ---------------------------------------------------------------

def cmd_build_index(args) -> int:
    cfg = load_run_config(args.config)
    corpus_path = args.corpus or cfg.get("corpus")
    if not corpus_path:
        raise ConfigError("corpus: no corpus path given")
    fmt = args.format or cfg.get("corpus_format", "conll")
    feature_cfg = _feature_config(args, cfg)
    clusters = None
    if feature_cfg.cluster_path:
        clusters = load_clusters(feature_cfg.cluster_path)
    corpus = _read_corpus(corpus_path, fmt)
    index = build_index(corpus, feature_cfg, clusters, out_dir=args.out)
    counts = index.manifest["counts"]
    print(
        f"indexed {counts['tokens']} tokens / {counts['sentences']} sentences / "
        f"{counts['documents']} docs; {counts['features']} features, "
        f"{counts['postings']} postings -> {args.out}"
    )
    return 0


def cmd_query(args) -> int:
    index = open_index(args.index)
    model = load_model(args.model)
    exclude = set()
    if args.exclude:
        exclude = {int(x) for x in args.exclude.split(",") if x}
    hits = index.score_topk(model, k=args.k, exclude=exclude)
    lines = [
        f"{rank}\t{hit.token_id}\t{index.surfaces[hit.token_id]}\t{hit.score!r}"
        for rank, hit in enumerate(hits, start=1)
    ]
    text = "".join(line + "\n" for line in lines)
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_train_model(args) -> int:
    index = open_index(args.index)
    user = SimulatedUser.from_gold(args.gold_class)
    hp = _trainer_config(args, load_run_config(args.config))
    sids = range(index.sentence_count)
    if args.sample_sentences is not None:
        import random

        rng = random.Random(args.seed)
        sids = sorted(rng.sample(range(index.sentence_count), args.sample_sentences))
    examples = []
    for sid in sids:
        labels = user.labels_for(index.corpus.sentence(sid))
        for tid, lab in zip(index.sentence_token_ids(sid), labels):
            examples.append(
                LabeledToken(
                    token_id=tid,
                    feature_vector=frozenset(index.token_features(tid)),
                    label=lab,
                )
            )
    model = train(examples, hp, class_name=args.gold_class)
    save_model(model, args.out)
    print(f"trained on {model.trained_on} tokens; |Q|={model.size()} -> {args.out}")
    return 0


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    index = open_index(args.index)
    strategies = (
        args.strategy.split(",") if args.strategy else cfg.get("strategies", ["interactive"])
    )
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"strategy: unknown strategy {s!r}")
    seeds = _parse_int_list(args.seeds) if args.seeds else cfg.get("seeds")
    if not seeds:
        raise ConfigError("seeds: at least one seed is required")
    rounds = args.rounds or cfg.get("rounds")
    if not rounds:
        raise ConfigError("rounds: a positive round count is required")
    hp = _trainer_config(args, cfg)
    prune_to = args.prune_to if args.prune_to is not None else cfg.get("prune_to")

    tasks = []  # (user, judgments, pool_docs, doc_ranking)
    judgments_path = args.judgments or cfg.get("judgments")
    if args.gold_class:
        user = SimulatedUser.from_gold(args.gold_class)
        judgments = user.judgment_set(index.corpus)
        tasks.append((user, judgments, None, None))
    elif judgments_path:
        exclude_ids = set(cfg.get("exclude_queries", []))
        judgment_sets = read_judgments(judgments_path, exclude_ids=exclude_ids)
        if args.queries:
            wanted = set(args.queries.split(","))
            judgment_sets = [j for j in judgment_sets if j.query_id in wanted]
        rankings_path = args.doc_rankings or cfg.get("doc_rankings")
        rankings = read_doc_rankings(rankings_path) if rankings_path else {}
        order_by_doc_id = {d.doc_id: d.source_order for d in index.corpus.docs}
        for judgments in judgment_sets:
            doc_ranking = None
            pool_docs = None
            ranked_ids = rankings.get(judgments.query_id)
            if ranked_ids is not None:
                orders = [order_by_doc_id[d] for d in ranked_ids if d in order_by_doc_id]
                doc_ranking = tuple(orders)
                if args.pool:
                    pool_docs = frozenset(orders)
            tasks.append(
                (SimulatedUser.from_judgments(judgments), judgments, pool_docs, doc_ranking)
            )
    else:
        raise ConfigError("judgments: need --judgments or --gold-class")

    scope = "document pool" if (args.pool and judgments_path) else "full corpus"
    print(f"ranking scope: {scope}", file=sys.stderr)

    rows = [CURVES_HEADER]
    for user, judgments, pool_docs, doc_ranking in tasks:
        for strategy in strategies:
            for seed in seeds:
                curve = run_simulation(
                    index,
                    user,
                    judgments,
                    strategy,
                    rounds=rounds,
                    seed=seed,
                    pool_docs=pool_docs,
                    doc_ranking=doc_ranking,
                    prune_to=prune_to,
                    hp=hp,
                )
                for rnd, uap in enumerate(curve.uap_by_round, start=1):
                    rows.append(f"{strategy},{judgments.query_id},{rnd},{uap!r},{seed}")
    _atomic_write(Path(args.out), "".join(r + "\n" for r in rows))
    print(f"wrote {len(rows) - 1} curve rows -> {args.out}")
    return 0


def cmd_eval_uap(args) -> int:
    judgment_sets = read_judgments(args.judgments, min_forms=args.min_forms)
    by_id = {j.query_id: j for j in judgment_sets}
    if args.query_id not in by_id:
        raise ConfigError(f"query_id: {args.query_id!r} not present in {args.judgments}")
    ranking = []
    with open(args.ranking, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) not in (2, 3):
                raise ConfigError(
                    f"ranking: line {lineno}: expected 2 or 3 columns, got {len(cols)}"
                )
            relevant = None
            if len(cols) == 3 and cols[2] != "":
                relevant = cols[2] in ("1", "true", "True")
            ranking.append(RankedToken(int(cols[0]), cols[1], relevant))
    value = unique_ap(ranking, by_id[args.query_id])
    print(f"{value!r}")
    return 0


def cmd_time_queries(args) -> int:
    index = open_index(args.index)
    model = load_model(args.model)
    schedule = _parse_int_list(args.schedule)
    report = time_queries(index, model, schedule, trials=args.trials, k=args.k)
    rows = [TIMING_HEADER]
    for row in report.rows:
        rows.append(f"{row.q_size},{row.median_s!r},{row.trials}")
    text = "".join(r + "\n" for r in rows)
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_export_curves(args) -> int:
    curves = []
    for path in args.curves:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != CURVES_HEADER:
                raise ConfigError(f"curves: {path} has unexpected header {header!r}")
            acc: dict[tuple[str, str, int], list[float]] = {}
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                strategy, query_id, rnd, uap, seed = line.split(",")
                acc.setdefault((strategy, query_id, int(seed)), []).append(float(uap))
            for (strategy, query_id, seed), vals in acc.items():
                curves.append(
                    LearningCurve(
                        strategy=strategy,
                        query_id=query_id,
                        seed=seed,
                        uap_by_round=tuple(vals),
                    )
                )
    rows = [AGG_HEADER]
    for strategy, rnd, mean, stderr, n in curve_aggregate(curves):
        rows.append(f"{strategy},{rnd},{mean!r},{stderr!r},{n}")
    _atomic_write(Path(args.out), "".join(r + "\n" for r in rows))
    print(f"aggregated {len(curves)} curves -> {args.out}")
    return 0


def cmd_synth_corpus(args) -> int:
    cfg = SynthConfig(
        n_sentences=args.sentences,
        seed=args.seed,
        positive_sentence_rate=args.positive_rate,
        n_entity_forms=args.entities,
        class_name=args.class_name,
    )
    corpus = synth_corpus(cfg)
    write_conll(corpus, args.out)
    print(
        f"wrote synthetic corpus: {corpus.token_count} tokens / "
        f"{corpus.sentence_count} sentences -> {args.out}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(
        index_dir=args.index_dir,
        sessions_dir=args.sessions_dir,
        auth_token=args.auth_token,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entityscout",
        description="Interactive entity-list building over a token-level feature index.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="versioned JSON run config; flags override it")

    p = sub.add_parser("build-index", help="extract features and build an index directory")
    p.add_argument("corpus", nargs="?", help="corpus file (or set via config)")
    p.add_argument("out", help="output index directory")
    p.add_argument("--format", choices=["conll", "text", "text-records"])
    p.add_argument("--clusters", help="cluster paths file (bitstring<TAB>word<TAB>count)")
    p.add_argument("--window", type=int)
    p.add_argument("--ngram-max", type=int, dest="ngram_max")
    p.add_argument(
        "--families",
        help=f"comma-separated subset of {sorted(FAMILY_PREFIXES)}",
    )
    add_config(p)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("query", help="rank tokens against a saved model")
    p.add_argument("index")
    p.add_argument("model")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--exclude", help="comma-separated sentence ids to skip")
    p.add_argument("--out", help="write TSV here instead of stdout")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("train-model", help="fit a model from gold labels in an index")
    p.add_argument("index")
    p.add_argument("--gold-class", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sample-sentences", type=int, dest="sample_sentences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--l2", type=float)
    add_config(p)
    p.set_defaults(func=cmd_train_model)

    p = sub.add_parser("simulate", help="replay labeling sessions and record uAP curves")
    p.add_argument("index")
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", help=f"comma-separated subset of {list(STRATEGIES)}")
    p.add_argument("--rounds", type=int)
    p.add_argument(
        "--seeds", "--seed", dest="seeds", help="comma-separated integer seeds"
    )
    p.add_argument("--judgments", help="query_id<TAB>title<TAB>form file")
    p.add_argument("--queries", help="restrict to these query ids (comma-separated)")
    p.add_argument("--doc-rankings", dest="doc_rankings", help="query_id<TAB>doc_id<TAB>rank file")
    p.add_argument(
        "--pool",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="restrict selection and ranking to ranked document pools when rankings are given",
    )
    p.add_argument("--gold-class", help="simulate against gold BIO labels of this class")
    p.add_argument("--prune-to", type=int, dest="prune_to")
    p.add_argument("--l2", type=float)
    add_config(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval-uap", help="unique average precision of a ranking file")
    p.add_argument("--ranking", required=True, help="TSV: token_id, surface[, relevant]")
    p.add_argument("--judgments", required=True)
    p.add_argument("--query-id", dest="query_id", required=True)
    p.add_argument("--min-forms", type=int, default=4, dest="min_forms")
    p.set_defaults(func=cmd_eval_uap)

    p = sub.add_parser("time-queries", help="median top-k latency per model size")
    p.add_argument("index")
    p.add_argument("--model", required=True)
    p.add_argument("--schedule", default="1,10,100,1000")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("-k", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_time_queries)

    p = sub.add_parser("export-curves", help="aggregate curve CSVs to mean +/- stderr")
    p.add_argument("curves", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_curves)

    p = sub.add_parser("synth-corpus", help="write a deterministic synthetic CoNLL corpus")
    p.add_argument("out")
    p.add_argument("--sentences", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--positive-rate", type=float, default=0.008, dest="positive_rate")
    p.add_argument("--entities", type=int, default=120)
    p.add_argument("--class-name", default="ENT", dest="class_name")
    p.set_defaults(func=cmd_synth_corpus)

    p = sub.add_parser("serve", help="run the labeling HTTP service")
    p.add_argument("--index-dir", required=True, dest="index_dir")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--sessions-dir", dest="sessions_dir")
    p.add_argument("--auth-token", dest="auth_token")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EntityScoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
