"""Command-line entry point.

Every subcommand reads one YAML config (desk-scale defaults when omitted),
applies ``--override section.key=value`` patches, and writes its artifacts
into ``--out``. The commands compose through files: ``gen-data`` leaves
``corpus.jsonl``, ``extract-emb`` leaves ``embeddings.jsonl``, and ``train``
picks both up when present.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .analysis import adjusted_rand_index, knn_purity, lda_reduce, remap_accents, tsne
from .embeddings import AccentEmbeddingExtractor, load_embeddings, save_embeddings, save_table
from .errors import AccentCtcError
from .experiment import (
    ABLATION_COLUMNS,
    REPORT_COLUMNS,
    ExperimentConfig,
    apply_overrides,
    from_dict,
    merge_reports,
    read_csv,
    render_markdown,
    run_ablation,
    train,
    write_artifacts,
    write_csv,
    write_markdown,
)
from .experiment.config import SCHEMA_VERSION
from .synthdata import generate_corpus, load_corpus, region_of, save_corpus, split


def _build_config(args) -> ExperimentConfig:
    if args.config is not None:
        with open(args.config) as fh:
            doc = yaml.safe_load(fh) or {}
    else:
        doc = {"schema_version": SCHEMA_VERSION}
    doc = apply_overrides(doc, args.override)
    extra = []
    if getattr(args, "mode", None) is not None:
        extra.append(f"train.mode={args.mode}")
    if args.seed is not None:
        extra.append(f"train.seed={args.seed}")
        extra.append(f"data.seed={args.seed}")
    if extra:
        doc = apply_overrides(doc, extra)
    return from_dict(doc)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_or_generate_corpus(cfg: ExperimentConfig, out: Path):
    corpus_path = out / "corpus.jsonl"
    if corpus_path.exists():
        corpus = load_corpus(corpus_path, cfg.data)
        print(f"loaded {len(corpus)} utterances from {corpus_path}")
        return corpus
    corpus = generate_corpus(cfg.data)
    print(f"generated {len(corpus)} utterances (seed {cfg.data.seed})")
    return corpus


def cmd_gen_data(args) -> int:
    cfg = _build_config(args)
    out = _out_dir(args)
    corpus = generate_corpus(cfg.data)
    save_corpus(corpus, out / "corpus.jsonl")
    by_split = {"train": len(corpus.by_split("train")), "test": len(corpus.by_split("test"))}
    print(f"wrote {out / 'corpus.jsonl'}: {len(corpus)} utterances {by_split}")
    return 0


def cmd_train(args) -> int:
    cfg = _build_config(args)
    out = _out_dir(args)
    corpus = _load_or_generate_corpus(cfg, out)
    utt_embeddings = None
    emb_path = out / "embeddings.jsonl"
    if cfg.train.embedding_source == "extracted" and emb_path.exists():
        utt_embeddings = load_embeddings(emb_path)
        print(f"loaded {len(utt_embeddings)} embeddings from {emb_path}")
    params, report = train(cfg, corpus, utt_embeddings=utt_embeddings)
    write_artifacts(out, cfg, params, report)
    print(render_markdown([report.row], REPORT_COLUMNS), end="")
    print(f"artifacts in {out}")
    return 0


def cmd_extract_emb(args) -> int:
    cfg = _build_config(args)
    out = _out_dir(args)
    corpus = _load_or_generate_corpus(cfg, out)
    view = split(corpus, cfg.train.split)
    extractor = AccentEmbeddingExtractor(emb_dim=cfg.model.emb_dim, seed=cfg.train.seed)
    extractor.fit(view.train)
    vectors = extractor.transform(corpus.utterances)
    save_embeddings(out / "embeddings.jsonl", {u.uid: vectors[i] for i, u in enumerate(corpus)})
    table = extractor.per_accent_table(view.train)
    save_table(out / "accent_table.jsonl", table)
    print(f"wrote {out / 'embeddings.jsonl'} ({len(corpus)} rows)")
    print(f"classifier validation accuracy: {extractor.val_accuracy_:.3f}")
    return 0


def cmd_analyze(args) -> int:
    cfg = _build_config(args)
    out = _out_dir(args)
    emb_path = out / "embeddings.jsonl"
    if not emb_path.exists():
        raise AccentCtcError(f"{emb_path} not found; run extract-emb first")
    embeddings = load_embeddings(emb_path)
    corpus = _load_or_generate_corpus(cfg, out)
    uids = [u.uid for u in corpus if u.uid in embeddings]
    accents = np.array([u.accent for u in corpus if u.uid in embeddings])
    points = np.stack([embeddings[uid] for uid in uids])

    n_classes = len(np.unique(accents))
    reduced = lda_reduce(points, accents, min(points.shape[1], n_classes - 1))
    perplexity = min(15.0, max(2.0, (len(uids) - 1) / 3))
    coords = tsne(reduced, perplexity=perplexity, seed=cfg.train.seed)
    with open(out / "coords.csv", "w") as fh:
        fh.write("id,accent,x,y\n")
        for uid, accent, (x, y) in zip(uids, accents, coords):
            fh.write(f"{uid},{accent},{x!r},{y!r}\n")

    centroids = {int(a): reduced[accents == a].mean(axis=0) for a in np.unique(accents)}
    table = remap_accents(centroids, n_groups=cfg.data.n_regions, seed=cfg.train.seed)
    table.save(out / "remap.json")

    regions = [region_of(int(a), cfg.data) for a in sorted(centroids)]
    groups = [table.mapping[a] for a in sorted(centroids)]
    metrics = {
        "knn_purity": knn_purity(coords, accents, k=min(5, len(uids) - 1)),
        "region_ari": adjusted_rand_index(regions, groups),
        "n_points": len(uids),
        "perplexity": perplexity,
    }
    (out / "analysis.json").write_text(json.dumps(metrics, indent=2) + "\n")
    print(f"wrote coords.csv, remap.json, analysis.json to {out}")
    print(json.dumps(metrics))
    return 0


def cmd_ablate(args) -> int:
    cfg = _build_config(args)
    out = _out_dir(args)
    corpus = _load_or_generate_corpus(cfg, out)
    rows = run_ablation(cfg, corpus)
    write_csv(out / "ablation.csv", rows, ABLATION_COLUMNS)
    write_markdown(out / "ablation.md", rows, ABLATION_COLUMNS, title="Corrupted-label ablation")
    print(render_markdown(rows, ABLATION_COLUMNS), end="")
    return 0


def cmd_report(args) -> int:
    out = _out_dir(args)
    tables = [read_csv(path) for path in args.reports]
    columns, rows = merge_reports(tables)
    write_csv(out / "report.csv", rows, columns)
    write_markdown(out / "report.md", rows, columns, title="Merged report")
    print(render_markdown(rows, columns), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accentctc",
        description="Accent-robust CTC training experiments on synthetic speech.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override data and train seeds")
        p.add_argument("--out", default="out", help="artifact directory (default: out)")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="config patch, e.g. train.lr=0.001 (repeatable)",
        )
        p.set_defaults(func=fn)
        return p

    add("gen-data", cmd_gen_data, "generate the synthetic corpus")
    p_train = add("train", cmd_train, "train one model and write its report")
    p_train.add_argument("--mode", choices=("baseline", "dat", "mtl"), default=None)
    add("extract-emb", cmd_extract_emb, "fit the accent classifier and export embeddings")
    add("analyze", cmd_analyze, "LDA + t-SNE + accent remap over extracted embeddings")
    p_ablate = add("ablate", cmd_ablate, "corrupted-label ablation over the labeled table")
    p_ablate.add_argument("--mode", choices=("baseline", "dat", "mtl"), default=None)
    p_report = add("report", cmd_report, "merge run reports into one table")
    p_report.add_argument("reports", nargs="+", help="report.csv files to merge")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AccentCtcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
