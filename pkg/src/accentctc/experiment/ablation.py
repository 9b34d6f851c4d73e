"""Corrupted-label ablation: retrain nothing, re-evaluate the lookup table.

One model is trained with the labeled table, then the test-time accent
labels are corrupted at each rate before the embedding lookup. In the s18
split both novel-accent strategies are reported side by side; in the all
split the novel columns are gaps.
"""

from __future__ import annotations

from ..errors import ConfigError
from ..synthdata import Corpus, split
from .config import ExperimentConfig
from .evaluate import EmbeddingPlan, evaluate
from .trainer import train

DEFAULT_RATES = (0.0, 0.10, 0.25, 0.50)


def run_ablation(
    cfg: ExperimentConfig,
    corpus: Corpus,
    rates=DEFAULT_RATES,
    trained=None,
) -> list[dict]:
    """One report row per corruption rate.

    ``trained`` optionally reuses a (params, report) pair from a previous
    ``train`` call with the same config; otherwise the model is trained here.
    """
    if cfg.train.embedding_source != "labeled":
        raise ConfigError(
            "train.embedding_source", "the corruption ablation needs the labeled table"
        )
    for r in rates:
        if not 0.0 <= r <= 1.0:
            raise ConfigError("train.corruption_rate", f"rate {r} outside [0, 1]")

    if trained is None:
        params, report = train(cfg, corpus)
    else:
        params, report = trained
    view = split(corpus, cfg.train.split)
    table = params["emb/table"]

    def plan_for(rate: float, strategy: str):
        return EmbeddingPlan(
            source="labeled",
            table=table.data,
            n_accents=cfg.model.n_accents,
            novel_accents=frozenset(view.novel_accents),
            novel_strategy=strategy,
            corruption_rate=rate,
            corruption_seed=cfg.train.seed,
        )

    rows = []
    for rate in rates:
        untrained = evaluate(
            cfg.model, params, view.test, plan_for(rate, "untrained_row"), view.novel_accents
        )
        row = {
            "corruption_rate": float(rate),
            "wer_non_dominant": untrained["groups"]["non_dominant"],
            "wer_novel_untrained": untrained["groups"]["novel"],
            "wer_novel_dominant": None,
            "wer_dominant": untrained["groups"]["dominant"],
        }
        if view.novel_accents:
            dominant = evaluate(
                cfg.model,
                params,
                view.test,
                plan_for(rate, "dominant_accent_row"),
                view.novel_accents,
            )
            row["wer_novel_dominant"] = dominant["groups"]["novel"]
        rows.append(row)
    return rows
