"""Training loop: two-phase accent schedule, Adam with annealing, trace.

The per-step total loss is built as a single graph node

    L = L_ctc_final + lam * sum_l L_ctc_l + beta_t * L_accent

so one backward() routes every gradient. Before the activation epoch the
accent term is simply not part of the node, which guarantees that no accent
gradient can reach the encoder or the accent head (their Adam buffers stay
untouched as well). Batches mix frame lengths; each batch is split into
equal-length groups and the component losses are recombined as size-weighted
means, keeping every logged component an honest per-utterance average.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import nncore as nc
from ..ctc import min_frames_for
from ..embeddings import AccentEmbeddingExtractor
from ..errors import ConfigError, FeasibilityError, NumericError, TrainingDiverged
from ..model import ce_loss, focal_loss, ctc_loss_node, forward_full, init_model_params
from ..nncore import Adam, Tensor, save_params
from ..synthdata import Corpus, Utterance, split
from .config import ExperimentConfig, config_fingerprint
from .evaluate import EmbeddingPlan, evaluate, probe_accent_accuracy, report_row


@dataclass
class ExperimentReport:
    """Everything a run leaves behind besides the parameters."""

    fingerprint: str
    trace: list[dict] = field(default_factory=list)
    table: dict = field(default_factory=dict)
    row: dict = field(default_factory=dict)
    skipped_train: int = 0


def default_extracted_embeddings(
    cfg: ExperimentConfig, corpus: Corpus, train_utts: list[Utterance]
) -> dict[str, np.ndarray]:
    """Fit the extractor on the training utterances, embed the whole corpus."""
    extractor = AccentEmbeddingExtractor(emb_dim=cfg.model.emb_dim, seed=cfg.train.seed)
    extractor.fit(train_utts)
    vectors = extractor.transform(corpus.utterances)
    return {u.uid: vectors[i] for i, u in enumerate(corpus.utterances)}


def _feasible(u: Utterance, downsample: int) -> bool:
    if u.frames.shape[0] < downsample:
        return False
    return u.frames.shape[0] // downsample >= min_frames_for(u.tokens)


def _group_by_length(utts: list[Utterance]) -> list[list[Utterance]]:
    groups: dict[int, list[Utterance]] = {}
    for u in utts:
        groups.setdefault(u.frames.shape[0], []).append(u)
    return [groups[t] for t in sorted(groups)]


def _weighted_sum(parts: list[tuple[float, Tensor]]) -> Tensor:
    total = parts[0][1] * parts[0][0]
    for w, node in parts[1:]:
        total = total + node * w
    return total


def train(
    cfg: ExperimentConfig,
    corpus: Corpus,
    utt_embeddings: dict[str, np.ndarray] | None = None,
    step_callback=None,
) -> tuple[dict[str, Tensor], ExperimentReport]:
    """Run one experiment; returns (params, report).

    ``utt_embeddings`` supplies precomputed frozen embeddings (uid -> vector)
    for the ``extracted`` source; when omitted they are produced by fitting an
    extractor on the training split. ``step_callback`` receives one dict per
    optimizer step (for tests and verbose logging).
    """
    cfg.validate()
    t = cfg.train
    view = split(corpus, t.split)
    train_utts = view.train
    if t.train_accents is not None:
        wanted = set(t.train_accents)
        train_utts = [u for u in train_utts if u.accent in wanted]
    if not train_utts:
        raise ConfigError("train.train_accents", "no training utterances left after filtering")
    trained_accents = sorted({u.accent for u in train_utts})

    if t.embedding_source == "extracted" and utt_embeddings is None:
        utt_embeddings = default_extracted_embeddings(cfg, corpus, train_utts)

    ss = np.random.SeedSequence(t.seed)
    ss_init, ss_order, ss_probe = ss.spawn(3)
    params = init_model_params(
        cfg.model,
        np.random.default_rng(ss_init),
        trainable_table=t.embedding_source == "labeled",
    )
    opt = Adam(params, lr=t.lr)
    order_rng = np.random.default_rng(ss_order)

    downsample = cfg.model.downsample
    feasible, skipped = [], 0
    for u in train_utts:
        if _feasible(u, downsample):
            feasible.append(u)
        elif t.strict_feasibility:
            raise FeasibilityError(
                u.frames.shape[0] // downsample, len(u.tokens), min_frames_for(u.tokens)
            )
        else:
            skipped += 1
    if not feasible:
        raise ConfigError("train.batch_size", "every training utterance is infeasible")

    probe_utts = [u for u in view.test if u.accent in set(trained_accents)]
    if len(probe_utts) > t.probe_limit:
        probe_rng = np.random.default_rng(ss_probe)
        keep = sorted(probe_rng.choice(len(probe_utts), size=t.probe_limit, replace=False))
        probe_utts = [probe_utts[i] for i in keep]

    report = ExperimentReport(fingerprint=config_fingerprint(cfg), skipped_train=skipped)
    fit_plan = _train_plan(cfg, params, utt_embeddings)

    for epoch in range(1, t.epochs + 1):
        if epoch > t.anneal_boundary:
            opt.scale_lr(t.anneal_factor)
        beta_t = t.beta_at(epoch)
        order = order_rng.permutation(len(feasible))
        sums = {"total": 0.0, "ctc": 0.0, "inter": 0.0, "accent": 0.0}
        n_steps = 0
        for start in range(0, len(order), t.batch_size):
            batch = [feasible[i] for i in order[start : start + t.batch_size]]
            record = _training_step(cfg, params, opt, batch, beta_t, fit_plan,
                                    where=f"epoch {epoch}, step {n_steps + 1}")
            n_steps += 1
            for key in sums:
                sums[key] += record[key]
            if step_callback is not None:
                record.update(epoch=epoch, step=n_steps, beta=beta_t, lr=opt.lr)
                step_callback(record)
        mean = {k: v / n_steps for k, v in sums.items()}
        probe = None
        if t.mode != "baseline":
            probe = probe_accent_accuracy(cfg.model, params, probe_utts, fit_plan.eval_plan())
        report.trace.append(
            {
                "epoch": epoch,
                "lr": opt.lr,
                "beta": beta_t,
                "loss_total": mean["ctc"] + t.lam * mean["inter"] + beta_t * mean["accent"],
                "loss_ctc": mean["ctc"],
                "loss_inter": mean["inter"],
                "loss_accent": mean["accent"] if t.mode != "baseline" else None,
                "probe_accuracy": probe,
                "skipped": skipped,
            }
        )

    plan = fit_plan.eval_plan(
        novel_accents=view.novel_accents,
        novel_strategy=t.novel_strategy,
        corruption_rate=t.corruption_rate,
        corruption_seed=t.seed,
    )
    report.table = evaluate(cfg.model, params, view.test, plan, view.novel_accents)
    report.row = report_row(cfg, report.table)
    return params, report


@dataclass
class _TrainPlan:
    """Resolved embedding wiring for the training loop."""

    cfg: ExperimentConfig
    params: dict[str, Tensor]
    utt_embeddings: dict[str, np.ndarray] | None

    def batch_embedding(self, batch: list[Utterance]) -> Tensor | None:
        source = self.cfg.train.embedding_source
        if source == "none":
            return None
        if source == "labeled":
            ids = np.array([u.accent for u in batch], dtype=np.intp)
            return nc.embedding_lookup(self.params["emb/table"], ids)
        rows = [self.utt_embeddings[u.uid] for u in batch]
        return Tensor(np.stack(rows))

    def eval_plan(self, novel_accents=frozenset(), novel_strategy="untrained_row",
                  corruption_rate=0.0, corruption_seed=0) -> EmbeddingPlan:
        table = self.params.get("emb/table")
        return EmbeddingPlan(
            source=self.cfg.train.embedding_source,
            table=None if table is None else table.data,
            utt_embeddings=self.utt_embeddings,
            n_accents=self.cfg.model.n_accents,
            novel_accents=frozenset(novel_accents),
            novel_strategy=novel_strategy,
            corruption_rate=corruption_rate,
            corruption_seed=corruption_seed,
        )


def _train_plan(cfg, params, utt_embeddings) -> _TrainPlan:
    if cfg.train.embedding_source == "extracted":
        missing = utt_embeddings is None
        if missing:
            raise ConfigError("train.embedding_source", "extracted source needs embeddings")
    return _TrainPlan(cfg, params, utt_embeddings)


def _training_step(
    cfg: ExperimentConfig,
    params: dict[str, Tensor],
    opt: Adam,
    batch: list[Utterance],
    beta_t: float,
    plan: _TrainPlan,
    where: str = "",
) -> dict:
    """One forward/backward/update over a mixed-length batch."""
    t = cfg.train
    n = len(batch)
    ctc_parts, inter_parts, acc_parts = [], [], []
    for group in _group_by_length(batch):
        w = len(group) / n
        x = np.stack([u.frames for u in group])
        emb = plan.batch_embedding(group)
        lattices, accent_probs = forward_full(cfg.model, params, x, emb, mode=t.mode)
        targets = [u.tokens for u in group]
        final_node, _ = ctc_loss_node(lattices[-1], targets)
        ctc_parts.append((w, final_node))
        if lattices[:-1]:
            tap_nodes = [ctc_loss_node(lat, targets)[0] for lat in lattices[:-1]]
            tap_sum = tap_nodes[0]
            for node in tap_nodes[1:]:
                tap_sum = tap_sum + node
            inter_parts.append((w, tap_sum))
        if accent_probs is not None:
            labels = np.array([u.accent for u in group], dtype=np.intp)
            if t.accent_loss == "focal":
                acc_node = focal_loss(accent_probs, labels, t.gamma)
            else:
                acc_node = ce_loss(accent_probs, labels)
            acc_parts.append((w, acc_node))

    ctc_node = _weighted_sum(ctc_parts)
    inter_node = _weighted_sum(inter_parts) if inter_parts else None
    acc_node = _weighted_sum(acc_parts) if acc_parts else None

    total = ctc_node
    if inter_node is not None and t.lam != 0.0:
        total = total + inter_node * t.lam
    if acc_node is not None and beta_t != 0.0:
        total = total + acc_node * beta_t

    if not np.isfinite(total.data):
        raise TrainingDiverged(f"non-finite total loss {total.data!r} at {where}")
    opt.zero_grad()
    total.backward()
    try:
        opt.step()
    except NumericError as exc:
        raise TrainingDiverged(f"non-finite gradients at {where}: {exc}") from exc
    return {
        "total": float(total.data),
        "ctc": float(ctc_node.data),
        "inter": float(inter_node.data) if inter_node is not None else 0.0,
        "accent": float(acc_node.data) if acc_node is not None else 0.0,
    }


def write_artifacts(out_dir, cfg: ExperimentConfig, params, report: ExperimentReport) -> None:
    """Write trace.jsonl, checkpoint.json, report.csv and report.md."""
    from .reporting import REPORT_COLUMNS, write_csv, write_markdown

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.jsonl", "w") as fh:
        for rec in report.trace:
            fh.write(json.dumps(rec) + "\n")
    save_params(
        out / "checkpoint.json",
        params,
        meta={
            "config_fingerprint": report.fingerprint,
            "mode": cfg.train.mode,
            "split": cfg.train.split,
            "epochs": cfg.train.epochs,
        },
    )
    write_csv(out / "report.csv", [report.row], REPORT_COLUMNS)
    write_markdown(out / "report.md", [report.row], REPORT_COLUMNS, title="Run report")
