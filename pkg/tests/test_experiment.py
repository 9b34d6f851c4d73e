"""Training-loop schedule, evaluation tables, ablation, and report files."""

import json
import math

import numpy as np
import pytest
import yaml

from accentctc.errors import ConfigError, FeasibilityError, TrainingDiverged
from accentctc.experiment import (
    ABLATION_COLUMNS,
    REPORT_COLUMNS,
    EmbeddingPlan,
    ExperimentConfig,
    TrainConfig,
    config_fingerprint,
    evaluate,
    from_dict,
    load_config,
    merge_reports,
    parse_cell,
    probe_accent_accuracy,
    read_csv,
    render_csv,
    render_markdown,
    report_row,
    run_ablation,
    train,
    wer_from_lattices,
    write_csv,
)
from accentctc.model import ModelConfig, init_model_params
from accentctc.synthdata import CorpusConfig, Corpus, Utterance, generate_corpus, split


def tiny_data(**kw) -> CorpusConfig:
    base = dict(
        dominant_train=24,
        dominant_test=8,
        other_train=8,
        other_test=4,
        min_tokens=3,
        max_tokens=6,
        seed=11,
    )
    base.update(kw)
    return CorpusConfig(**base)


def tiny_experiment(data=None, fusion="none", **train_kw) -> ExperimentConfig:
    data = data or tiny_data()
    model = ModelConfig.desk(fusion=fusion)
    defaults = dict(epochs=2, batch_size=16, seed=5)
    defaults.update(train_kw)
    return ExperimentConfig(data=data, model=model, train=TrainConfig(**defaults))


@pytest.fixture(scope="module")
def corpus():
    return generate_corpus(tiny_data())


# ---------------------------------------------------------------------------
# config file handling
# ---------------------------------------------------------------------------


def test_yaml_config_roundtrip(tmp_path):
    doc = {
        "schema_version": 1,
        "data": {"dominant_train": 10, "seed": 2},
        "model": {"head_hidden": 32},
        "train": {"mode": "mtl", "epochs": 4, "lam": 0.5},
    }
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(doc))
    cfg = load_config(path)
    assert cfg.train.mode == "mtl"
    assert cfg.train.lam == 0.5
    assert cfg.data.dominant_train == 10
    assert cfg.model.head_hidden == 32


def test_missing_schema_version_is_an_error(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("train: {epochs: 3}\n")
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(path)


def test_unknown_field_reports_its_dotted_path(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("schema_version: 1\ntrain: {warmup: 3}\n")
    with pytest.raises(ConfigError, match="train.warmup"):
        load_config(path)


def test_overrides_use_yaml_typing(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("schema_version: 1\n")
    cfg = load_config(
        path,
        overrides=["train.lr=0.002", "train.mode=dat", "data.held_out=[1, 2]"],
    )
    assert cfg.train.lr == 0.002
    assert cfg.train.mode == "dat"
    assert cfg.data.held_out == [1, 2]


def test_malformed_override_is_rejected():
    with pytest.raises(ConfigError, match="--override"):
        from accentctc.experiment import parse_override

        parse_override("train.lr")


def test_model_must_match_corpus_shapes():
    doc = {"schema_version": 1, "model": {"vocab_size": 99}}
    with pytest.raises(ConfigError, match="model.vocab_size"):
        from_dict(doc)


def test_model_shape_fields_default_to_the_data_section():
    cfg = from_dict({"schema_version": 1, "data": {"vocab_size": 9, "feature_dim": 10}})
    assert cfg.model.vocab_size == 9
    assert cfg.model.input_dim == 10


def test_embedding_source_requires_fusion():
    with pytest.raises(ConfigError, match="fusion"):
        tiny_experiment(fusion="none", embedding_source="labeled").validate()


def test_fingerprint_tracks_config_changes():
    a = tiny_experiment()
    b = tiny_experiment(lr=0.002)
    assert config_fingerprint(a) == config_fingerprint(a)
    assert config_fingerprint(a) != config_fingerprint(b)


# ---------------------------------------------------------------------------
# the beta schedule
# ---------------------------------------------------------------------------


def test_activation_epoch_defaults_to_half_rounded_up():
    assert TrainConfig(epochs=10).activation_epoch == 5
    assert TrainConfig(epochs=7).activation_epoch == 4
    assert TrainConfig(epochs=1).activation_epoch == 1


def test_beta_schedule_two_phases():
    t = TrainConfig(mode="dat", epochs=10, beta=0.03)
    betas = [t.beta_at(e) for e in range(1, 11)]
    assert betas == [0.0] * 5 + [0.03] * 5


def test_baseline_ignores_beta():
    t = TrainConfig(mode="baseline", epochs=4, beta=1.0)
    assert all(t.beta_at(e) == 0.0 for e in range(1, 5))


def test_trace_records_beta_and_annealed_lr(corpus):
    cfg = tiny_experiment(mode="mtl", epochs=4, beta=0.2)
    _, report = train(cfg, corpus)
    assert [r["beta"] for r in report.trace] == [0.0, 0.0, 0.2, 0.2]
    lr0 = cfg.train.lr
    lr1 = lr0 * 0.95
    assert [r["lr"] for r in report.trace] == [lr0, lr0, lr1, lr1 * 0.95]


# ---------------------------------------------------------------------------
# training-loop invariants
# ---------------------------------------------------------------------------


def _param_blobs(params):
    return {k: v.data.copy() for k, v in params.items()}


def test_inert_accent_branch_keeps_all_modes_identical(corpus):
    """With beta == 0 the accent branch must not influence a single update."""
    blobs = []
    for mode in ("baseline", "dat", "mtl"):
        cfg = tiny_experiment(mode=mode, epochs=2, beta=0.0)
        params, _ = train(cfg, corpus)
        blobs.append(_param_blobs(params))
    base = blobs[0]
    for other in blobs[1:]:
        assert base.keys() == other.keys()
        for name in base:
            assert np.array_equal(base[name], other[name]), name


def test_loss_decomposition_at_every_step(corpus):
    records = []
    cfg = tiny_experiment(mode="mtl", epochs=2, beta=0.4, lam=0.3, beta_activation=0)
    train(cfg, corpus, step_callback=records.append)
    assert records, "expected at least one step"
    for rec in records:
        recombined = rec["ctc"] + 0.3 * rec["inter"] + rec["beta"] * rec["accent"]
        assert abs(rec["total"] - recombined) <= 1e-12


def test_no_accent_gradient_before_activation(corpus):
    """Phase 1 must leave the accent head exactly at its initialization."""
    cfg = tiny_experiment(mode="dat", epochs=2, beta=0.5, beta_activation=2)
    params, _ = train(cfg, corpus)
    ss_init = np.random.SeedSequence(cfg.train.seed).spawn(3)[0]
    fresh = init_model_params(cfg.model, np.random.default_rng(ss_init))
    for name in fresh:
        if name.startswith("accent/"):
            assert np.array_equal(params[name].data, fresh[name].data), name
        elif name.startswith("final_ctc/"):
            assert not np.array_equal(params[name].data, fresh[name].data), name


def test_training_is_bit_deterministic(corpus):
    cfg = tiny_experiment(mode="dat", epochs=2, beta=0.1, beta_activation=1)
    params_a, report_a = train(cfg, corpus)
    params_b, report_b = train(cfg, corpus)
    assert report_a.trace == report_b.trace
    assert report_a.row == report_b.row
    for name in params_a:
        assert np.array_equal(params_a[name].data, params_b[name].data)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_aborts_with_diagnostic(corpus):
    cfg = tiny_experiment(epochs=2, lr=1e8)
    with pytest.raises(TrainingDiverged):
        train(cfg, corpus)


def _with_infeasible(corpus):
    bad = Utterance(
        uid="utt-bad",
        accent=0,
        split="train",
        tokens=[1, 2, 3, 4, 5],
        frames=np.zeros((4, 16)),
    )
    return Corpus([bad] + list(corpus.utterances), corpus.config)


def test_permissive_feasibility_skips_and_counts(corpus):
    cfg = tiny_experiment(epochs=1)
    _, report = train(cfg, _with_infeasible(corpus))
    assert report.skipped_train == 1
    assert report.trace[0]["skipped"] == 1


def test_strict_feasibility_raises(corpus):
    cfg = tiny_experiment(epochs=1, strict_feasibility=True)
    with pytest.raises(FeasibilityError):
        train(cfg, _with_infeasible(corpus))


def test_labeled_source_trains_the_table(corpus):
    cfg = tiny_experiment(fusion="concat", embedding_source="labeled", epochs=1)
    cfg.model = ModelConfig.desk(fusion="concat")
    params, _ = train(cfg, corpus)
    ss_init = np.random.SeedSequence(cfg.train.seed).spawn(3)[0]
    fresh = init_model_params(cfg.model, np.random.default_rng(ss_init), trainable_table=True)
    assert not np.array_equal(params["emb/table"].data, fresh["emb/table"].data)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _oracle_lattice(tokens, vocab):
    """Sharply peaked lattice whose greedy path collapses to `tokens`."""
    t = 2 * len(tokens) + 1
    lat = np.full((t, vocab), -1e9)
    for i in range(t):
        lat[i, 0 if i % 2 == 0 else tokens[i // 2]] = 0.0
    return lat


def test_oracle_lattices_give_zero_wer():
    refs = [[1, 2, 2, 3], [4, 1], [2]]
    lattices = [_oracle_lattice(r, vocab=5) for r in refs]
    assert wer_from_lattices(lattices, refs) == 0.0


def test_report_row_has_the_accent_groupings(corpus):
    cfg = tiny_experiment()
    params = init_model_params(cfg.model, np.random.default_rng(0))
    view = split(corpus, "all")
    table = evaluate(cfg.model, params, view.test, EmbeddingPlan(), view.novel_accents)
    row = report_row(cfg, table)
    assert list(row) == REPORT_COLUMNS
    assert row["wer_novel"] is None  # the *all* split has no novel accents
    assert row["wer_dominant"] >= 0 and row["wer_non_dominant"] >= 0

    cfg18 = tiny_experiment(split="s18")
    view18 = split(corpus, "s18")
    table18 = evaluate(cfg.model, params, view18.test, EmbeddingPlan(), view18.novel_accents)
    row18 = report_row(cfg18, table18)
    assert row18["wer_novel"] is not None
    assert set(table18["per_accent"]) == set(range(6))


def test_evaluating_twice_is_identical(corpus):
    cfg = tiny_experiment()
    params = init_model_params(cfg.model, np.random.default_rng(3))
    view = split(corpus, "all")
    a = evaluate(cfg.model, params, view.test, EmbeddingPlan(), view.novel_accents)
    b = evaluate(cfg.model, params, view.test, EmbeddingPlan(), view.novel_accents)
    assert a == b


def test_random_heads_probe_at_chance_level(corpus):
    """Untrained accent heads should sit at ~1/N accuracy, pooled over inits."""
    cfg = tiny_experiment()
    view = split(corpus, "all")
    hits, trials = 0, 0
    for seed in range(10):
        params = init_model_params(cfg.model, np.random.default_rng(100 + seed))
        acc = probe_accent_accuracy(cfg.model, params, view.test, EmbeddingPlan())
        hits += acc * len(view.test)
        trials += len(view.test)
    p = 1.0 / 6.0
    sigma = math.sqrt(trials * p * (1 - p)) / trials
    assert abs(hits / trials - p) <= 3 * sigma


def _toy_utts(accents):
    return [
        Utterance(uid=f"u{i}", accent=a, split="test", tokens=[1], frames=np.zeros((4, 2)))
        for i, a in enumerate(accents)
    ]


def test_labeled_plan_corruption_count_and_novel_strategies():
    table = np.arange(12, dtype=np.float64).reshape(6, 2)
    utts = _toy_utts([0, 1, 2, 4, 1, 0, 2, 4])  # 8 non-novel
    plan = EmbeddingPlan(
        source="labeled", table=table, n_accents=6, corruption_rate=0.5, corruption_seed=9
    )
    clean = EmbeddingPlan(source="labeled", table=table, n_accents=6).resolve(utts)
    dirty = plan.resolve(utts)
    changed = (clean != dirty).any(axis=1).sum()
    assert changed == 4  # floor(0.5 * 8)

    novel_utts = _toy_utts([0, 3, 5])
    untrained = EmbeddingPlan(
        source="labeled", table=table, n_accents=6, novel_accents=frozenset({3, 5})
    ).resolve(novel_utts)
    assert np.array_equal(untrained[1], table[3])
    borrowed = EmbeddingPlan(
        source="labeled",
        table=table,
        n_accents=6,
        novel_accents=frozenset({3, 5}),
        novel_strategy="dominant_accent_row",
    ).resolve(novel_utts)
    assert np.array_equal(borrowed[1], table[0])
    assert np.array_equal(borrowed[2], table[0])


# ---------------------------------------------------------------------------
# ablation
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def labeled_run(corpus):
    cfg = tiny_experiment(fusion="concat", embedding_source="labeled", split="s18", epochs=2)
    cfg.model = ModelConfig.desk(fusion="concat")
    params, report = train(cfg, corpus)
    return cfg, corpus, params, report


def test_ablation_has_one_row_per_rate(labeled_run):
    cfg, corpus, params, report = labeled_run
    rows = run_ablation(cfg, corpus, trained=(params, report))
    assert [r["corruption_rate"] for r in rows] == [0.0, 0.10, 0.25, 0.50]
    assert list(rows[0]) == ABLATION_COLUMNS


def test_ablation_rate_zero_matches_plain_evaluate(labeled_run):
    cfg, corpus, params, report = labeled_run
    rows = run_ablation(cfg, corpus, trained=(params, report))
    assert rows[0]["wer_non_dominant"] == report.row["wer_non_dominant"]
    assert rows[0]["wer_dominant"] == report.row["wer_dominant"]
    assert rows[0]["wer_novel_untrained"] == report.row["wer_novel"]


def test_ablation_requires_the_labeled_table(corpus):
    cfg = tiny_experiment()
    with pytest.raises(ConfigError, match="embedding_source"):
        run_ablation(cfg, corpus)


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------


def test_csv_roundtrip_is_byte_identical(tmp_path):
    rows = [
        {"run": "a", "split": "all", "mode": "dat", "embedding": "labeled",
         "wer_non_dominant": 0.125, "wer_novel": None, "wer_dominant": 1 / 3},
        {"run": "b", "split": "s18", "mode": "mtl", "embedding": "none",
         "wer_non_dominant": 0.5, "wer_novel": 0.25, "wer_dominant": 0.0},
    ]
    path = tmp_path / "report.csv"
    write_csv(path, rows, REPORT_COLUMNS)
    first = path.read_text()
    columns, parsed = read_csv(path)
    write_csv(path, parsed, columns)
    assert path.read_text() == first
    assert "-" in first.splitlines()[1].split(",")


def test_parse_cell_types():
    assert parse_cell("-") is None
    assert parse_cell("0.5") == 0.5
    assert parse_cell("dat") == "dat"


def test_merge_reports_keeps_rows_and_unions_columns():
    t1 = (["run", "wer"], [{"run": "a", "wer": "0.5"}])
    t2 = (["run", "extra"], [{"run": "b", "extra": "x"}])
    columns, rows = merge_reports([t1, t2])
    assert columns == ["run", "wer", "extra"]
    assert len(rows) == 2
    text = render_csv(rows, columns)
    assert text.splitlines()[2] == "b,-,x"


def test_markdown_table_shape():
    rows = [{"run": "r", "wer_novel": None, "wer_dominant": 0.5}]
    text = render_markdown(rows, ["run", "wer_novel", "wer_dominant"], title="T")
    lines = text.splitlines()
    assert lines[0] == "# T"
    assert lines[2].startswith("| run |")
    assert "| - |" in lines[4]


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


@pytest.fixture()
def cli_config(tmp_path):
    doc = {
        "schema_version": 1,
        "data": {
            "dominant_train": 16,
            "dominant_test": 6,
            "other_train": 6,
            "other_test": 3,
            "min_tokens": 3,
            "max_tokens": 5,
            "seed": 4,
        },
        "model": {"head_hidden": 32},
        "train": {"epochs": 1, "batch_size": 32, "seed": 2},
    }
    path = tmp_path / "desk.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_cli_gen_data_and_train(tmp_path, cli_config, capsys):
    from accentctc.cli import main

    out = tmp_path / "run"
    assert main(["gen-data", "--config", str(cli_config), "--out", str(out)]) == 0
    assert (out / "corpus.jsonl").exists()
    assert main(["train", "--config", str(cli_config), "--out", str(out)]) == 0
    for name in ("checkpoint.json", "trace.jsonl", "report.csv", "report.md"):
        assert (out / name).exists(), name
    trace = [json.loads(line) for line in (out / "trace.jsonl").read_text().splitlines()]
    assert len(trace) == 1 and trace[0]["epoch"] == 1
    capsys.readouterr()


def test_cli_report_merges(tmp_path, cli_config, capsys):
    from accentctc.cli import main

    out = tmp_path / "run"
    main(["gen-data", "--config", str(cli_config), "--out", str(out)])
    main(["train", "--config", str(cli_config), "--out", str(out)])
    merged = tmp_path / "merged"
    code = main(
        ["report", "--out", str(merged), str(out / "report.csv"), str(out / "report.csv")]
    )
    assert code == 0
    _, rows = read_csv(merged / "report.csv")
    assert len(rows) == 2
    capsys.readouterr()


def test_cli_rejects_bad_override(tmp_path, cli_config, capsys):
    from accentctc.cli import main

    code = main(
        [
            "train",
            "--config",
            str(cli_config),
            "--out",
            str(tmp_path / "x"),
            "--override",
            "nosuch.key=1",
        ]
    )
    assert code == 2
    assert "nosuch" in capsys.readouterr().err


def test_cli_mode_flag_wins_over_config(tmp_path, cli_config, capsys):
    from accentctc.cli import main

    out = tmp_path / "m"
    main(["gen-data", "--config", str(cli_config), "--out", str(out)])
    main(["train", "--config", str(cli_config), "--out", str(out), "--mode", "mtl"])
    _, rows = read_csv(out / "report.csv")
    assert rows[0]["mode"] == "mtl"
    capsys.readouterr()
