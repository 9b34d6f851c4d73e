from .ablation import DEFAULT_RATES, run_ablation
from .config import (
    ACCENT_LOSSES,
    EMBEDDING_SOURCES,
    NOVEL_STRATEGIES,
    SCHEMA_VERSION,
    SPLITS,
    ExperimentConfig,
    TrainConfig,
    apply_overrides,
    config_fingerprint,
    from_dict,
    load_config,
    parse_override,
    save_config,
    to_dict,
)
from .evaluate import (
    DOMINANT_ACCENT,
    EmbeddingPlan,
    decode_utterances,
    evaluate,
    probe_accent_accuracy,
    report_row,
    wer_from_lattices,
)
from .reporting import (
    ABLATION_COLUMNS,
    REPORT_COLUMNS,
    format_cell,
    merge_reports,
    parse_cell,
    read_csv,
    render_csv,
    render_markdown,
    write_csv,
    write_markdown,
)
from .trainer import (
    ExperimentReport,
    default_extracted_embeddings,
    train,
    write_artifacts,
)

__all__ = [
    "ACCENT_LOSSES",
    "ABLATION_COLUMNS",
    "DEFAULT_RATES",
    "DOMINANT_ACCENT",
    "EMBEDDING_SOURCES",
    "EmbeddingPlan",
    "ExperimentConfig",
    "ExperimentReport",
    "NOVEL_STRATEGIES",
    "REPORT_COLUMNS",
    "SCHEMA_VERSION",
    "SPLITS",
    "TrainConfig",
    "apply_overrides",
    "config_fingerprint",
    "decode_utterances",
    "default_extracted_embeddings",
    "evaluate",
    "format_cell",
    "from_dict",
    "load_config",
    "merge_reports",
    "parse_cell",
    "parse_override",
    "probe_accent_accuracy",
    "read_csv",
    "render_csv",
    "render_markdown",
    "report_row",
    "run_ablation",
    "save_config",
    "to_dict",
    "train",
    "wer_from_lattices",
    "write_artifacts",
    "write_csv",
    "write_markdown",
]
