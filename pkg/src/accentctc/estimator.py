"""Scikit-learn style facade over the full training pipeline.

``AccentRobustCtc`` hides the config plumbing: construct with plain keyword
hyperparameters, ``fit`` on a corpus (or any utterance sequence), ``predict``
token sequences, ``score`` with negative WER. The heavy lifting lives in
``accentctc.experiment``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .ctc import wer
from .embeddings import AccentEmbeddingExtractor
from .errors import ConfigError
from .experiment import EmbeddingPlan, ExperimentConfig, TrainConfig, decode_utterances, train
from .model import ModelConfig
from .synthdata import Corpus, CorpusConfig, split
from .utils import check_utterances


class AccentRobustCtc(BaseEstimator):
    """Accent-robust CTC recognizer with optional adversarial training.

    Parameters mirror the experiment config: ``mode`` picks the accent
    branch routing (baseline / dat / mtl), ``embedding_source`` picks where
    fusion embeddings come from (none / labeled / extracted), and ``fusion``
    defaults to "concat" whenever a source is set.
    """

    def __init__(
        self,
        mode: str = "baseline",
        split: str = "all",
        embedding_source: str = "none",
        fusion: str | None = None,
        accent_loss: str = "ce",
        lam: float = 0.3,
        beta: float = 0.03,
        gamma: float = 0.5,
        epochs: int = 10,
        lr: float = 0.0012,
        batch_size: int = 16,
        novel_strategy: str = "untrained_row",
        seed: int = 0,
    ):
        self.mode = mode
        self.split = split
        self.embedding_source = embedding_source
        self.fusion = fusion
        self.accent_loss = accent_loss
        self.lam = lam
        self.beta = beta
        self.gamma = gamma
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.novel_strategy = novel_strategy
        self.seed = seed

    def _resolved_fusion(self) -> str:
        if self.fusion is not None:
            return self.fusion
        return "none" if self.embedding_source == "none" else "concat"

    def _experiment_config(self, corpus: Corpus) -> ExperimentConfig:
        data = corpus.config
        if data is None:
            accents = {u.accent for u in corpus}
            vocab = max((max(u.tokens, default=0) for u in corpus), default=0) + 1
            data = CorpusConfig(
                n_accents=max(accents) + 1,
                n_regions=1,
                vocab_size=max(vocab, 2),
                feature_dim=corpus.utterances[0].frames.shape[1],
                held_out=[],
            )
            if self.split != "all":
                raise ConfigError(
                    "train.split", "the s18 split needs a corpus with a config (held-out ids)"
                )
        model = ModelConfig.desk(
            fusion=self._resolved_fusion(),
            input_dim=data.feature_dim,
            vocab_size=data.vocab_size,
            n_accents=data.n_accents,
        )
        train_cfg = TrainConfig(
            mode=self.mode,
            split=self.split,
            accent_loss=self.accent_loss,
            lam=self.lam,
            beta=self.beta,
            gamma=self.gamma,
            epochs=self.epochs,
            lr=self.lr,
            batch_size=self.batch_size,
            embedding_source=self.embedding_source,
            novel_strategy=self.novel_strategy,
            seed=self.seed,
        )
        return ExperimentConfig(data=data, model=model, train=train_cfg)

    def fit(self, X, y=None):
        """Train on a Corpus (or utterance sequence); returns self."""
        utts = check_utterances(X)
        corpus = X if isinstance(X, Corpus) else Corpus(utts)
        cfg = self._experiment_config(corpus)
        utt_embeddings = None
        if self.embedding_source == "extracted":
            view = split(corpus, cfg.train.split)
            self.extractor_ = AccentEmbeddingExtractor(
                emb_dim=cfg.model.emb_dim, seed=cfg.train.seed
            )
            self.extractor_.fit(view.train)
            vectors = self.extractor_.transform(corpus.utterances)
            utt_embeddings = {u.uid: vectors[i] for i, u in enumerate(corpus)}
        self.params_, self.report_ = train(cfg, corpus, utt_embeddings=utt_embeddings)
        self.config_ = cfg
        trained = {u.accent for u in corpus.by_split("train")}
        if cfg.train.split == "s18":
            trained -= set(corpus.config.held_out)
        self.trained_accents_ = sorted(trained)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "params_"):
            raise ConfigError("estimator", "call fit before predict/score")

    def _plan_for(self, utts) -> EmbeddingPlan:
        cfg = self.config_
        source = cfg.train.embedding_source
        if source == "extracted":
            vectors = self.extractor_.transform(utts)
            return EmbeddingPlan(
                source=source,
                utt_embeddings={u.uid: vectors[i] for i, u in enumerate(utts)},
            )
        table = self.params_.get("emb/table")
        novel = {u.accent for u in utts} - set(self.trained_accents_)
        return EmbeddingPlan(
            source=source,
            table=None if table is None else table.data,
            n_accents=cfg.model.n_accents,
            novel_accents=frozenset(novel),
            novel_strategy=cfg.train.novel_strategy,
        )

    def predict(self, X) -> list[list[int]]:
        """Greedy-decoded token sequences, one list per utterance."""
        self._check_fitted()
        utts = check_utterances(X)
        return decode_utterances(self.config_.model, self.params_, utts, self._plan_for(utts))

    def score(self, X, y=None) -> float:
        """Negative pooled WER (larger is better, 0 is perfect)."""
        self._check_fitted()
        utts = check_utterances(X)
        hyps = self.predict(utts)
        refs = [u.tokens for u in utts] if y is None else list(y)
        return -wer(refs, hyps)
