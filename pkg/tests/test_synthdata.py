import numpy as np
import pytest

from accentctc import synthdata as sd
from accentctc.errors import ConfigError, ContractError


def small_config(**kw):
    base = dict(
        n_accents=4,
        n_regions=2,
        vocab_size=8,
        feature_dim=10,
        frames_per_token=3,
        min_tokens=2,
        max_tokens=5,
        dominant_train=30,
        dominant_test=10,
        other_train=12,
        other_test=6,
        held_out=[3],
        seed=5,
    )
    base.update(kw)
    return sd.CorpusConfig(**base)


def test_same_seed_bit_identical():
    a = sd.generate_corpus(small_config())
    b = sd.generate_corpus(small_config())
    assert len(a) == len(b)
    for ua, ub in zip(a, b):
        assert ua.uid == ub.uid and ua.tokens == ub.tokens
        assert np.array_equal(ua.frames, ub.frames)


def test_counts_match_config_exactly():
    cfg = small_config()
    corpus = sd.generate_corpus(cfg)
    for a in range(cfg.n_accents):
        utts = corpus.by_accent(a)
        n_train = sum(1 for u in utts if u.split == "train")
        n_test = sum(1 for u in utts if u.split == "test")
        if a == 0:
            assert (n_train, n_test) == (30, 10)
        else:
            assert (n_train, n_test) == (12, 6)


def test_degenerate_transform_and_noise():
    cfg = small_config(transform_strength=0.0, noise=0.0)
    corpus = sd.generate_corpus(cfg)
    # with no transform and no noise, frames depend only on the token sequence
    by_tokens = {}
    for u in corpus:
        key = tuple(u.tokens)
        if key in by_tokens:
            assert np.array_equal(u.frames, by_tokens[key])
        else:
            by_tokens[key] = u.frames
    rot, bias = corpus.transforms[1]
    assert np.allclose(rot, np.eye(cfg.feature_dim), atol=1e-15)
    assert np.allclose(bias, 0.0, atol=1e-15)


def test_tokens_invertible_without_noise():
    cfg = small_config(noise=0.0)
    corpus = sd.generate_corpus(cfg)
    for u in corpus:
        assert sd.nearest_prototype_tokens(u, corpus) == u.tokens


def test_token_range_and_frame_shape():
    cfg = small_config()
    corpus = sd.generate_corpus(cfg)
    for u in corpus:
        assert all(1 <= t < cfg.vocab_size for t in u.tokens)
        assert cfg.min_tokens <= len(u.tokens) <= cfg.max_tokens
        assert u.frames.shape == (cfg.frames_per_token * len(u.tokens), cfg.feature_dim)


def test_two_accents_linearly_separable_at_frame_level():
    from sklearn.linear_model import LogisticRegression

    cfg = small_config()
    corpus = sd.generate_corpus(cfg)
    frames, labels = [], []
    for accent in (1, 2):
        for u in corpus.by_accent(accent):
            frames.append(u.frames)
            labels.extend([accent] * u.frames.shape[0])
    x = np.concatenate(frames)
    y = np.array(labels)
    rng = np.random.default_rng(0)
    order = rng.permutation(len(y))
    half = len(y) // 2
    probe = LogisticRegression(max_iter=1000).fit(x[order[:half]], y[order[:half]])
    acc = probe.score(x[order[half:]], y[order[half:]])
    assert acc >= 0.95


def test_rotations_are_orthogonal():
    cfg = small_config(transform_strength=1.3)
    corpus = sd.generate_corpus(cfg)
    for rot, _bias in corpus.transforms.values():
        assert np.abs(rot @ rot.T - np.eye(cfg.feature_dim)).max() <= 1e-10


def test_region_structure():
    cfg = small_config()
    assert [sd.region_of(a, cfg) for a in range(4)] == [0, 0, 1, 1]


def test_contamination_renders_some_dominant_utts_off_accent():
    cfg = small_config(contamination=0.5, noise=0.0)
    corpus = sd.generate_corpus(cfg)
    contaminated = 0
    for u in corpus.by_accent(0):
        if u.split != "train":
            continue
        rot, bias = corpus.transforms[0]
        clean = (u.frames - bias) @ rot.T
        block = clean[: cfg.frames_per_token].mean(axis=0)
        d2 = ((corpus.prototypes - block) ** 2).sum(axis=1)
        if int(d2.argmin()) != u.tokens[0]:
            contaminated += 1
    assert contaminated > 0
    # labels stay dominant regardless
    assert all(u.accent == 0 for u in corpus.by_accent(0))


# ---------------------------------------------------------------------------
# speed perturbation
# ---------------------------------------------------------------------------


def test_speed_identity():
    frames = np.random.default_rng(1).normal(size=(9, 4))
    out = sd.speed_perturb(frames, 1.0)
    assert np.array_equal(out, frames)
    assert out is not frames


def test_speed_halving():
    frames = np.arange(10.0)[:, None]
    out = sd.speed_perturb(frames, 2.0)
    assert out.shape == (5, 1)
    assert np.array_equal(out[:, 0], [0, 2, 4, 6, 8])


def test_speed_contract_errors():
    frames = np.zeros((3, 2))
    with pytest.raises(ContractError):
        sd.speed_perturb(frames, 0.0)
    with pytest.raises(ContractError):
        sd.speed_perturb(np.zeros((1, 2)), 5.0)


def test_speed_lengths():
    frames = np.zeros((40, 2))
    assert sd.speed_perturb(frames, 0.9).shape[0] == 44
    assert sd.speed_perturb(frames, 1.1).shape[0] == 36


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------


def test_split_all_keeps_every_accent():
    cfg = small_config()
    corpus = sd.generate_corpus(cfg)
    view = sd.split(corpus, "all")
    assert {u.accent for u in view.train} == {u.accent for u in view.test} == {0, 1, 2, 3}
    assert view.novel_accents == set()


def test_split_s18_removes_held_out_from_train_only():
    cfg = small_config()
    corpus = sd.generate_corpus(cfg)
    view = sd.split(corpus, "s18")
    assert {u.accent for u in view.train} == {0, 1, 2}
    assert 3 in {u.accent for u in view.test}
    assert view.novel_accents == {3}
    assert sum(1 for u in view.test if u.accent == 3) > 0


def test_split_bad_mode():
    with pytest.raises(ConfigError):
        sd.split(sd.generate_corpus(small_config()), "half")


def test_config_rejects_unknown_held_out():
    with pytest.raises(ConfigError):
        small_config(held_out=[9])
    with pytest.raises(ConfigError):
        small_config(held_out=[0])


# ---------------------------------------------------------------------------
# corpus files
# ---------------------------------------------------------------------------


def test_jsonl_roundtrip_bit_exact(tmp_path):
    cfg = small_config(dominant_train=5, dominant_test=2, other_train=3, other_test=2)
    corpus = sd.generate_corpus(cfg)
    path = tmp_path / "corpus.jsonl"
    sd.save_corpus(corpus, path)
    loaded = sd.load_corpus(path)
    assert len(loaded) == len(corpus)
    for a, b in zip(corpus, loaded):
        assert (a.uid, a.accent, a.split, a.tokens) == (b.uid, b.accent, b.split, b.tokens)
        assert np.array_equal(a.frames, b.frames)
    # second save of the loaded corpus produces the identical file
    path2 = tmp_path / "again.jsonl"
    sd.save_corpus(loaded, path2)
    assert path.read_text() == path2.read_text()
