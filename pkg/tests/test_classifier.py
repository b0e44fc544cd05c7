import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radtext.classifier import (
    DenseParams,
    LstmParams,
    ModelConfig,
    Prediction,
    SweepPoint,
    ThresholdModel,
    TrainedModel,
    _clip_global,
    _embed_tokens,
    gradient_check,
    init_params,
    load_model,
    lstm_forward,
    mse_curve,
    predict,
    save_model,
    softmax,
    sweep_splits,
    train_classifier,
)
from radtext.corpus import (
    LabeledRecord,
    Record,
    RecordDate,
    StopwordList,
    TokenSequence,
    clean_and_tokenize,
)
from radtext.embeddings import EmbedTrainConfig, build_vocab, train_embeddings
from radtext.errors import MissingClassError, ModeError, ValidationError
from radtext.synth import SynthConfig, generate_corpus

NO_STOPWORDS = StopwordList(words=frozenset(), name="none")


def make_record(i, body, label):
    rec = Record(
        id=f"cls-{i:03d}",
        source_name="Valley Tribune",
        source_type="news",
        date=RecordDate(2012),
        title=f"t{i}",
        body=body,
    )
    return LabeledRecord(record=rec, label=label, annotator_id="gold")


def separable_corpus(n_per=20, seed=0):
    """Two disjoint token pools, one per class; linearly separable by
    construction so training behavior is predictable."""
    rng = np.random.default_rng(seed)
    items = []
    i = 0
    for label, toks in (("R", ("xray", "yulo")), ("NR", ("zeta", "wumb"))):
        for _ in range(n_per):
            length = int(rng.integers(8, 16))
            body = " ".join(toks[int(rng.integers(0, 2))] for _ in range(length))
            items.append(make_record(i, body, label))
            i += 1
    return items


@pytest.fixture(scope="module")
def separable():
    items = separable_corpus()
    pairs = [(clean_and_tokenize(it.record, NO_STOPWORDS), it.label) for it in items]
    seqs = [p[0] for p in pairs]
    vocab = build_vocab(seqs, min_count=1)
    emb = train_embeddings(seqs, vocab, EmbedTrainConfig(dimension=8, epochs=5, seed=3))
    return pairs, emb, vocab


@pytest.fixture(scope="module")
def separable_model(separable):
    pairs, emb, vocab = separable
    config = ModelConfig(hidden=8, epochs=15, learning_rate=0.5, seed=0)
    return train_classifier(pairs, emb, vocab, config)


def scalar_gate_lstm(x, per_gate):
    """Independent recurrence written with explicit loops over units.

    per_gate maps gate name to (w d x h, u h x h, b h).  Returns the final
    hidden state.
    """
    T, d = x.shape
    h = per_gate["input"][2].shape[0]
    hs = [0.0] * h
    cs = [0.0] * h
    for t in range(T):
        pre = {}
        for name, (w, u, b) in per_gate.items():
            pre[name] = []
            for j in range(h):
                z = b[j]
                for k in range(d):
                    z += x[t, k] * w[k, j]
                for k in range(h):
                    z += hs[k] * u[k, j]
                pre[name].append(z)
        new_h = [0.0] * h
        new_c = [0.0] * h
        for j in range(h):
            i_g = 1.0 / (1.0 + math.exp(-pre["input"][j]))
            f_g = 1.0 / (1.0 + math.exp(-pre["forget"][j]))
            o_g = 1.0 / (1.0 + math.exp(-pre["output"][j]))
            g_g = math.tanh(pre["candidate"][j])
            new_c[j] = f_g * cs[j] + i_g * g_g
            new_h[j] = o_g * math.tanh(new_c[j])
        hs, cs = new_h, new_c
    return np.array(hs)


class TestForward:
    def test_matches_scalar_recurrence(self):
        rng = np.random.default_rng(42)
        d, h, T = 2, 2, 3
        per_gate = {
            name: (
                rng.normal(size=(d, h)),
                rng.normal(size=(h, h)),
                rng.normal(size=h),
            )
            for name in ("input", "forget", "output", "candidate")
        }
        w = np.hstack([per_gate[n][0] for n in ("input", "forget", "output", "candidate")])
        u = np.hstack([per_gate[n][1] for n in ("input", "forget", "output", "candidate")])
        b = np.concatenate([per_gate[n][2] for n in ("input", "forget", "output", "candidate")])
        params = LstmParams(w=w, u=u, b=b, hidden=h)
        x = rng.normal(size=(T, d))
        h_last, _ = lstm_forward(x, params)
        expected = scalar_gate_lstm(x, per_gate)
        np.testing.assert_allclose(h_last, expected, rtol=1e-12, atol=1e-12)

    def test_zero_params_zero_hidden(self):
        h = 3
        params = LstmParams(
            w=np.zeros((2, 4 * h)), u=np.zeros((h, 4 * h)), b=np.zeros(4 * h), hidden=h
        )
        h_last, _ = lstm_forward(np.ones((5, 2)), params)
        np.testing.assert_array_equal(h_last, np.zeros(h))

    def test_length_masks_trailing_rows(self):
        rng = np.random.default_rng(1)
        params, _ = init_params(3, ModelConfig(hidden=4, seed=1))
        x = rng.normal(size=(6, 3))
        padded = np.vstack([x[:4], np.full((2, 3), 1e6)])
        full, _ = lstm_forward(x[:4], params)
        masked, _ = lstm_forward(padded, params, length=4)
        np.testing.assert_array_equal(full, masked)

    def test_cache_shapes(self):
        params, _ = init_params(3, ModelConfig(hidden=4, seed=1))
        _, cache = lstm_forward(np.zeros((5, 3)), params)
        xs, hs, cs, gates = cache
        assert xs.shape == (5, 3)
        assert hs.shape == (6, 4) and cs.shape == (6, 4)
        assert gates.shape == (5, 16)

    def test_rejects_wrong_feature_dim(self):
        params, _ = init_params(3, ModelConfig(hidden=4, seed=1))
        with pytest.raises(ValidationError):
            lstm_forward(np.zeros((5, 2)), params)

    def test_rejects_bad_length(self):
        params, _ = init_params(3, ModelConfig(hidden=4, seed=1))
        x = np.zeros((5, 3))
        with pytest.raises(ValidationError):
            lstm_forward(x, params, length=0)
        with pytest.raises(ValidationError):
            lstm_forward(x, params, length=6)

    def test_gate_accessor_returns_packed_slices(self):
        h = 2
        w = np.arange(2 * 4 * h, dtype=float).reshape(2, 4 * h)
        u = np.arange(h * 4 * h, dtype=float).reshape(h, 4 * h)
        b = np.arange(4 * h, dtype=float)
        params = LstmParams(w=w, u=u, b=b, hidden=h)
        for k, name in enumerate(("input", "forget", "output", "candidate")):
            gw, gu, gb = params.gate(name)
            np.testing.assert_array_equal(gw, w[:, k * h : (k + 1) * h])
            np.testing.assert_array_equal(gu, u[:, k * h : (k + 1) * h])
            np.testing.assert_array_equal(gb, b[k * h : (k + 1) * h])

    def test_param_shape_validation(self):
        with pytest.raises(ValidationError):
            LstmParams(w=np.zeros((2, 8)), u=np.zeros((2, 8)), b=np.zeros(9), hidden=2)
        with pytest.raises(ValidationError):
            LstmParams(w=np.zeros((2, 8)), u=np.zeros((3, 8)), b=np.zeros(8), hidden=2)


class TestSoftmax:
    def test_known_values(self):
        out = softmax(np.array([0.0, 0.0, 0.0]))
        np.testing.assert_allclose(out, [1 / 3] * 3, rtol=1e-15)

    def test_shift_invariance(self):
        logits = np.array([0.3, -1.2, 2.5])
        np.testing.assert_allclose(
            softmax(logits), softmax(logits + 123.456), rtol=1e-12
        )

    def test_extreme_logits_stay_finite(self):
        out = softmax(np.array([1e4, -1e4, 0.0]))
        assert np.isfinite(out).all()
        assert abs(out.sum() - 1.0) < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=2,
            max_size=6,
        )
    )
    def test_simplex_property(self, vals):
        out = softmax(np.array(vals))
        assert (out >= 0).all()
        assert abs(out.sum() - 1.0) < 1e-9


class TestThresholdModel:
    def test_r_high_decisions(self):
        t = ThresholdModel(mean_r=0.8, mean_nr=0.2, threshold=0.5, orientation="r_high")
        assert t.decide(0.6) == "R"
        assert t.decide(0.4) == "NR"
        assert t.decide(0.5) == "NR"
        assert t.decide(t.mean_r) == "R"
        assert t.decide(t.mean_nr) == "NR"

    def test_r_low_decisions(self):
        t = ThresholdModel(mean_r=0.2, mean_nr=0.8, threshold=0.5, orientation="r_low")
        assert t.decide(0.4) == "R"
        assert t.decide(0.6) == "NR"
        assert t.decide(0.5) == "NR"

    def test_equal_means_tie_goes_nr(self):
        t = ThresholdModel(mean_r=0.5, mean_nr=0.5, threshold=0.5, orientation="r_high")
        assert t.decide(0.5) == "NR"

    def test_threshold_must_sit_between_means(self):
        with pytest.raises(ValidationError):
            ThresholdModel(mean_r=0.8, mean_nr=0.2, threshold=0.9, orientation="r_high")

    def test_orientation_validated(self):
        with pytest.raises(ValidationError):
            ThresholdModel(mean_r=0.8, mean_nr=0.2, threshold=0.5, orientation="up")


class TestPrediction:
    def test_probs_must_be_normalized(self):
        with pytest.raises(ValidationError):
            Prediction(record_id="x", label="R", probs=np.array([0.5, 0.6, 0.1]))
        with pytest.raises(ValidationError):
            Prediction(record_id="x", label="R", probs=np.array([1.1, -0.05, -0.05]))

    def test_valid_probs_accepted(self):
        p = Prediction(record_id="x", label="R", probs=np.array([0.2, 0.3, 0.5]))
        assert p.label == "R"


class TestInit:
    def test_shapes_and_forget_bias(self):
        config = ModelConfig(hidden=5, seed=2)
        lstm, dense = init_params(7, config)
        assert lstm.w.shape == (7, 20)
        assert lstm.u.shape == (5, 20)
        assert lstm.b.shape == (20,)
        np.testing.assert_array_equal(lstm.b[5:10], np.ones(5))
        np.testing.assert_array_equal(lstm.b[:5], np.zeros(5))
        np.testing.assert_array_equal(lstm.b[10:], np.zeros(10))
        assert dense.weight.shape == (5, 1)
        np.testing.assert_array_equal(dense.bias, np.zeros(1))

    def test_fan_scaled_bounds(self):
        config = ModelConfig(hidden=4, seed=0)
        lstm, dense = init_params(6, config)
        assert np.abs(lstm.w).max() <= np.sqrt(6.0 / (6 + 4))
        assert np.abs(lstm.u).max() <= np.sqrt(6.0 / 8)
        assert np.abs(dense.weight).max() <= np.sqrt(6.0 / 5)

    def test_three_class_head_width(self):
        config = ModelConfig(hidden=4, seed=0, mode="three_class_softmax")
        _, dense = init_params(6, config)
        assert dense.weight.shape == (4, 3)

    def test_deterministic(self):
        config = ModelConfig(hidden=4, seed=9)
        a, _ = init_params(6, config)
        b, _ = init_params(6, config)
        np.testing.assert_array_equal(a.w, b.w)
        np.testing.assert_array_equal(a.u, b.u)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            ModelConfig(hidden=0)
        with pytest.raises(ValidationError):
            ModelConfig(learning_rate=0.0)
        with pytest.raises(ValidationError):
            ModelConfig(clip=-1.0)
        with pytest.raises(ValidationError):
            ModelConfig(epochs=-1)
        with pytest.raises(ValidationError):
            ModelConfig(mode="four_class")


class TestEmbedTokens:
    def test_rows_unit_norm_after_centering(self, separable):
        pairs, emb, vocab = separable
        x = _embed_tokens(pairs[0][0], emb, vocab, max_len=200)
        norms = np.linalg.norm(x, axis=1)
        np.testing.assert_allclose(norms, np.ones(len(norms)), rtol=1e-9)

    def test_truncates_to_max_len(self, separable):
        pairs, emb, vocab = separable
        seq = pairs[0][0]
        x = _embed_tokens(seq, emb, vocab, max_len=3)
        assert x.shape == (3, emb.dimension)

    def test_oov_token_uses_sentinel_row(self, separable):
        _, emb, vocab = separable
        seq = TokenSequence(tokens=("neverseen",), source_record_id="q")
        x = _embed_tokens(seq, emb, vocab, max_len=10)
        assert np.isfinite(x).all()

    def test_empty_sequence_rejected(self, separable):
        _, emb, vocab = separable
        seq = TokenSequence(tokens=(), source_record_id="q")
        with pytest.raises(ValidationError):
            _embed_tokens(seq, emb, vocab, max_len=10)


class TestTraining:
    def test_deterministic_given_seed(self, separable):
        pairs, emb, vocab = separable
        config = ModelConfig(hidden=4, epochs=3, learning_rate=0.5, seed=5)
        m1 = train_classifier(pairs, emb, vocab, config)
        m2 = train_classifier(pairs, emb, vocab, config)
        np.testing.assert_array_equal(m1.lstm.w, m2.lstm.w)
        np.testing.assert_array_equal(m1.lstm.u, m2.lstm.u)
        np.testing.assert_array_equal(m1.lstm.b, m2.lstm.b)
        np.testing.assert_array_equal(m1.dense.weight, m2.dense.weight)
        assert m1.loss_history == m2.loss_history
        assert m1.threshold == m2.threshold

    def test_two_class_needs_both_labels(self, separable):
        pairs, emb, vocab = separable
        only_r = [(s, lab) for s, lab in pairs if lab == "R"]
        with pytest.raises(MissingClassError):
            train_classifier(only_r, emb, vocab, ModelConfig(hidden=4, epochs=1))

    def test_three_class_needs_all_labels(self, separable):
        pairs, emb, vocab = separable
        config = ModelConfig(hidden=4, epochs=1, mode="three_class_softmax")
        with pytest.raises(MissingClassError):
            train_classifier(pairs, emb, vocab, config)

    def test_empty_training_set(self, separable):
        _, emb, vocab = separable
        with pytest.raises(ValidationError):
            train_classifier([], emb, vocab, ModelConfig(hidden=4, epochs=1))

    def test_separable_corpus_learned_exactly(self, separable, separable_model):
        pairs, _, _ = separable
        model = separable_model
        hits = sum(predict(model, seq).label == lab for seq, lab in pairs)
        assert hits == len(pairs)
        assert model.threshold is not None
        assert model.threshold.mean_r > model.threshold.mean_nr
        assert model.threshold.orientation == "r_high"

    def test_loss_nonincreasing_after_burn_in(self, separable):
        # Guaranteed only where the classes are separable by construction;
        # per-example SGD wiggles on harder corpora.
        pairs, emb, vocab = separable
        for seed in (0, 1, 2):
            config = ModelConfig(hidden=8, epochs=15, learning_rate=0.5, seed=seed)
            h = train_classifier(pairs, emb, vocab, config).loss_history
            assert len(h) == 15
            for e in range(3, len(h) - 1):
                assert h[e + 1] <= h[e] + 1e-9, f"seed {seed}: rise at epoch {e + 1}"
            assert h[-1] < h[3]

    def test_loss_history_finite_and_positive(self, separable_model):
        h = separable_model.loss_history
        assert all(np.isfinite(v) and v >= 0 for v in h)

    def test_epochs_zero_still_fits_threshold(self, separable):
        pairs, emb, vocab = separable
        config = ModelConfig(hidden=4, epochs=0, seed=1)
        model = train_classifier(pairs, emb, vocab, config)
        assert model.loss_history == ()
        assert model.threshold is not None
        pred = predict(model, pairs[0][0])
        assert pred.label in ("R", "NR")

    def test_three_class_trains_and_predicts(self, separable):
        pairs, emb, vocab = separable
        third = [
            (TokenSequence(tokens=("xray", "zeta") * 4, source_record_id=f"i-{k}"), "I")
            for k in range(6)
        ]
        config = ModelConfig(hidden=8, epochs=5, mode="three_class_softmax", seed=2)
        model = train_classifier(pairs + third, emb, vocab, config)
        assert model.threshold is None
        pred = predict(model, pairs[0][0])
        assert pred.label in ("R", "NR", "I")
        assert pred.probs is not None and abs(pred.probs.sum() - 1.0) < 1e-9


class TestGradientCheck:
    def test_two_class_analytic_matches_numeric(self):
        config = ModelConfig(hidden=4, epochs=1, seed=0)
        assert gradient_check(config, seed=7) < 1e-4

    def test_three_class_analytic_matches_numeric(self):
        config = ModelConfig(hidden=4, epochs=1, seed=0, mode="three_class_softmax")
        assert gradient_check(config, seed=7) < 1e-4

    def test_detects_corrupted_backward(self):
        from radtext import _kernels

        def broken(xs, w, u, hs, cs, gates, dh_last):
            dw, du, db = _kernels.lstm_backward_pass(xs, w, u, hs, cs, gates, dh_last)
            return dw * 1.1, du, db

        config = ModelConfig(hidden=4, epochs=1, seed=0)
        assert gradient_check(config, seed=7, backward_fn=broken) > 1e-2


class TestClip:
    def test_large_gradients_scaled_to_bound(self):
        grads = [np.full((3, 3), 10.0), np.full(4, -10.0)]
        _clip_global(grads, clip=5.0)
        total = np.sqrt(sum(float((g * g).sum()) for g in grads))
        assert abs(total - 5.0) < 1e-12

    def test_direction_preserved(self):
        g0 = np.array([3.0, 4.0])
        grads = [g0.copy() * 100]
        _clip_global(grads, clip=1.0)
        np.testing.assert_allclose(grads[0] / np.linalg.norm(grads[0]), g0 / 5.0)

    def test_small_gradients_untouched(self):
        grads = [np.array([0.1, 0.2])]
        before = grads[0].copy()
        _clip_global(grads, clip=5.0)
        np.testing.assert_array_equal(grads[0], before)


@pytest.fixture(scope="module")
def synth_setup():
    from radtext.corpus import default_stopwords

    stopwords = default_stopwords()
    corpus = generate_corpus(SynthConfig(n_records=60, seed=4))
    seqs = [
        clean_and_tokenize(it.record, stopwords)
        for it in corpus
    ]
    vocab = build_vocab([s for s in seqs if s.tokens], min_count=1)
    emb = train_embeddings(
        [s for s in seqs if s.tokens], vocab, EmbedTrainConfig(dimension=16, epochs=2, seed=4)
    )
    return corpus, emb, vocab, stopwords


class TestSweep:
    def test_structure_and_repeatability(self, synth_setup):
        corpus, emb, vocab, stopwords = synth_setup
        config = ModelConfig(hidden=8, epochs=4, learning_rate=0.5, seed=4)
        ratios = [0.5, 0.7, 0.8]
        points = sweep_splits(corpus, ratios, emb, vocab, config, stopwords)
        assert [p.ratio for p in points] == ratios
        n_two_class = sum(1 for it in corpus if it.label in ("R", "NR"))
        for p in points:
            assert p.warning is None
            assert 0.0 <= p.accuracy <= 1.0
            assert p.n_train + p.n_test == n_two_class
            assert p.n_train == round(p.ratio * n_two_class)
        again = sweep_splits(corpus, ratios, emb, vocab, config, stopwords)
        assert points == again

    def test_degenerate_ratio_becomes_warning_point(self, synth_setup):
        corpus, emb, vocab, stopwords = synth_setup
        config = ModelConfig(hidden=8, epochs=1, seed=4)
        points = sweep_splits(corpus, [0.004], emb, vocab, config, stopwords)
        assert len(points) == 1
        assert points[0].accuracy is None
        assert points[0].warning

    def test_ratio_out_of_range_rejected(self, synth_setup):
        corpus, emb, vocab, stopwords = synth_setup
        config = ModelConfig(hidden=8, epochs=1, seed=4)
        with pytest.raises(ValidationError):
            sweep_splits(corpus, [1.0], emb, vocab, config, stopwords)

    def test_three_class_mode_keeps_all_labels(self, synth_setup):
        corpus, emb, vocab, stopwords = synth_setup
        config = ModelConfig(
            hidden=8, epochs=2, seed=4, mode="three_class_softmax"
        )
        points = sweep_splits(corpus, [0.8], emb, vocab, config, stopwords)
        assert points[0].n_train + points[0].n_test == len(corpus)


class TestMseCurve:
    def test_rows_match_brute_force(self, separable, separable_model):
        pairs, _, _ = separable
        rows = mse_curve(separable_model, pairs)
        assert len(rows) == len(pairs)
        by_id = {seq.source_record_id: lab for seq, lab in pairs}
        for rid, score, err in rows:
            target = 1.0 if by_id[rid] == "R" else 0.0
            assert err == (score - target) ** 2
        scores = [r[1] for r in rows]
        assert scores == sorted(scores)
        expected_mean = np.mean(
            [
                (predict(separable_model, seq).score - (1.0 if lab == "R" else 0.0)) ** 2
                for seq, lab in pairs
            ]
        )
        assert abs(np.mean([r[2] for r in rows]) - expected_mean) < 1e-15

    def test_rejects_i_labels(self, separable, separable_model):
        pairs, _, _ = separable
        bad = pairs[:1] + [(pairs[0][0], "I")]
        with pytest.raises(ModeError):
            mse_curve(separable_model, bad)

    def test_rejects_three_class_model(self, separable):
        pairs, emb, vocab = separable
        third = [
            (TokenSequence(tokens=("xray", "zeta"), source_record_id=f"i-{k}"), "I")
            for k in range(3)
        ]
        config = ModelConfig(hidden=4, epochs=1, mode="three_class_softmax", seed=0)
        model = train_classifier(pairs + third, emb, vocab, config)
        with pytest.raises(ModeError):
            mse_curve(model, pairs)


class TestSaveLoad:
    def test_round_trip_bit_exact(self, tmp_path, separable, separable_model):
        pairs, emb, vocab = separable
        path = tmp_path / "model.txt"
        save_model(separable_model, path)
        loaded = load_model(path, emb, vocab)
        np.testing.assert_array_equal(loaded.lstm.w, separable_model.lstm.w)
        np.testing.assert_array_equal(loaded.lstm.u, separable_model.lstm.u)
        np.testing.assert_array_equal(loaded.lstm.b, separable_model.lstm.b)
        np.testing.assert_array_equal(loaded.dense.weight, separable_model.dense.weight)
        np.testing.assert_array_equal(loaded.dense.bias, separable_model.dense.bias)
        assert loaded.config == separable_model.config
        assert loaded.threshold == separable_model.threshold
        for seq, _ in pairs[:5]:
            a = predict(separable_model, seq)
            b = predict(loaded, seq)
            assert (a.record_id, a.label, a.score) == (b.record_id, b.label, b.score)

    def test_three_class_container_has_no_threshold(self, tmp_path, separable):
        pairs, emb, vocab = separable
        third = [
            (TokenSequence(tokens=("xray", "zeta"), source_record_id=f"i-{k}"), "I")
            for k in range(3)
        ]
        config = ModelConfig(hidden=4, epochs=1, mode="three_class_softmax", seed=0)
        model = train_classifier(pairs + third, emb, vocab, config)
        path = tmp_path / "model3.txt"
        save_model(model, path)
        assert "threshold" not in path.read_text()
        loaded = load_model(path, emb, vocab)
        assert loaded.threshold is None
        np.testing.assert_array_equal(loaded.dense.weight, model.dense.weight)

    def test_rejects_foreign_file(self, tmp_path, separable):
        _, emb, vocab = separable
        path = tmp_path / "other.txt"
        path.write_text("some other format 1\n")
        with pytest.raises(ValidationError):
            load_model(path, emb, vocab)

    def test_rejects_unknown_version(self, tmp_path, separable, separable_model):
        _, emb, vocab = separable
        path = tmp_path / "model.txt"
        save_model(separable_model, path)
        lines = path.read_text().splitlines()
        lines[0] = "radtext-model 99"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValidationError):
            load_model(path, emb, vocab)

    def test_rejects_truncated_tensor(self, tmp_path, separable, separable_model):
        _, emb, vocab = separable
        path = tmp_path / "model.txt"
        save_model(separable_model, path)
        text = path.read_text().splitlines()
        path.write_text("\n".join(text[:-1]) + "\n")
        with pytest.raises(ValidationError):
            load_model(path, emb, vocab)
