import itertools
import math

import numpy as np
import pytest

from jtfe.errors import EmptySplit, WidthMismatch
from jtfe.nn import kernels
from jtfe.nn.layers import BiLstm, CrfLayer, softmax_xent
from jtfe.nn.model import CrfTagger, EncodedSentence, PdClassifier
from jtfe.nn.train import TrainSchedule, train


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------


def enumerate_crf(emissions, trans, begin, end):
    """Brute force over all K^T label sequences: path scores, the exact
    log-partition, and the best sequence."""
    T, K = emissions.shape
    scores = {}
    for path in itertools.product(range(K), repeat=T):
        s = begin[path[0]] + end[path[-1]]
        s += sum(emissions[t, path[t]] for t in range(T))
        s += sum(trans[a, b] for a, b in zip(path, path[1:]))
        scores[path] = float(s)
    log_z = math.log(sum(math.exp(v) for v in scores.values()))
    best_path = min(sorted(scores), key=lambda p: (-scores[p], p))
    return scores, log_z, best_path


def finite_difference(fn, param, h=1e-5):
    """Central differences of a scalar function w.r.t. one array."""
    grad = np.zeros_like(param)
    flat = param.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn()
        flat[i] = orig - h
        fm = fn()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def rel_err(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return np.abs(a - b).max() / denom


# ---------------------------------------------------------------------------
# CRF
# ---------------------------------------------------------------------------


class TestCrfOracle:
    def test_log_partition_matches_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            T = rng.integers(1, 6)
            K = rng.integers(1, 5)
            em = rng.normal(size=(T, K))
            trans = rng.normal(size=(K, K))
            begin = rng.normal(size=K)
            end = rng.normal(size=K)
            _, log_z, _ = enumerate_crf(em, trans, begin, end)
            got = kernels.crf_log_partition(em, trans, begin, end)
            assert abs(got - log_z) < 1e-9

    def test_viterbi_matches_enumeration(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            T = rng.integers(1, 6)
            K = rng.integers(1, 5)
            em = rng.normal(size=(T, K))
            trans = rng.normal(size=(K, K))
            begin = rng.normal(size=K)
            end = rng.normal(size=K)
            scores, _, best = enumerate_crf(em, trans, begin, end)
            path, score = kernels.crf_viterbi(em, trans, begin, end)
            assert abs(score - scores[best]) < 1e-9
            assert abs(scores[tuple(path)] - scores[best]) < 1e-9

    def test_sequence_probabilities_sum_to_one(self):
        rng = np.random.default_rng(2)
        crf = CrfLayer(3, rng=np.random.default_rng(5), dtype=np.float64)
        for arr in crf.params().values():
            arr[...] = rng.normal(size=arr.shape)
        em = rng.normal(size=(4, 3))
        p = crf.params()
        scores, log_z, _ = enumerate_crf(em, p["trans"], p["begin"], p["end"])
        total = sum(math.exp(s - log_z) for s in scores.values())
        assert abs(total - 1.0) < 1e-8
        # every gold probability lies in (0, 1]
        for path, s in scores.items():
            assert 0.0 < math.exp(s - crf.log_partition(em)) <= 1.0 + 1e-12

    def test_single_label_nll_is_zero(self):
        crf = CrfLayer(1, rng=np.random.default_rng(0), dtype=np.float64)
        em = np.random.default_rng(3).normal(size=(5, 1))
        labels = np.zeros(5, dtype=np.int64)
        assert crf.nll(em, labels) == pytest.approx(0.0, abs=1e-12)
        path, _ = crf.viterbi(em)
        assert path.tolist() == [0] * 5

    def test_zero_scores_partition_is_t_log_k(self):
        T, K = 4, 3
        em = np.zeros((T, K))
        z = kernels.crf_log_partition(em, np.zeros((K, K)), np.zeros(K), np.zeros(K))
        assert z == pytest.approx(T * math.log(K), abs=1e-12)

    def test_zero_transitions_viterbi_is_argmax(self):
        rng = np.random.default_rng(4)
        em = rng.normal(size=(6, 4))
        K = 4
        path, _ = kernels.crf_viterbi(em, np.zeros((K, K)), np.zeros(K), np.zeros(K))
        assert path.tolist() == em.argmax(axis=1).tolist()

    def test_nll_nonnegative(self):
        rng = np.random.default_rng(6)
        crf = CrfLayer(3, rng=np.random.default_rng(7), dtype=np.float64)
        for _ in range(20):
            T = int(rng.integers(1, 6))
            em = rng.normal(size=(T, 3))
            labels = rng.integers(0, 3, size=T)
            assert crf.nll(em, labels) >= -1e-10

    def test_label_out_of_range_rejected(self):
        crf = CrfLayer(2, rng=np.random.default_rng(0))
        em = np.zeros((2, 2), dtype=np.float32)
        with pytest.raises(ValueError):
            crf.nll(em, np.array([0, 5]))


# ---------------------------------------------------------------------------
# LSTM
# ---------------------------------------------------------------------------


class TestLstm:
    def test_empty_sequence(self):
        layer = BiLstm(3, 2, np.random.default_rng(0))
        h, _ = layer.forward(np.zeros((0, 3), dtype=np.float32))
        assert h.shape == (0, 4)

    def test_zero_parameters_give_zero_outputs(self):
        layer = BiLstm(3, 2, np.random.default_rng(0), dtype=np.float64)
        for arr in layer.params().values():
            arr[...] = 0.0
        x = np.random.default_rng(1).normal(size=(4, 3))
        h, _ = layer.forward(x)
        assert np.allclose(h, 0.0)

    def test_width_mismatch(self):
        layer = BiLstm(3, 2, np.random.default_rng(0))
        with pytest.raises(WidthMismatch):
            layer.forward(np.zeros((4, 5), dtype=np.float32))

    def test_forward_prefix_property(self):
        """Unidirectional forward states only depend on the prefix read so
        far."""
        rng = np.random.default_rng(2)
        wx = rng.normal(size=(3, 8))
        wh = rng.normal(size=(2, 8))
        b = rng.normal(size=8)
        x1 = rng.normal(size=(6, 3))
        x2 = x1.copy()
        x2[4:] = rng.normal(size=(2, 3))
        h1, _ = kernels.lstm_forward(x1, wx, wh, b)
        h2, _ = kernels.lstm_forward(x2, wx, wh, b)
        assert np.allclose(h1[:4], h2[:4])
        assert not np.allclose(h1[4:], h2[4:])

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        layer = BiLstm(3, 2, rng, dtype=np.float64)
        x = np.random.default_rng(4).normal(size=(4, 3))
        proj = np.random.default_rng(5).normal(size=4)  # fixed loss weights

        def loss():
            h, _ = layer.forward(x)
            return float((h @ proj).sum())

        h, cache = layer.forward(x)
        dh = np.tile(proj, (4, 1))
        layer.zero_grads()
        dx = layer.backward(dh, cache)
        for name, param in layer.params().items():
            fd = finite_difference(loss, param)
            assert rel_err(fd, layer.grads()[name]) < 1e-4, name

        def loss_x():
            h, _ = layer.forward(x)
            return float((h @ proj).sum())

        fd_x = finite_difference(loss_x, x)
        assert rel_err(fd_x, dx) < 1e-4


# ---------------------------------------------------------------------------
# Full-model gradient checks
# ---------------------------------------------------------------------------


def tiny_crf_example():
    ex = EncodedSentence(
        sent_id="t",
        feat_idx=np.array([[0, 1], [2, 0], [1, 1], [0, 2]], dtype=np.int32),
        implicit=np.random.default_rng(8).normal(size=(4, 3)).astype(np.float64),
        labels=np.array([0, 2, 1, 0], dtype=np.int64),
    )
    model = CrfTagger(
        [3, 3], n_labels=3, embed_dim=3, implicit_dim=3, hidden=4, seed=9,
        dtype=np.float64,
    )
    return model, ex


def tiny_pd_example():
    ex = EncodedSentence(
        sent_id="t",
        feat_idx=np.array([[0], [2], [1]], dtype=np.int32),
        targets=[(1, "w", 1)],
    )
    model = PdClassifier(
        [3],
        {"w": ["a", "b", "c"], "v": ["d", "e"]},
        embed_dim=3,
        hidden=3,
        seed=10,
        dtype=np.float64,
    )
    return model, ex


class TestModelGradients:
    @pytest.mark.parametrize("factory", [tiny_crf_example, tiny_pd_example])
    def test_every_parameter_block(self, factory):
        model, ex = factory()
        # move off the zero-initialized CRF point so transition gradients
        # are checked at a generic position
        jitter = np.random.default_rng(99)
        for name, arr in model.params().items():
            if name.startswith("crf."):
                arr += jitter.normal(scale=0.3, size=arr.shape)
        model.zero_grads()
        model.loss_grads(ex)
        grads = {k: v.copy() for k, v in model.grads().items()}

        for name, param in model.params().items():
            fd = finite_difference(lambda: model.loss_grads_probe(ex), param)
            assert rel_err(fd, grads[name]) < 1e-4, name


# probe helper: loss without touching gradient buffers
def _loss_probe(self, ex):
    snapshot = {k: v.copy() for k, v in self.grads().items()}
    loss = self.loss_grads(ex)
    for k, v in self.grads().items():
        v[...] = snapshot[k]
    return loss


CrfTagger.loss_grads_probe = _loss_probe
PdClassifier.loss_grads_probe = _loss_probe


class TestMaskedSoftmax:
    def test_masked_candidates_get_zero_probability_and_gradient(self):
        logits = np.array([1.0, 2.0, 3.0, 4.0])
        loss, dl = softmax_xent(logits, gold=2, allowed=[1, 2])
        assert dl[0] == 0.0 and dl[3] == 0.0
        probs = np.exp([1.0, 2.0]) / np.exp([1.0, 2.0]).sum()
        assert loss == pytest.approx(-math.log(np.exp(3.0) / (np.exp(2.0) + np.exp(3.0))))
        assert dl[1] == pytest.approx(probs[0] * 0 + np.exp(2.0) / (np.exp(2.0) + np.exp(3.0)))


# ---------------------------------------------------------------------------
# Trainer schedule
# ---------------------------------------------------------------------------


def schedule_oracle(metric_trace, lr0=0.1, patience=4, halving=0.5, stop=1e-4):
    """Independent simulation: per-epoch lr values until the stop rule."""
    lrs = []
    lr = lr0
    best = float("-inf")
    bad = 0
    for m in metric_trace:
        if lr < stop:
            break
        lrs.append(lr)
        if m > best:
            best, bad = m, 0
        else:
            bad += 1
            if bad >= patience:
                lr *= halving
                bad = 0
    return lrs


def constant_metric_run(max_epochs=200):
    model, ex = tiny_crf_example()
    calls = []

    def metric(_model, _data):
        calls.append(0.5)
        return 0.5

    history = train(
        model,
        [ex],
        [ex],
        TrainSchedule(batch_size=1, max_epochs=max_epochs, seed=0),
        metric,
    )
    return history


class TestSchedule:
    def test_improving_metric_keeps_lr(self):
        model, ex = tiny_crf_example()
        counter = iter(range(1000))

        def metric(_model, _data):
            return float(next(counter))

        history = train(
            model, [ex], [ex], TrainSchedule(batch_size=1, max_epochs=20, seed=0), metric
        )
        assert all(r.lr == 0.1 for r in history.records)

    def test_constant_metric_halves_until_stop(self):
        history = constant_metric_run()
        lrs = [r.lr for r in history.records]
        oracle = schedule_oracle([0.5] * len(lrs))
        assert lrs == oracle
        # the last learning rate used is 0.1 * 2^-9; one more halving stops
        assert lrs[-1] == pytest.approx(0.1 * 2**-9)
        assert lrs[-1] / 2 < 1e-4

    def test_deterministic_given_seed(self):
        def run():
            model, ex = tiny_crf_example()
            losses = iter(np.linspace(1.0, 0.1, 50))

            def metric(m, _):
                return -float(next(losses))

            train(model, [ex], [ex], TrainSchedule(batch_size=1, max_epochs=8, seed=3), metric)
            return {k: v.copy() for k, v in model.params().items()}

        a, b = run(), run()
        for k in a:
            assert a[k].tobytes() == b[k].tobytes()

    def test_empty_split_rejected(self):
        model, ex = tiny_crf_example()
        with pytest.raises(EmptySplit):
            train(model, [], [ex], TrainSchedule(), lambda m, d: 0.0)
        with pytest.raises(EmptySplit):
            train(model, [ex], [], TrainSchedule(), lambda m, d: 0.0)

    def test_best_parameters_restored(self):
        model, ex = tiny_crf_example()
        metrics = iter([1.0, 5.0, 2.0, 2.0, 2.0, 2.0, 2.0])
        snaps = []

        def metric(m, _):
            snaps.append(m.snapshot())
            return next(metrics, 0.0)

        train(model, [ex], [ex], TrainSchedule(batch_size=1, max_epochs=7, seed=0), metric)
        best = snaps[1]  # metric 5.0 at epoch 2
        for k, v in model.params().items():
            assert np.array_equal(v, best[k])


class TestLossDecreases:
    def test_epoch_mean_loss_monotone_on_toy_corpus(self):
        rng = np.random.default_rng(11)
        data = []
        for i in range(30):
            T = int(rng.integers(2, 6))
            feats = rng.integers(0, 4, size=(T, 2)).astype(np.int32)
            labels = (feats[:, 0] % 2).astype(np.int64)
            data.append(EncodedSentence(sent_id=str(i), feat_idx=feats, labels=labels))
        model = CrfTagger([4, 4], n_labels=2, embed_dim=4, hidden=8, seed=12)
        history = train(
            model,
            data,
            data,
            TrainSchedule(lr=0.01, batch_size=32, max_epochs=5, seed=0),
            lambda m, d: 0.0,
        )
        losses = [r.train_loss for r in history.records]
        assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))
