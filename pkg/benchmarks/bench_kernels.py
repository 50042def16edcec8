#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy reference.

Times the LSTM recurrence (forward+backward), the CRF dynamic programs, and
one full training epoch of a boundary head on the bundled corpus under each
backend.  Run after `python setup.py build_ext --inplace`:

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from jtfe.nn import kernels_py

try:
    from jtfe.nn import _ckernels

    BACKENDS = [("python", kernels_py), ("c", _ckernels)]
except ImportError:
    print("compiled kernels not built; benchmarking pure python only")
    BACKENDS = [("python", kernels_py)]


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_lstm(impl, T=64, I=96, H=64, iters=50):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(T, I)).astype(np.float32)
    wx = (rng.normal(size=(I, 4 * H)) * 0.05).astype(np.float32)
    wh = (rng.normal(size=(H, 4 * H)) * 0.05).astype(np.float32)
    b = np.zeros(4 * H, dtype=np.float32)
    dh = rng.normal(size=(T, H)).astype(np.float32)

    def run():
        for _ in range(iters):
            _, cache = impl.lstm_forward(x, wx, wh, b)
            impl.lstm_backward(dh, cache)

    return timeit(run)


def bench_crf(impl, T=64, K=12, iters=200):
    rng = np.random.default_rng(1)
    em = rng.normal(size=(T, K)).astype(np.float32)
    trans = rng.normal(size=(K, K)).astype(np.float32)
    begin = rng.normal(size=K).astype(np.float32)
    end = rng.normal(size=K).astype(np.float32)

    def run():
        for _ in range(iters):
            impl.crf_marginals(em, trans, begin, end)
            impl.crf_viterbi(em, trans, begin, end)

    return timeit(run)


def bench_epoch(backend_name):
    """One training epoch of the boundary head on the bundled corpus."""
    import os
    import subprocess
    import sys

    code = (
        "import time\n"
        "from jtfe.data import TOY_CORPUS, SANDHI_RULES\n"
        "from jtfe.lexicon import load_corpus\n"
        "from jtfe.rules import SandhiRuleTable\n"
        "from jtfe.predictors import TaskConfig\n"
        "from jtfe.nn.train import TrainSchedule\n"
        "from jtfe.workflows import TaskAssets, train_task\n"
        "corpus = load_corpus(TOY_CORPUS)\n"
        "assets = TaskAssets(rule_table=SandhiRuleTable.load(SANDHI_RULES))\n"
        "start = time.perf_counter()\n"
        "train_task(TaskConfig(task='apbp', hidden=64, seed=1), corpus, corpus,\n"
        "           TrainSchedule(max_epochs=10, seed=1), assets)\n"
        "print(time.perf_counter() - start)\n"
    )
    env = dict(os.environ, JTFE_BACKEND=backend_name)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    return float(out.stdout.strip().splitlines()[-1])


def main():
    rows = []
    for name, impl in BACKENDS:
        rows.append(
            (
                name,
                bench_lstm(impl),
                bench_crf(impl),
                bench_epoch(name),
            )
        )
    print(f"{'backend':<8} {'lstm fwd+bwd':>14} {'crf dp':>12} {'10-epoch train':>16}")
    for name, lstm_t, crf_t, epoch_t in rows:
        print(f"{name:<8} {lstm_t:>12.4f}s {crf_t:>10.4f}s {epoch_t:>14.2f}s")
    if len(rows) == 2:
        print(
            f"\nspeedup: lstm {rows[0][1] / rows[1][1]:.1f}x, "
            f"crf {rows[0][2] / rows[1][2]:.1f}x, "
            f"train {rows[0][3] / rows[1][3]:.1f}x"
        )


if __name__ == "__main__":
    main()
