"""Kernel backend selection.

The compiled extension is preferred when importable; set JTFE_BACKEND to
"python" or "c" to force a backend (forcing "c" raises if the extension is
missing).  Whichever backend is active, results are deterministic for a
given build.
"""

from __future__ import annotations

import os

from . import kernels_py

_FORCED = os.environ.get("JTFE_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "c"
    except ImportError:
        if _FORCED == "c":
            raise ImportError(
                "JTFE_BACKEND=c requested but the compiled extension is not "
                "built; run `python setup.py build_ext --inplace`"
            )
        _impl = kernels_py
        BACKEND = "python"

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
crf_alphas = _impl.crf_alphas
crf_betas = _impl.crf_betas
crf_log_partition = _impl.crf_log_partition
crf_marginals = _impl.crf_marginals
crf_viterbi = _impl.crf_viterbi
