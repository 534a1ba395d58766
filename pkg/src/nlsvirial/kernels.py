"""Backend selection for the flow kernels.

The compiled extension is used when importable. Setting the environment
variable NLSVIRIAL_BACKEND=python forces the numpy implementation.
"""
import os

from . import _kernels_py


def _load_compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()

if _compiled is not None and os.environ.get("NLSVIRIAL_BACKEND", "").lower() != "python":
    impl = _compiled
    BACKEND = "cython"
else:
    impl = _kernels_py
    BACKEND = "python"


def available_backends() -> dict:
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


nonlinear_terms = impl.nonlinear_terms
evaluate = impl.evaluate
flow_step = impl.flow_step
