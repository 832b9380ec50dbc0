"""Kernel backend selection: JIT-compiled (numba) or vectorized numpy.

The active backend is chosen once per process from the ``QUDITFOLD_BACKEND``
environment variable (``numba`` or ``numpy``); without it, the JIT backend is
used when numba imports cleanly and the numpy fallback otherwise.  Both
backends expose the same kernel signatures, so callers fetch the module via
``kernels()`` and stay backend-agnostic.  ``set_backend`` overrides the
choice at runtime (used by tests and the kernel benchmark).
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_numpy

try:
    from . import _kernels_numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    _kernels_numba = None
    _HAVE_NUMBA = False

ENV_VAR = "QUDITFOLD_BACKEND"
_active: str | None = None


def _resolve_default() -> str:
    requested = os.environ.get(ENV_VAR, "").strip().lower()
    if requested in ("numba", "numpy"):
        if requested == "numba" and not _HAVE_NUMBA:
            raise ImportError(
                f"{ENV_VAR}=numba requested but numba is not importable"
            )
        return requested
    if requested:
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', got {requested!r}")
    return "numba" if _HAVE_NUMBA else "numpy"


def active_backend() -> str:
    global _active
    if _active is None:
        _active = _resolve_default()
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise ImportError("numba backend requested but numba is not importable")
    _active = name


def kernels():
    """The active kernel module (see module docstring)."""
    return _kernels_numba if active_backend() == "numba" else _kernels_numpy


def warmup() -> None:
    """Trigger JIT compilation of the hot kernels on tiny inputs.

    A no-op on the numpy backend.  Called by the CLI and test session setup
    so that timed runs do not pay compilation latency.
    """
    k = kernels()
    psi = np.full(12, 1 / np.sqrt(12), dtype=np.complex128)
    psi2 = psi.copy()
    codes = np.zeros(12, dtype=np.uint32)
    table = np.ones(1, dtype=np.complex128)
    vals = np.linspace(0.0, 1.0, 12)
    m = np.eye(3, dtype=np.complex128)
    k.phase_apply_table(psi, codes, table)
    k.phase_apply_table2(psi, psi2, codes, table)
    k.phase_apply_direct(psi, vals, 0.1)
    k.phase_apply_direct2(psi, psi2, vals, 0.1)
    k.proj_mixer_axis(psi, 4, 3, 0.1 + 0.1j)
    k.proj_mixer_axis2(psi, psi2, 4, 3, 0.1 + 0.1j)
    k.dense_mixer_axis(psi, 4, 3, m)
    k.dense_mixer_axis2(psi, psi2, 4, 3, m)
    k.expect_values(psi, vals)
    k.grad_inner_values(psi, psi2, vals)
    k.proj_grad_inner_axis(psi, psi2, 4, 3)
    k.dense_grad_inner_axis(psi, psi2, 4, 3, m)
    values = np.empty(16)
    crossings = np.empty(16, dtype=np.uint16)
    end2 = np.empty(16, dtype=np.uint16)
    prefix = np.array([0, 1], dtype=np.int64)
    k.saw_cost_fill(values, crossings, end2, 4, False, prefix, 4, 0.2)
