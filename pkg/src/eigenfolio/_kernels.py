"""Cyclic Jacobi eigenvalue kernels.

Two implementations of the same row-cyclic sweep live here: a scalar loop
compiled with numba, and a vectorised numpy version used when numba is
missing or disabled. Set ``EIGENFOLIO_NUMBA=0`` to force the numpy path.
Both apply identical floating point operations per rotation, so they agree
to rounding in the convergence test only.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        return decorator


def _env_flag(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "no", "off", "")


USE_NUMBA = HAVE_NUMBA and _env_flag("EIGENFOLIO_NUMBA", True)

# Rotation is skipped when the pivot is this small relative to its diagonal.
_SKIP_REL = 1e-18


@njit(cache=True)
def _off_norm_nb(a):
    n = a.shape[0]
    acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += a[i, j] * a[i, j]
    return math.sqrt(acc)


@njit(cache=True)
def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    return c, t * c


@njit(cache=True)
def jacobi_numba(a, tol, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    off = _off_norm_nb(a)
    sweeps = 0
    while off >= tol and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= _SKIP_REL * (abs(a[p, p]) + abs(a[q, q])) or apq == 0.0:
                    continue
                c, s = _rotation(a[p, p], a[q, q], apq)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        sweeps += 1
        off = _off_norm_nb(a)
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps, off


def _off_norm_np(a: np.ndarray) -> float:
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return math.sqrt(float(np.dot(off, off)))


def jacobi_numpy(a: np.ndarray, tol: float, max_sweeps: int):
    n = a.shape[0]
    a = np.array(a, dtype=np.float64, copy=True)
    v = np.eye(n)
    off = _off_norm_np(a)
    sweeps = 0
    rot = _rotation.py_func if hasattr(_rotation, "py_func") else _rotation
    while off >= tol and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= _SKIP_REL * (abs(a[p, p]) + abs(a[q, q])) or apq == 0.0:
                    continue
                c, s = rot(a[p, p], a[q, q], apq)
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweeps += 1
        off = _off_norm_np(a)
    return np.diag(a).copy(), v, sweeps, off


def jacobi(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100, backend: str | None = None):
    """Diagonalise a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(diagonal, rotations, sweeps, off_norm)`` with the eigenvalues
    unsorted, in the order the rotations left them. ``backend`` is ``"numba"``,
    ``"numpy"`` or ``None`` for the process default.
    """
    if backend is None:
        backend = "numba" if USE_NUMBA else "numpy"
    a = np.ascontiguousarray(a, dtype=np.float64)
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        w, v, sweeps, off = jacobi_numba(a, float(tol), int(max_sweeps))
        return w, v, int(sweeps), float(off)
    if backend == "numpy":
        return jacobi_numpy(a, float(tol), int(max_sweeps))
    raise ValueError(f"unknown backend {backend!r}")


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
