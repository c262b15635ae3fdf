"""Oriented-box overlap kernels: numba-compiled with a pure-numpy fallback.

A box row is ``[cx, cy, hx, hy, cos(yaw), sin(yaw), z0, z1]``. Trigonometry
is done by the caller so both paths see identical inputs and perform the same
IEEE operations in the same order; their results are bitwise equal.

Set ``SCENESMITH_KERNELS=numpy`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

BOX_FIELDS = 8

_requested = os.environ.get("SCENESMITH_KERNELS", "numba").strip().lower()

try:
    if _requested == "numpy":
        raise ImportError("numpy kernels requested")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path


def _penetration_np(a: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Minimum SAT overlap depth of box ``a`` against each row of ``boxes``.

    Positive means the footprints overlap by that depth; <= 0 means separated
    or touching.
    """
    dx = boxes[:, 0] - a[0]
    dy = boxes[:, 1] - a[1]
    best = np.full(boxes.shape[0], np.inf)
    ac, as_ = a[4], a[5]
    bc, bs = boxes[:, 4], boxes[:, 5]
    # axes of a
    for lx, ly in ((ac, as_), (-as_, ac)):
        d = np.abs(dx * lx + dy * ly)
        ra = a[2] * np.abs(ac * lx + as_ * ly) + a[3] * np.abs(-as_ * lx + ac * ly)
        rb = boxes[:, 2] * np.abs(bc * lx + bs * ly) + boxes[:, 3] * np.abs(-bs * lx + bc * ly)
        best = np.minimum(best, ra + rb - d)
    # axes of b
    for lx, ly in ((bc, bs), (-bs, bc)):
        d = np.abs(dx * lx + dy * ly)
        ra = a[2] * np.abs(ac * lx + as_ * ly) + a[3] * np.abs(-as_ * lx + ac * ly)
        rb = boxes[:, 2] * np.abs(bc * lx + bs * ly) + boxes[:, 3] * np.abs(-bs * lx + bc * ly)
        best = np.minimum(best, ra + rb - d)
    return best


def _vertical_np(a: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    return np.minimum(boxes[:, 7], a[7]) - np.maximum(boxes[:, 6], a[6])


def first_overlap_numpy(a: np.ndarray, boxes: np.ndarray, tol: float) -> int:
    if boxes.shape[0] == 0:
        return -1
    hit = (_penetration_np(a, boxes) > tol) & (_vertical_np(a, boxes) > tol)
    idx = np.flatnonzero(hit)
    return int(idx[0]) if idx.size else -1


def overlap_pairs_numpy(boxes: np.ndarray, tol: float) -> np.ndarray:
    n = boxes.shape[0]
    out = []
    for i in range(n - 1):
        rest = boxes[i + 1 :]
        hit = (_penetration_np(boxes[i], rest) > tol) & (_vertical_np(boxes[i], rest) > tol)
        for j in np.flatnonzero(hit):
            out.append((i, i + 1 + int(j)))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _penetration_pair(a, b):
        dx = b[0] - a[0]
        dy = b[1] - a[1]
        ac = a[4]
        as_ = a[5]
        bc = b[4]
        bs = b[5]
        best = np.inf
        for k in range(4):
            if k == 0:
                lx, ly = ac, as_
            elif k == 1:
                lx, ly = -as_, ac
            elif k == 2:
                lx, ly = bc, bs
            else:
                lx, ly = -bs, bc
            d = abs(dx * lx + dy * ly)
            ra = a[2] * abs(ac * lx + as_ * ly) + a[3] * abs(-as_ * lx + ac * ly)
            rb = b[2] * abs(bc * lx + bs * ly) + b[3] * abs(-bs * lx + bc * ly)
            pen = ra + rb - d
            if pen < best:
                best = pen
        return best

    @njit(cache=True)
    def _first_overlap_nb(a, boxes, tol):
        for j in range(boxes.shape[0]):
            b = boxes[j]
            vert = min(a[7], b[7]) - max(a[6], b[6])
            if vert > tol and _penetration_pair(a, b) > tol:
                return j
        return -1

    @njit(cache=True)
    def _overlap_pairs_nb(boxes, tol):
        n = boxes.shape[0]
        out = np.empty((max(n * (n - 1) // 2, 1), 2), dtype=np.int64)
        m = 0
        for i in range(n - 1):
            for j in range(i + 1, n):
                a = boxes[i]
                b = boxes[j]
                vert = min(a[7], b[7]) - max(a[6], b[6])
                if vert > tol and _penetration_pair(a, b) > tol:
                    out[m, 0] = i
                    out[m, 1] = j
                    m += 1
        return out[:m]

    def first_overlap_numba(a: np.ndarray, boxes: np.ndarray, tol: float) -> int:
        if boxes.shape[0] == 0:
            return -1
        return int(_first_overlap_nb(a, boxes, tol))

    def overlap_pairs_numba(boxes: np.ndarray, tol: float) -> np.ndarray:
        if boxes.shape[0] < 2:
            return np.zeros((0, 2), dtype=np.int64)
        return _overlap_pairs_nb(boxes, tol)

    first_overlap = first_overlap_numba
    overlap_pairs = overlap_pairs_numba
else:
    first_overlap = first_overlap_numpy
    overlap_pairs = overlap_pairs_numpy


def penetration_depths(a: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    return _penetration_np(np.asarray(a, dtype=np.float64), np.asarray(boxes, dtype=np.float64).reshape(-1, BOX_FIELDS))
