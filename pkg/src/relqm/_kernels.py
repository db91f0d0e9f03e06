"""Hot inner loops, in two interchangeable implementations.

Each kernel exists as ``<name>_numpy`` (always available) and, when numba is
importable, ``<name>_numba``. The public name ``<name>`` is bound to the numba
version unless the environment variable ``RELQM_PURE_NUMPY`` is set to a
non-empty value other than ``0``, in which case the numpy version is used.
The flag is read once at import time.

Summation order inside each kernel is fixed, so for a given backend identical
input bits give identical output bits. The two backends agree to rounding.
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("RELQM_PURE_NUMPY", "")
PURE_NUMPY_REQUESTED = _flag not in ("", "0")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# Lattice path sums: one time slice of the joint (system, apparatus) transfer
# ---------------------------------------------------------------------------


def joint_slice_numpy(R, Ts, Ta, phase, weight):
    """Apply one joint time slice to a relational array.

    ``out[a, b] = weight * sum_{i, j} Ts[a, i] * Ta[b, j] * phase[a + i, b + j] * R[i, j]``

    ``phase`` is sampled on the half-grid, so ``phase[a + i, b + j]`` is the
    coupling factor evaluated at the segment midpoints of both paths.
    """
    ns, na = R.shape
    ii = np.arange(ns)
    jj = np.arange(na)
    # (b, j) index into the apparatus half-grid is shared by every output row
    bj = jj[:, None] + jj[None, :]
    TaR = Ta[None, :, :] * R[:, None, :]  # (i, b, j)
    out = np.empty((ns, na), dtype=np.complex128)
    for a in range(ns):
        P = phase[(a + ii)[:, None, None], bj[None, :, :]]  # (i, b, j)
        out[a] = np.einsum("i,ibj->b", Ts[a], P * TaR)
    return weight * out


def weight_sum_numpy(R, row_mask, col_mask, same_row, same_col):
    """Sum configuration weights ``conj(R[m, j]) * R[n, k]`` over a selection.

    The selection admits ``m, n`` with ``row_mask`` true (and ``m == n`` if
    ``same_row``) and ``j, k`` with ``col_mask`` true (and ``j == k`` if
    ``same_col``). The full weight tensor ``W[j, m, n, k]`` is materialized
    and masked, which is the literal enumeration of configurations.
    """
    W = np.conj(R).T[:, :, None, None] * R[None, None, :, :]  # (j, m, n, k)
    rows = row_mask.astype(bool)
    cols = col_mask.astype(bool)
    sel_mn = rows[:, None] & rows[None, :]
    if same_row:
        sel_mn &= np.eye(R.shape[0], dtype=bool)
    sel_jk = cols[:, None] & cols[None, :]
    if same_col:
        sel_jk &= np.eye(R.shape[1], dtype=bool)
    mask = sel_jk[:, None, None, :] & sel_mn[None, :, :, None]
    return complex(W[mask].sum())


if HAVE_NUMBA:

    @njit(cache=True)
    def joint_slice_numba(R, Ts, Ta, phase, weight):
        ns, na = R.shape
        out = np.empty((ns, na), dtype=np.complex128)
        for a in range(ns):
            for b in range(na):
                acc = 0j
                for i in range(ns):
                    tsi = Ts[a, i]
                    if tsi == 0:
                        continue
                    row = 0j
                    for j in range(na):
                        row += Ta[b, j] * phase[a + i, b + j] * R[i, j]
                    acc += tsi * row
                out[a, b] = weight * acc
        return out

    @njit(cache=True)
    def weight_sum_numba(R, row_mask, col_mask, same_row, same_col):
        n, m = R.shape
        acc = 0j
        for j in range(m):
            if not col_mask[j]:
                continue
            for mm in range(n):
                if not row_mask[mm]:
                    continue
                left = np.conj(R[mm, j])
                for nn in range(n):
                    if not row_mask[nn] or (same_row and nn != mm):
                        continue
                    for k in range(m):
                        if not col_mask[k] or (same_col and k != j):
                            continue
                        acc += left * R[nn, k]
        return acc


USE_NUMBA = HAVE_NUMBA and not PURE_NUMPY_REQUESTED
BACKEND = "numba" if USE_NUMBA else "numpy"

if USE_NUMBA:
    joint_slice = joint_slice_numba
    weight_sum = weight_sum_numba
else:
    joint_slice = joint_slice_numpy
    weight_sum = weight_sum_numpy
