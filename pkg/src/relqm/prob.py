"""Probabilities as sums of configuration weights.

A configuration ``a_j -> s_m -> s_n -> a_k`` carries the weight
``conj(R[m, j]) * R[n, k]``. Which configurations count depends on whether
the system is entangled with the apparatus:

* unentangled (coherent counting): every ``m, n`` in the outcome set and every
  ``j, k``, which collapses to ``|sum_{i in S} phi_i|^2``;
* entangled (incoherent counting): only ``m == n`` and ``j == k``, which
  collapses to ``sum_{i in S} sum_j |R_ij|^2``.

The closed forms are what the public functions return.
:func:`configuration_sum` does the literal enumeration and exists so the two
can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .entangle import check_unentangled
from .errors import DimensionError, NotProjectorError, RelqmError, ZeroMatrixError
from .relcore import (
    DEFAULT_ENTROPY_TOL,
    DensityMatrix,
    NormMode,
    RelationalMatrix,
    as_relational,
    coherent_norm,
    incoherent_norm,
)

#: allowance for rounding above 1 and below 0 in returned probabilities
PROB_SLACK = 1e-10


@dataclass(frozen=True)
class OutcomeSet:
    """Ordered set of distinct system indices."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise RelqmError("outcome set is empty")
        if len(set(idx)) != len(idx):
            raise RelqmError(f"outcome set has repeated indices: {idx}")
        if min(idx) < 0:
            raise IndexError(f"negative outcome index in {idx}")
        object.__setattr__(self, "indices", idx)

    def check(self, n: int) -> None:
        if max(self.indices) >= n:
            raise IndexError(f"outcome index {max(self.indices)} out of range for dimension {n}")

    def mask(self, n: int) -> np.ndarray:
        self.check(n)
        m = np.zeros(n, dtype=np.bool_)
        m[list(self.indices)] = True
        return m

    def __len__(self) -> int:
        return len(self.indices)


def as_outcome(outcome) -> OutcomeSet:
    if isinstance(outcome, OutcomeSet):
        return outcome
    if isinstance(outcome, (int, np.integer)):
        return OutcomeSet((int(outcome),))
    return OutcomeSet(tuple(outcome))


@dataclass(frozen=True)
class Projector:
    """Hermitian idempotent matrix."""

    matrix: np.ndarray
    tol: float = 1e-10

    def __post_init__(self):
        P = np.array(self.matrix, dtype=np.complex128)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise DimensionError(f"projector must be square, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise RelqmError("projector contains NaN or Inf")
        if np.max(np.abs(P - P.conj().T)) > self.tol:
            raise NotProjectorError("projector is not Hermitian")
        if np.max(np.abs(P @ P - P)) > self.tol:
            raise NotProjectorError("projector is not idempotent (P @ P != P)")
        P.setflags(write=False)
        object.__setattr__(self, "matrix", P)

    @classmethod
    def onto(cls, indices: Iterable[int], dim: int) -> "Projector":
        """Sum of basis projectors ``sum_{i in indices} |s_i><s_i|``."""
        P = np.zeros((dim, dim), dtype=np.complex128)
        for i in as_outcome(indices).indices:
            P[i, i] = 1.0
        return cls(P)

    @classmethod
    def onto_vector(cls, vec) -> "Projector":
        """``|chi><chi|`` for the normalized direction of ``vec``."""
        v = np.asarray(vec, dtype=np.complex128)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _clip_prob(p: float) -> float:
    if p < -PROB_SLACK or p > 1.0 + PROB_SLACK:
        raise RelqmError(f"probability {p!r} outside [0, 1]")
    return float(p)


def _incoherent_omega(R: RelationalMatrix) -> float:
    if R.norm_mode is NormMode.INCOHERENT:
        return 1.0
    omega = incoherent_norm(R.entries)
    if omega == 0.0:
        raise ZeroMatrixError("normalization factor is zero for an all-zero matrix")
    return omega


def _coherent_omega(R: RelationalMatrix) -> float:
    if R.norm_mode is NormMode.COHERENT:
        return 1.0
    omega = coherent_norm(R.entries)
    if omega == 0.0:
        raise ZeroMatrixError("coherent normalization is zero (all row sums vanish)")
    return omega


def weight(R, j: int, m: int, n: int, k: int) -> complex:
    """Weight of the configuration ``a_j -> s_m -> s_n -> a_k``: ``conj(R[m, j]) * R[n, k]``."""
    a = as_relational(R).entries
    N, M = a.shape
    for name, idx, hi in (("j", j, M), ("m", m, N), ("n", n, N), ("k", k, M)):
        if not 0 <= idx < hi:
            raise IndexError(f"index {name}={idx} out of range [0, {hi})")
    return complex(np.conj(a[m, j]) * a[n, k])


def prob_joint(R, i: int, j: int) -> float:
    """Probability of the joint event ``(s_i, a_j)``: ``|R_ij|^2 / Omega``."""
    R = as_relational(R)
    if not (0 <= i < R.n_sys and 0 <= j < R.n_app):
        raise IndexError(f"({i}, {j}) out of range for shape {R.shape}")
    return _clip_prob(abs(R.entries[i, j]) ** 2 / _incoherent_omega(R))


def prob_coherent(R, outcome, tol: float = DEFAULT_ENTROPY_TOL) -> float:
    """Probability with interference terms, valid only for unentangled ``R``.

    For a single index this is ``|phi_i|^2``. For several indices it is the
    probability of the equal superposition of those basis events,
    ``|sum_{i in S} phi_i|^2 / |S|``, i.e. the full interference sum
    measured against the normalized superposition. Raw and incoherent
    inputs are divided by ``sum_i |phi_i|^2``.
    """
    R = as_relational(R)
    out = as_outcome(outcome)
    out.check(R.n_sys)
    check_unentangled(R, tol)
    phi = R.entries.sum(axis=1)
    amp = phi[list(out.indices)].sum()
    return _clip_prob(abs(amp) ** 2 / len(out) / _coherent_omega(R))


def prob_incoherent(R, outcome) -> float:
    """Probability without interference terms: ``sum_{i in S} sum_j |R_ij|^2 / Omega``.

    Valid whether or not ``R`` is entangled.
    """
    R = as_relational(R)
    out = as_outcome(outcome)
    out.check(R.n_sys)
    rows = R.entries[list(out.indices), :]
    return _clip_prob(float(np.sum(np.abs(rows) ** 2)) / _incoherent_omega(R))


def prob_apparatus(R, j: int) -> float:
    """Probability of apparatus event ``a_j``: ``sum_i |R_ij|^2 / Omega``."""
    R = as_relational(R)
    if not 0 <= j < R.n_app:
        raise IndexError(f"apparatus index {j} out of range [0, {R.n_app})")
    return _clip_prob(float(np.sum(np.abs(R.entries[:, j]) ** 2)) / _incoherent_omega(R))


def prob_transition(Q, R, tol: float = DEFAULT_ENTROPY_TOL) -> float:
    """Probability that a system described by ``R`` is found in the state described by ``Q``.

    ``|sum_ij (Q^dagger R)_ij|^2``, which equals ``|<chi|psi>|^2`` for the
    row-sum vectors of ``Q`` and ``R``. Both must be unentangled; each is
    divided by its coherent norm unless already coherent-normalized.
    """
    Q = as_relational(Q)
    R = as_relational(R)
    if Q.n_sys != R.n_sys:
        raise DimensionError(f"system dimensions differ: {Q.n_sys} vs {R.n_sys}")
    check_unentangled(Q, tol)
    check_unentangled(R, tol)
    overlap = np.sum(Q.entries.conj().T @ R.entries)
    return _clip_prob(abs(overlap) ** 2 / (_coherent_omega(Q) * _coherent_omega(R)))


def prob_projection(rho: DensityMatrix, P: Projector) -> float:
    """``trace(P rho) / trace(rho)``.

    The division is a no-op for unit-trace ``rho`` and plays the role of the
    normalization factor for density matrices built from raw input.
    """
    if not isinstance(P, Projector):
        P = Projector(P)
    r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    if r.shape != P.matrix.shape:
        raise DimensionError(f"rho has shape {r.shape}, projector {P.matrix.shape}")
    tr = np.trace(r)
    if abs(tr) == 0.0:
        raise ZeroMatrixError("density matrix has zero trace")
    val = np.trace(P.matrix @ r) / tr
    if abs(val.imag) > PROB_SLACK:
        raise RelqmError(f"trace(P rho) has imaginary part {val.imag!r}")
    return _clip_prob(val.real)


COUNTINGS = ("coherent", "incoherent", "joint", "apparatus")


def configuration_sum(R, counting: str, outcome=None, app_index: int | None = None) -> float:
    """Probability by explicit enumeration of configuration weights.

    ``counting`` selects the applicable configurations:

    ``coherent``    all ``m, n`` in ``outcome``, all ``j, k``; divided by ``|S|``
    ``incoherent``  ``m == n`` in ``outcome``, ``j == k``
    ``joint``       ``m == n == outcome[0]``, ``j == k == app_index``
    ``apparatus``   ``m == n`` anywhere, ``j == k == app_index``

    The normalization factor is itself enumerated: the same selection with
    every system index admitted (coherent: the sum of the single-index
    coherent sums). No entropy gate is applied.
    """
    a = np.ascontiguousarray(as_relational(R).entries)
    N, M = a.shape
    all_rows = np.ones(N, dtype=np.bool_)
    all_cols = np.ones(M, dtype=np.bool_)
    ws = _kernels.weight_sum

    if counting == "coherent":
        out = as_outcome(outcome)
        num = ws(a, out.mask(N), all_cols, False, False) / len(out)
        den = sum(ws(a, OutcomeSet((i,)).mask(N), all_cols, False, False) for i in range(N))
    elif counting == "incoherent":
        out = as_outcome(outcome)
        num = ws(a, out.mask(N), all_cols, True, True)
        den = ws(a, all_rows, all_cols, True, True)
    elif counting in ("joint", "apparatus"):
        if app_index is None or not 0 <= app_index < M:
            raise IndexError(f"apparatus index {app_index} out of range [0, {M})")
        col = np.zeros(M, dtype=np.bool_)
        col[app_index] = True
        rows = as_outcome(outcome).mask(N) if counting == "joint" else all_rows
        num = ws(a, rows, col, True, True)
        den = ws(a, all_rows, all_cols, True, True)
    else:
        raise ValueError(f"unknown counting {counting!r}; expected one of {COUNTINGS}")
    if den == 0:
        raise ZeroMatrixError("normalization factor is zero")
    return float((num / den).real)
