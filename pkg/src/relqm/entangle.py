"""Entanglement of a relational matrix.

The measure is the von Neumann entropy of the trace-normalized ``R R^dagger``.
Its eigenvalues are the squared singular values of ``R`` (over their sum),
which is how they are computed here: the SVD route keeps tiny eigenvalues
accurate, so product matrices come out at zero entropy to ~1e-15 rather than
the ~1e-8 an eigensolver on ``R R^dagger`` would give.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EntangledStateError, NotProductError, ZeroMatrixError
from .relcore import (
    DEFAULT_ENTROPY_TOL,
    CompositeState,
    DensityKind,
    DensityMatrix,
    RelationalMatrix,
    as_relational,
)

#: relative size below which a vector component counts as zero when fixing phases
PHASE_EPS = 1e-12


class DynamicsKind(enum.Enum):
    TIME_EVOLUTION = "time_evolution"
    QUANTUM_OPERATION = "quantum_operation"


class TraceSide(enum.Enum):
    TRACE_APPARATUS = "trace_apparatus"
    TRACE_SYSTEM = "trace_system"


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``R = u @ D @ v`` with ``D`` the ``N x M`` rectangular diagonal of ``singulars``."""

    u: np.ndarray
    singulars: np.ndarray
    v: np.ndarray

    def diag(self) -> np.ndarray:
        n, m = self.u.shape[0], self.v.shape[0]
        D = np.zeros((n, m), dtype=np.complex128)
        k = self.singulars.size
        D[np.arange(k), np.arange(k)] = self.singulars
        return D

    def reconstruct(self) -> np.ndarray:
        return self.u @ self.diag() @ self.v

    @property
    def rank(self) -> int:
        s = self.singulars
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > PHASE_EPS * s[0]))


@dataclass(frozen=True)
class ProductFactors:
    c: np.ndarray
    d: np.ndarray

    def outer(self) -> np.ndarray:
        return np.outer(self.c, self.d)


def _entries(R) -> np.ndarray:
    a = as_relational(R).entries
    if not np.any(a):
        raise ZeroMatrixError("entanglement of an all-zero matrix is undefined")
    return a


def schmidt_spectrum(R) -> np.ndarray:
    """Eigenvalues of the trace-normalized ``R R^dagger``, non-increasing."""
    s = np.linalg.svd(_entries(R), compute_uv=False)
    lam = s**2
    return lam / lam.sum()


def entropy(R) -> float:
    """Von Neumann entropy ``-sum lam ln lam`` (natural log, ``0 ln 0 = 0``)."""
    lam = np.clip(schmidt_spectrum(R), 0.0, None)
    lam = lam[lam > 0.0]
    # a lone eigenvalue of 1 + eps would otherwise give -0.0 or -1e-16
    h = float(-np.sum(lam * np.log(lam)))
    return h if h > 0.0 else 0.0


def check_unentangled(R: RelationalMatrix, tol: float = DEFAULT_ENTROPY_TOL) -> float:
    """Return ``H(R)``, raising :class:`EntangledStateError` if it reaches ``tol``."""
    h = entropy(R)
    if h >= tol:
        raise EntangledStateError(h, tol)
    return h


def schmidt(R) -> SchmidtDecomposition:
    """Full SVD ``R = U D V`` under a deterministic phase convention.

    The first component of each column of ``U`` whose modulus exceeds
    ``1e-12`` times the column's largest modulus is made real positive; the
    matching row of ``V`` absorbs the conjugate phase so the product is
    unchanged.
    """
    a = _entries(R)
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    u = u.copy()
    vh = vh.copy()
    k = s.size
    for col in range(u.shape[1]):
        mags = np.abs(u[:, col])
        first = int(np.argmax(mags > PHASE_EPS * mags.max()))
        ph = u[first, col] / mags[first]
        u[:, col] *= np.conj(ph)
        u[first, col] = mags[first]  # drop the ~1e-17 imaginary residue
        if col < k:
            vh[col, :] *= ph
    return SchmidtDecomposition(u, s, vh)


def product_decompose(R, tol: float = 1e-8) -> ProductFactors:
    """Split a rank-one ``R`` as ``R_ij = c_i d_j``.

    ``d`` is the leading right singular vector (unit norm) and ``c`` the
    leading left one times the leading singular value. The remaining phase
    freedom is fixed so that ``sum_j d_j`` is real positive whenever it is
    nonzero; otherwise the Schmidt convention stands.
    """
    sd = schmidt(R)
    s = sd.singulars
    ratio = float(s[1] / s[0]) if s.size > 1 else 0.0
    if ratio >= tol:
        raise NotProductError(ratio, tol)
    c = sd.u[:, 0] * s[0]
    d = sd.v[0, :].copy()
    total = d.sum()
    if abs(total) > PHASE_EPS * np.abs(d).max():
        ph = total / abs(total)
        d = d * np.conj(ph)
        c = c * ph
    return ProductFactors(c, d)


def classify_dynamics(R_before, R_after, tol: float = 1e-9) -> DynamicsKind:
    """Time evolution keeps ``H(R)`` fixed; anything else is a quantum operation."""
    dh = abs(entropy(R_after) - entropy(R_before))
    return DynamicsKind.TIME_EVOLUTION if dh < tol else DynamicsKind.QUANTUM_OPERATION


def partial_trace(composite, n_sys: int, n_app: int, side="trace_apparatus") -> DensityMatrix:
    """Reduce a system-major composite vector to one subsystem.

    Tracing the apparatus gives ``R R^dagger`` of the unflattened matrix;
    tracing the system gives ``R^T conj(R)`` (the transpose of ``R^dagger R``).
    """
    side = TraceSide(side)
    amps = composite.amps if isinstance(composite, CompositeState) else np.asarray(composite)
    amps = np.asarray(amps, dtype=np.complex128)
    if amps.shape != (n_sys * n_app,):
        raise DimensionError(f"composite length {amps.shape} does not match {n_sys} x {n_app}")
    psi = amps.reshape(n_sys, n_app)
    if side is TraceSide.TRACE_APPARATUS:
        rho = psi @ psi.conj().T
    else:
        rho = psi.T @ psi.conj()
    return DensityMatrix(rho, DensityKind.REDUCED)
