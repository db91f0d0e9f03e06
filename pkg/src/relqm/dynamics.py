"""Operators and time evolution.

Three equivalent pictures are provided for non-interacting system and
apparatus:

* the relational matrix, ``R(t) = U_S(t) R(0) U_A(t)^T``, with generator
  ``i hbar dR/dt = H_S R + R H_A^T``;
* the reduced density matrix, ``rho(t) = U_S rho(0) U_S^dagger``, with the
  Liouville-von Neumann generator ``[H_S, rho] / (i hbar)``;
* the wave function, ``psi(t) = U_S(t) psi(0)``, for unentangled states.

Matrix exponentials of Hermitian operators go through the eigendecomposition,
``exp(-i H t / hbar) = sum_k exp(-i E_k t / hbar) |k><k|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotHermitianError, NotUnitaryError, RelqmError
from .relcore import (
    DensityKind,
    DensityMatrix,
    NormMode,
    RelationalMatrix,
    WaveFunction,
    as_relational,
)


def _square(a, what: str) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"{what} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise RelqmError(f"{what} contains NaN or Inf")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HermitianOperator:
    entries: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        a = _square(self.entries, "Hamiltonian")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - a.conj().T)) > 1e-12 * scale:
            raise NotHermitianError("operator is not Hermitian within 1e-12")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class UnitaryMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = _square(self.entries, "unitary")
        if np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))) > 1e-10:
            raise NotUnitaryError("matrix is not unitary within 1e-10")
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class LocalOperator:
    """Any square matrix acting on the system index; need not be unitary."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _square(self.entries, "local operator"))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _mat(op) -> np.ndarray:
    if isinstance(op, (HermitianOperator, UnitaryMatrix, LocalOperator)):
        return op.entries
    return _square(op, "operator")


def _ham(H, hbar=None) -> HermitianOperator:
    if isinstance(H, HermitianOperator):
        return H
    return HermitianOperator(H, 1.0 if hbar is None else hbar)


def _same_hbar(*ops: HermitianOperator) -> float:
    hbars = {op.hbar for op in ops}
    if len(hbars) != 1:
        raise RelqmError(f"operators carry different hbar values: {sorted(hbars)}")
    return hbars.pop()


def _evolved_mode(R: RelationalMatrix) -> NormMode:
    # unitary maps preserve sum |R_ij|^2 but not the row-sum norm
    return NormMode.INCOHERENT if R.norm_mode is NormMode.INCOHERENT else NormMode.RAW


def apply_local(R, M) -> RelationalMatrix:
    """``R_new = M R``: a local operation on the system side (raw result)."""
    R = as_relational(R)
    m = _mat(M)
    if m.shape[0] != R.n_sys:
        raise DimensionError(f"operator dim {m.shape[0]} != system dim {R.n_sys}")
    return RelationalMatrix(m @ R.entries, NormMode.RAW)


def apply_bipartite(R, Q, O) -> RelationalMatrix:
    """``R_new = Q R O^T``, the effect of ``Q (x) O`` on the composite state.

    Note the plain transpose on ``O``. The normalization mode survives only
    when it is incoherent and both factors are unitary.
    """
    R = as_relational(R)
    q, o = _mat(Q), _mat(O)
    if q.shape[0] != R.n_sys or o.shape[0] != R.n_app:
        raise DimensionError(
            f"operator dims ({q.shape[0]}, {o.shape[0]}) do not match R shape {R.shape}"
        )
    mode = NormMode.RAW
    if isinstance(Q, UnitaryMatrix) and isinstance(O, UnitaryMatrix):
        mode = _evolved_mode(R)
    return RelationalMatrix(q @ R.entries @ o.T, mode)


def expm_hermitian(H, t: float) -> UnitaryMatrix:
    """``exp(-i H t / hbar)`` from the spectral decomposition of ``H``."""
    H = _ham(H)
    E, V = np.linalg.eigh(H.entries)
    phases = np.exp(-1j * E * (t / H.hbar))
    return UnitaryMatrix((V * phases) @ V.conj().T)


def kron(U_S, U_A) -> UnitaryMatrix:
    """Kronecker product in the system-major flattening ``m = i * M + j``."""
    return UnitaryMatrix(np.kron(_mat(U_S), _mat(U_A)))


def kron_sum(H_S, H_A) -> HermitianOperator:
    """``H_S (x) I + I (x) H_A``, the non-interacting composite Hamiltonian."""
    hs, ha = _ham(H_S), _ham(H_A)
    hbar = _same_hbar(hs, ha)
    n, m = hs.dim, ha.dim
    return HermitianOperator(
        np.kron(hs.entries, np.eye(m)) + np.kron(np.eye(n), ha.entries), hbar
    )


def evolve_relational(R0, H_S, H_A, t: float) -> RelationalMatrix:
    """``R(t) = exp(-i H_S t/hbar) R0 exp(-i H_A t/hbar)^T``."""
    R0 = as_relational(R0)
    hs, ha = _ham(H_S), _ham(H_A)
    _same_hbar(hs, ha)
    if hs.dim != R0.n_sys or ha.dim != R0.n_app:
        raise DimensionError(f"Hamiltonian dims ({hs.dim}, {ha.dim}) do not match R shape {R0.shape}")
    us = expm_hermitian(hs, t).entries
    ua = expm_hermitian(ha, t).entries
    return RelationalMatrix(us @ R0.entries @ ua.T, _evolved_mode(R0))


def relational_rhs(R, H_S, H_A) -> np.ndarray:
    """``dR/dt = (H_S R + R H_A^T) / (i hbar)``. ``R`` may be rectangular."""
    a = as_relational(R).entries
    hs, ha = _ham(H_S), _ham(H_A)
    hbar = _same_hbar(hs, ha)
    if hs.dim != a.shape[0] or ha.dim != a.shape[1]:
        raise DimensionError(f"Hamiltonian dims ({hs.dim}, {ha.dim}) do not match R shape {a.shape}")
    return (hs.entries @ a + a @ ha.entries.T) / (1j * hbar)


def _rho(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.entries
    return _square(rho, "density matrix")


def evolve_density(rho0, H_S, t: float) -> DensityMatrix:
    """``rho(t) = U rho0 U^dagger`` with ``U = exp(-i H_S t / hbar)``."""
    r = _rho(rho0)
    hs = _ham(H_S)
    if hs.dim != r.shape[0]:
        raise DimensionError(f"Hamiltonian dim {hs.dim} != density dim {r.shape[0]}")
    u = expm_hermitian(hs, t).entries
    kind = rho0.kind if isinstance(rho0, DensityMatrix) else DensityKind.REDUCED
    return DensityMatrix(u @ r @ u.conj().T, kind)


def liouville_rhs(rho, H_S) -> np.ndarray:
    """``d rho/dt = [H_S, rho] / (i hbar)``."""
    r = _rho(rho)
    hs = _ham(H_S)
    if hs.dim != r.shape[0]:
        raise DimensionError(f"Hamiltonian dim {hs.dim} != density dim {r.shape[0]}")
    h = hs.entries
    return (h @ r - r @ h) / (1j * hs.hbar)


def schrodinger_evolve(psi0, H_S, t: float) -> WaveFunction:
    """``psi(t) = exp(-i H_S t / hbar) psi(0)``, global phase omitted."""
    amps = psi0.amps if isinstance(psi0, WaveFunction) else np.asarray(psi0, dtype=np.complex128)
    hs = _ham(H_S)
    if hs.dim != amps.shape[0]:
        raise DimensionError(f"Hamiltonian dim {hs.dim} != wave function dim {amps.shape[0]}")
    return WaveFunction(expm_hermitian(hs, t).entries @ amps)
