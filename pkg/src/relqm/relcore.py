"""Relational matrices and the state descriptions derived from them.

A relational matrix ``R`` (``N x M``, complex) holds the amplitudes ``R[i, j]``
tying system event ``i`` to apparatus event ``j``. Everything else here, the
wave function, the composite state vector and the two density matrices, is
computed from it. The conjugate partner of ``R`` is always ``R^dagger`` and
is never stored.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NotHermitianError, RelqmError, ZeroMatrixError

log = logging.getLogger(__name__)

#: Normalizations are enforced to this precision after construction.
NORM_TOL = 1e-12
#: Deviations larger than this are rescaled *and* flagged.
RESCALE_FLAG_TOL = 1e-9
#: Default entropy threshold separating "unentangled" from "entangled".
DEFAULT_ENTROPY_TOL = 1e-10


class NormMode(enum.Enum):
    COHERENT = "coherent"
    INCOHERENT = "incoherent"
    RAW = "raw"

    @classmethod
    def parse(cls, value: "NormMode | str") -> "NormMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown norm_mode {value!r}; expected one of "
                f"{[m.value for m in cls]}"
            ) from None


class DensityKind(enum.Enum):
    REDUCED = "reduced"
    COHERENT = "coherent"
    #: off-diagonal start block rho(x_b, x_b'; x_a, x_a') with x_a != x_a';
    #: not Hermitian in general, so not validated as a state.
    TRANSITION = "transition"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def _require_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise RelqmError(f"{what} contains NaN or Inf")


def coherent_norm(entries: np.ndarray) -> float:
    """``sum_i |sum_j R_ij|^2``."""
    return float(np.sum(np.abs(entries.sum(axis=1)) ** 2))


def incoherent_norm(entries: np.ndarray) -> float:
    """``sum_ij |R_ij|^2``."""
    return float(np.sum(np.abs(entries) ** 2))


@dataclass(frozen=True)
class RelationalMatrix:
    """Validated ``N x M`` relational matrix.

    Prefer :func:`build_relational`, which also applies the normalization
    implied by ``norm_mode``. ``scale`` is the global factor that was
    multiplied into the caller's entries; ``rescaled`` is set when that
    factor differed from 1 by more than the rounding allowance.
    """

    entries: np.ndarray
    norm_mode: NormMode = NormMode.RAW
    scale: float = 1.0
    rescaled: bool = False

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionError(f"relational matrix must be 2-D and non-empty, got shape {a.shape}")
        _require_finite(a, "relational matrix")
        object.__setattr__(self, "entries", _frozen(a))
        object.__setattr__(self, "norm_mode", NormMode.parse(self.norm_mode))

    @property
    def n_sys(self) -> int:
        return self.entries.shape[0]

    @property
    def n_app(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def build_relational(n_sys: int, n_app: int, entries, norm_mode="raw") -> RelationalMatrix:
    """Validate ``entries`` and impose the normalization named by ``norm_mode``.

    ``coherent`` enforces ``sum_i |sum_j R_ij|^2 = 1``, ``incoherent``
    enforces ``sum_ij |R_ij|^2 = 1`` and ``raw`` leaves the entries alone.
    The rescale is always applied exactly; when the required factor is off
    from 1 by more than ``1e-9`` the result is flagged (``rescaled=True``)
    and a warning is logged.
    """
    mode = NormMode.parse(norm_mode)
    a = np.asarray(entries, dtype=np.complex128)
    if n_sys < 1 or n_app < 1:
        raise DimensionError(f"dimensions must be >= 1, got ({n_sys}, {n_app})")
    if a.shape != (n_sys, n_app):
        raise DimensionError(f"entries have shape {a.shape}, expected ({n_sys}, {n_app})")
    _require_finite(a, "relational matrix")
    if not np.any(a):
        raise ZeroMatrixError("all-zero relational matrix admits no normalization")

    scale = 1.0
    flagged = False
    if mode is not NormMode.RAW:
        norm = coherent_norm(a) if mode is NormMode.COHERENT else incoherent_norm(a)
        if norm == 0.0:
            # nonzero matrix whose rows all sum to zero
            raise ZeroMatrixError(f"{mode.value} normalization of this matrix is zero")
        if abs(norm - 1.0) > 0.0:
            scale = 1.0 / np.sqrt(norm)
            a = a * scale
        if abs(norm - 1.0) > RESCALE_FLAG_TOL:
            flagged = True
            log.warning("%s normalization off by %.3e; rescaled by %.17g", mode.value, norm - 1.0, scale)
    return RelationalMatrix(a, mode, float(scale), flagged)


def as_relational(R) -> RelationalMatrix:
    """Pass through a :class:`RelationalMatrix`; wrap anything else as raw."""
    if isinstance(R, RelationalMatrix):
        return R
    a = np.asarray(R, dtype=np.complex128)
    if a.ndim == 1:
        a = a[None, :]
    return RelationalMatrix(a, NormMode.RAW)


def _nonzero(R: RelationalMatrix) -> None:
    if not np.any(R.entries):
        raise ZeroMatrixError("all-zero relational matrix")


@dataclass(frozen=True)
class WaveFunction:
    amps: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amps)
        if a.ndim != 1 or a.size < 1:
            raise DimensionError(f"wave function must be a non-empty vector, got shape {a.shape}")
        _require_finite(a, "wave function")
        object.__setattr__(self, "amps", _frozen(a))

    @property
    def basis_dim(self) -> int:
        return self.amps.size

    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)


@dataclass(frozen=True)
class CompositeState:
    """System-major composite vector: ``amps[i * M + j] = R[i, j]``."""

    amps: np.ndarray
    n_sys: int
    n_app: int

    def __post_init__(self):
        a = np.asarray(self.amps)
        if a.shape != (self.n_sys * self.n_app,):
            raise DimensionError(
                f"composite vector has shape {a.shape}, expected ({self.n_sys * self.n_app},)"
            )
        _require_finite(a, "composite state")
        object.__setattr__(self, "amps", _frozen(a))

    def as_matrix(self) -> np.ndarray:
        return self.amps.reshape(self.n_sys, self.n_app)


@dataclass(frozen=True)
class DensityMatrix:
    """Square density matrix, checked Hermitian and PSD on construction.

    The tolerances scale with the largest entry so that unnormalized
    matrices (from raw relational input) are judged on the same footing.
    """

    entries: np.ndarray
    kind: DensityKind = DensityKind.REDUCED
    herm_tol: float = field(default=1e-12, repr=False)
    psd_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionError(f"density matrix must be square, got shape {a.shape}")
        _require_finite(a, "density matrix")
        kind = DensityKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is not DensityKind.TRANSITION:
            scale = max(1.0, float(np.max(np.abs(a))))
            if np.max(np.abs(a - a.conj().T)) > self.herm_tol * scale:
                raise NotHermitianError("density matrix is not Hermitian")
            herm = 0.5 * (a + a.conj().T)
            if np.linalg.eigvalsh(herm).min() < -self.psd_tol * scale:
                raise RelqmError("density matrix has a negative eigenvalue")
            a = herm
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def normalized(self) -> np.ndarray:
        """Entries divided by the trace."""
        return self.entries / np.trace(self.entries)


def wave_function(R, tol: float = DEFAULT_ENTROPY_TOL) -> WaveFunction:
    """Row sums of ``R``: ``phi_i = sum_j R_ij``.

    Raises :class:`EntangledStateError` when the entanglement entropy of
    ``R`` is at or above ``tol``, since no wave function exists then.
    """
    from .entangle import check_unentangled

    R = as_relational(R)
    check_unentangled(R, tol)
    return WaveFunction(R.entries.sum(axis=1))


def reduced_density(R) -> DensityMatrix:
    """``rho_S = R R^dagger`` (trace over the apparatus)."""
    R = as_relational(R)
    a = R.entries
    return DensityMatrix(a @ a.conj().T, DensityKind.REDUCED)


def coherent_density(R) -> DensityMatrix:
    """``rho'_S[i, i'] = sum_{j j'} R_ij conj(R_i'j')``, the outer product of the row sums.

    Equal to :func:`reduced_density` up to a constant exactly when ``R`` is a
    product matrix.
    """
    R = as_relational(R)
    phi = R.entries.sum(axis=1)
    return DensityMatrix(np.outer(phi, phi.conj()), DensityKind.COHERENT)


def composite_state(R) -> CompositeState:
    """Flatten ``R`` system-major into the composite vector ``Psi``.

    Coherent-mode input is refused: its entries are not normalized as
    joint amplitudes. Raw input is rescaled to unit norm.
    """
    R = as_relational(R)
    if R.norm_mode is NormMode.COHERENT:
        raise RelqmError("composite_state needs incoherent or raw normalization, got coherent")
    _nonzero(R)
    amps = R.entries.reshape(-1)
    if R.norm_mode is NormMode.RAW:
        amps = amps / np.sqrt(incoherent_norm(R.entries))
    return CompositeState(amps, R.n_sys, R.n_app)
