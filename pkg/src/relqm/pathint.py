"""Time-sliced path sums on a 1-D lattice.

Paths are confined to the lattice points (hard walls). A kernel is built by
composing per-slice transfer matrices ``T[x', x]`` with ``dx`` quadrature
weights: ``K = T (dx T) ... (dx T)`` over ``n_slices`` factors. Two slice
rules are available:

``"action"``
    The literal phase of the slice action,
    ``T = sqrt(m / (2 pi i hbar dt)) exp((i/hbar)(m (x'-x)^2 / (2 dt) - dt V(x_mid)))``.
    Summing products of these over lattice paths is exactly the discrete sum
    over paths of ``exp(i S / hbar)``. The Fresnel factor is not resolved
    unless ``m dx |x' - x| / (hbar dt) < pi`` over the whole lattice, so on
    wide lattices the composed kernel does not converge; use it for small
    lattices and for checking against explicit path enumeration.

``"split"`` (default)
    Symmetric split step: ``T = e^{-i dt V/2hbar} K0(dt) e^{-i dt V/2hbar}``
    where ``K0`` is the free propagator restricted to the lattice's momentum
    band (sinc discrete-variable kinetic energy, diagonalized once). ``dx T``
    is unitary for real potentials, so the composition is stable.

The interaction between the two paths contributes
``exp(-(i/hbar) dt V_int(x_mid, y_mid))`` per slice in both rules, with
midpoints of each path's segment. Midpoints of lattice points live on the
half-grid, which is how the coupling is tabulated.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import DimensionError, RelqmError
from .relcore import DensityKind, DensityMatrix, NormMode, RelationalMatrix

#: largest composite dimension for which the dense joint transfer matrix is built
MAX_JOINT_DIM = 4096
#: largest number of system paths enumerated by the influence-functional route
MAX_ENUMERATED_PATHS = 20000


class Scheme(enum.Enum):
    SPLIT = "split"
    ACTION = "action"


class Which(enum.Enum):
    SYSTEM = "system"
    APPARATUS = "apparatus"


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Zero:
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Harmonic:
    """``V(x) = k x^2 / 2``."""

    k: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.k * x * x


@dataclass(frozen=True)
class Quartic:
    """``V(x) = g x^4``."""

    g: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.g * x**4


@dataclass(frozen=True)
class Bilinear:
    """Interaction ``V(x, y) = lam x y``."""

    lam: float

    def __call__(self, x, y):
        return self.lam * np.asarray(x, dtype=float) * np.asarray(y, dtype=float)


POTENTIALS = {"zero": Zero, "harmonic": Harmonic, "quartic": Quartic}
INTERACTIONS = {"bilinear": Bilinear}


def make_potential(name: str, params=()) -> Callable:
    try:
        return POTENTIALS[name](*params)
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; expected one of {sorted(POTENTIALS)}") from None


def make_interaction(name: str, params=()) -> Optional[Callable]:
    if name == "none":
        return None
    try:
        return INTERACTIONS[name](*params)
    except KeyError:
        raise ValueError(
            f"unknown interaction {name!r}; expected 'none' or one of {sorted(INTERACTIONS)}"
        ) from None


# ---------------------------------------------------------------------------
# Lattice, action, kernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lattice1D:
    x_min: float
    x_max: float
    n_points: int
    n_slices: int
    dt: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"lattice needs at least 2 points, got {self.n_points!r}")
        if int(self.n_slices) != self.n_slices or self.n_slices < 1:
            raise ValueError(f"lattice needs at least 1 time slice, got {self.n_slices!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.x_max > self.x_min:
            raise ValueError(f"empty interval [{self.x_min}, {self.x_max}]")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "n_slices", int(self.n_slices))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def half_points(self) -> np.ndarray:
        """Midpoints of all lattice pairs: ``x_min + s dx / 2`` for ``s = 0 .. 2N-2``."""
        return self.x_min + np.arange(2 * self.n_points - 1) * (0.5 * self.dx)

    @property
    def total_time(self) -> float:
        return self.n_slices * self.dt

    def with_slices(self, n_slices: int) -> "Lattice1D":
        return replace(self, n_slices=n_slices)


@dataclass(frozen=True)
class ActionSpec:
    mass_s: float = 1.0
    mass_a: float = 1.0
    v_s: Callable = field(default_factory=Zero)
    v_a: Callable = field(default_factory=Zero)
    #: ``None`` means no interaction term at all
    v_int: Optional[Callable] = None
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.mass_s > 0 and self.mass_a > 0):
            raise ValueError("masses must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    def side(self, which) -> tuple[float, Callable]:
        which = Which(which)
        if which is Which.SYSTEM:
            return self.mass_s, self.v_s
        return self.mass_a, self.v_a


@dataclass(frozen=True)
class Kernel:
    """``values[b, a]`` is the amplitude density to go from point ``a`` to point ``b``."""

    values: np.ndarray
    dx: float


def _scheme(s) -> Scheme:
    return Scheme(s.value if isinstance(s, Scheme) else str(s).lower())


@lru_cache(maxsize=32)
def _free_modes(n: int, dx: float, mass: float, hbar: float):
    # sinc-DVR kinetic energy on a uniform grid
    d = np.subtract.outer(np.arange(n), np.arange(n))
    off = np.where(d == 0, 0.0, 2.0 * (-1.0) ** np.abs(d) / np.where(d == 0, 1, d) ** 2)
    T = (hbar**2 / (2.0 * mass * dx**2)) * (off + np.eye(n) * (np.pi**2 / 3.0))
    w, U = np.linalg.eigh(T)
    w.setflags(write=False)
    U.setflags(write=False)
    return w, U


def slice_transfer(lat: Lattice1D, mass: float, potential: Callable, hbar: float = 1.0,
                   scheme="split") -> np.ndarray:
    """Per-slice transfer matrix ``T[x', x]`` (units of 1/length)."""
    x = lat.points
    dt = lat.dt
    if _scheme(scheme) is Scheme.ACTION:
        dxx = x[:, None] - x[None, :]
        mid = 0.5 * (x[:, None] + x[None, :])
        s = mass * dxx**2 / (2.0 * dt) - dt * potential(mid)
        norm = np.sqrt(mass / (2j * np.pi * hbar * dt))
        return norm * np.exp((1j / hbar) * s)
    w, U = _free_modes(lat.n_points, lat.dx, float(mass), float(hbar))
    k0 = (U * np.exp(-1j * w * (dt / hbar))) @ U.T / lat.dx
    half = np.exp(-0.5j * dt * potential(x) / hbar)
    return half[:, None] * k0 * half[None, :]


def compose_slices(T: np.ndarray, n_slices: int, dx: float) -> np.ndarray:
    K = T.copy()
    for _ in range(n_slices - 1):
        K = T @ K * dx
    return K


def kernel_single(lat: Lattice1D, act: ActionSpec, which="system", scheme="split") -> Kernel:
    """Kernel of one subsystem on its own; the interaction term is ignored."""
    mass, pot = act.side(which)
    T = slice_transfer(lat, mass, pot, act.hbar, scheme)
    return Kernel(compose_slices(T, lat.n_slices, lat.dx), lat.dx)


def propagate_wf(K, phi_a, dx: float | None = None) -> np.ndarray:
    """``phi(x_b) = sum_a K(b, a) phi(a) dx``."""
    if isinstance(K, Kernel):
        vals, dx = K.values, (K.dx if dx is None else dx)
    else:
        vals = np.asarray(K)
        if dx is None:
            raise ValueError("dx is required when K is a bare array")
    phi = np.asarray(phi_a, dtype=np.complex128)
    if phi.shape != (vals.shape[1],):
        raise DimensionError(f"wave function length {phi.shape} does not match kernel {vals.shape}")
    return vals @ phi * dx


# ---------------------------------------------------------------------------
# Two paths: relational matrix, influence functional, reduced density
# ---------------------------------------------------------------------------


def _check_pair(lat_s: Lattice1D, lat_a: Lattice1D) -> None:
    if lat_s.n_slices != lat_a.n_slices:
        raise DimensionError(f"slice counts differ: {lat_s.n_slices} vs {lat_a.n_slices}")
    if not np.isclose(lat_s.dt, lat_a.dt, rtol=1e-12, atol=0.0):
        raise DimensionError(f"time steps differ: {lat_s.dt} vs {lat_a.dt}")


def _check_index(idx: int, lat: Lattice1D, what: str) -> int:
    if not 0 <= int(idx) < lat.n_points:
        raise IndexError(f"{what} index {idx} out of range [0, {lat.n_points})")
    return int(idx)


def coupling_phase(lat_s: Lattice1D, lat_a: Lattice1D, act: ActionSpec) -> Optional[np.ndarray]:
    """``exp(-(i/hbar) dt V_int)`` on the product of the two half-grids, or ``None``."""
    if act.v_int is None:
        return None
    xs, ya = lat_s.half_points, lat_a.half_points
    v = act.v_int(xs[:, None], ya[None, :])
    return np.ascontiguousarray(np.exp((-1j * lat_s.dt / act.hbar) * v))


def _transfers(lat_s, lat_a, act, scheme):
    _check_pair(lat_s, lat_a)
    Ts = slice_transfer(lat_s, act.mass_s, act.v_s, act.hbar, scheme)
    Ta = slice_transfer(lat_a, act.mass_a, act.v_a, act.hbar, scheme)
    return np.ascontiguousarray(Ts), np.ascontiguousarray(Ta), coupling_phase(lat_s, lat_a, act)


def relational_from_paths(lat_s: Lattice1D, lat_a: Lattice1D, act: ActionSpec,
                          a_start_idx_s: int, a_start_idx_a: int, scheme="split") -> RelationalMatrix:
    """Relational matrix from the double path sum, started at fixed lattice points.

    Rows index the system end point, columns the apparatus end point. The
    result is raw (unnormalized).
    """
    Ts, Ta, phase = _transfers(lat_s, lat_a, act, scheme)
    i0 = _check_index(a_start_idx_s, lat_s, "system start")
    j0 = _check_index(a_start_idx_a, lat_a, "apparatus start")
    R = np.outer(Ts[:, i0], Ta[:, j0])
    if phase is not None:
        ns, na = R.shape
        R = R * phase[np.arange(ns)[:, None] + i0, np.arange(na)[None, :] + j0]
    w = lat_s.dx * lat_a.dx
    for _ in range(lat_s.n_slices - 1):
        if phase is None:
            R = (Ts @ R @ Ta.T) * w
        else:
            R = _kernels.joint_slice(np.ascontiguousarray(R), Ts, Ta, phase, w)
    return RelationalMatrix(R, NormMode.RAW)


def joint_transfer(lat_s: Lattice1D, lat_a: Lattice1D, act: ActionSpec, scheme="split") -> np.ndarray:
    """Dense one-slice transfer on the composite index ``(x, y) -> x * N_a + y``."""
    Ts, Ta, phase = _transfers(lat_s, lat_a, act, scheme)
    ns, na = lat_s.n_points, lat_a.n_points
    if ns * na > MAX_JOINT_DIM:
        raise RelqmError(f"composite dimension {ns * na} exceeds {MAX_JOINT_DIM}")
    W = Ts[:, None, :, None] * Ta[None, :, None, :]
    if phase is not None:
        a = np.arange(ns)
        b = np.arange(na)
        W = W * phase[(a[:, None] + a[None, :])[:, None, :, None], (b[:, None] + b[None, :])[None, :, None, :]]
    return W.reshape(ns * na, ns * na)


def joint_propagator(lat_s: Lattice1D, lat_a: Lattice1D, act: ActionSpec, scheme="split") -> np.ndarray:
    """All relational matrices at once: ``P[x_b, y_b, x_a, y_a]``."""
    W = joint_transfer(lat_s, lat_a, act, scheme)
    P = compose_slices(W, lat_s.n_slices, lat_s.dx * lat_a.dx)
    ns, na = lat_s.n_points, lat_a.n_points
    return P.reshape(ns, na, ns, na)


def _apparatus_sums(lat_a: Lattice1D, act: ActionSpec, x_paths: np.ndarray, scheme) -> np.ndarray:
    """Apparatus path sums ``A[p, y_b, y_a]`` driven by each system path ``x_paths[p]``."""
    Ta = slice_transfer(lat_a, act.mass_a, act.v_a, act.hbar, scheme)
    dy = lat_a.dx
    n_paths = x_paths.shape[0]
    if act.v_int is None:
        K = compose_slices(Ta, lat_a.n_slices, dy)
        return np.broadcast_to(K, (n_paths,) + K.shape)
    y = lat_a.points
    ymid = 0.5 * (y[:, None] + y[None, :])
    xmid = 0.5 * (x_paths[:, 1:] + x_paths[:, :-1])  # (p, slice)
    pref = -1j * lat_a.dt / act.hbar
    A = None
    for k in range(lat_a.n_slices):
        M = Ta[None] * np.exp(pref * act.v_int(xmid[:, k, None, None], ymid[None]))
        A = M if A is None else (M @ A) * dy
    return A


def _as_path(path, lat_a: Lattice1D) -> np.ndarray:
    p = np.asarray(path, dtype=float)
    if p.shape != (lat_a.n_slices + 1,):
        raise DimensionError(
            f"system path must list {lat_a.n_slices + 1} positions (one per slice boundary), got {p.shape}"
        )
    return p


def influence_functional(lat_a: Lattice1D, act: ActionSpec, x_path, x_path_prime, scheme="split") -> complex:
    """Influence of the apparatus on a pair of system paths.

    ``F = dy^2 sum_{y_a, y_b} A_x(y_b, y_a) conj(A_x'(y_b, y_a))`` where ``A_x``
    is the apparatus path sum with the interaction phases along system path
    ``x``. Paths are sequences of positions, one per slice boundary.
    """
    paths = np.stack([_as_path(x_path, lat_a), _as_path(x_path_prime, lat_a)])
    A = _apparatus_sums(lat_a, act, paths, scheme)
    return complex(lat_a.dx**2 * np.sum(A[0] * np.conj(A[1])))


def _density_by_transfer(lat_s, lat_a, act, i0, i1, scheme) -> np.ndarray:
    W = joint_transfer(lat_s, lat_a, act, scheme)
    ns, na = lat_s.n_points, lat_a.n_points
    dy = lat_a.dx
    cols0 = i0 * na + np.arange(na)
    cols1 = i1 * na + np.arange(na)
    # composite "density" after the first slice, summed over the shared start y_a
    G = dy**2 * (W[:, cols0] @ W[:, cols1].conj().T)
    w2 = (lat_s.dx * dy) ** 2
    for _ in range(lat_s.n_slices - 1):
        G = (W @ G @ W.conj().T) * w2
    # shared end point y_b
    return np.einsum("ijkj->ik", G.reshape(ns, na, ns, na))


def _density_by_influence(lat_s, lat_a, act, i0, i1, scheme) -> np.ndarray:
    n = lat_s.n_slices
    ns = lat_s.n_points
    count = ns**n
    if count > MAX_ENUMERATED_PATHS:
        raise RelqmError(f"{count} system paths per start point exceeds {MAX_ENUMERATED_PATHS}")
    Ts = slice_transfer(lat_s, act.mass_s, act.v_s, act.hbar, scheme)
    x = lat_s.points
    tails = np.array(list(itertools.product(range(ns), repeat=n)), dtype=np.intp).reshape(count, n)

    def paths_from(i):
        idx = np.concatenate([np.full((count, 1), i, dtype=np.intp), tails], axis=1)
        amp = np.prod(Ts[idx[:, 1:], idx[:, :-1]], axis=1) * lat_s.dx ** (n - 1)
        return idx, amp

    idx0, amp0 = paths_from(i0)
    idx1, amp1 = paths_from(i1)
    A0 = _apparatus_sums(lat_a, act, x[idx0], scheme).reshape(count, -1)
    A1 = _apparatus_sums(lat_a, act, x[idx1], scheme).reshape(count, -1)
    F = lat_a.dx**2 * (A0 @ A1.conj().T)  # F[p, q] for every path pair
    contrib = amp0[:, None] * np.conj(amp1)[None, :] * F
    rho = np.zeros((ns, ns), dtype=np.complex128)
    np.add.at(rho, (idx0[:, -1][:, None], idx1[:, -1][None, :]), contrib)
    return rho


def reduced_density_paths(lat_s: Lattice1D, lat_a: Lattice1D, act: ActionSpec, x_a_idx: int,
                          x_a_prime_idx: int | None = None, scheme="split",
                          method: str = "transfer") -> DensityMatrix:
    """``rho(x_b, x_b'; x_a, x_a')`` from forward and backward system path sums.

    ``method="transfer"`` propagates the forward/backward pair jointly slice
    by slice (polynomial cost). ``method="influence"`` enumerates every
    system path pair and weights it with the influence functional
    (exponential cost, small lattices only). Both sum the apparatus start
    and end points with ``dy^2`` weights.

    With ``x_a == x_a'`` the result is a Hermitian reduced density matrix;
    otherwise it is returned with kind ``TRANSITION`` and not validated as a
    state.
    """
    _check_pair(lat_s, lat_a)
    i0 = _check_index(x_a_idx, lat_s, "system start")
    i1 = i0 if x_a_prime_idx is None else _check_index(x_a_prime_idx, lat_s, "primed system start")
    if method == "transfer":
        rho = _density_by_transfer(lat_s, lat_a, act, i0, i1, scheme)
    elif method == "influence":
        rho = _density_by_influence(lat_s, lat_a, act, i0, i1, scheme)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'transfer' or 'influence'")
    kind = DensityKind.REDUCED if i0 == i1 else DensityKind.TRANSITION
    return DensityMatrix(rho, kind)


def stacked_relational(lat_s: Lattice1D, lat_a: Lattice1D, act: ActionSpec, x_a_idx: int,
                       scheme="split") -> RelationalMatrix:
    """Relational matrix whose apparatus index runs over ``(y_a, y_b)`` pairs, scaled by ``dy``.

    ``R R^dagger`` of this matrix is the reduced density matrix for system
    start ``x_a`` with both apparatus end points summed.
    """
    P = joint_propagator(lat_s, lat_a, act, scheme)  # (x_b, y_b, x_a, y_a)
    i0 = _check_index(x_a_idx, lat_s, "system start")
    block = P[:, :, i0, :]  # (x_b, y_b, y_a)
    ns = lat_s.n_points
    return RelationalMatrix(block.transpose(0, 2, 1).reshape(ns, -1) * lat_a.dx, NormMode.RAW)


def density_tensor_paths(lat_s: Lattice1D, lat_a: Lattice1D, act: ActionSpec, scheme="split") -> np.ndarray:
    """Full ``rho[x_b, x_b', x_a, x_a']`` for every pair of system start points."""
    P = joint_propagator(lat_s, lat_a, act, scheme)
    return lat_a.dx**2 * np.einsum("bjai,cjdi->bcad", P, P.conj(), optimize=True)


def transition_prob_paths(rho, chi_a, psi_b, dx: float, normalize: bool = False) -> float:
    """Probability of starting in ``chi`` and ending in ``psi``: ``Tr(rho P)`` by quadrature.

    ``rho`` is the four-index array from :func:`density_tensor_paths`. The
    sum is ``dx^4 sum conj(psi(x_b)) psi(x_b') rho(x_b, x_b'; x_a, x_a')
    chi(x_a) conj(chi(x_a'))``. A lattice delta (``1/dx`` at one site) for
    both states picks out the diagonal entry ``rho(b, b; a, a)``.

    With ``normalize=True`` the value is divided by the probability of
    arriving anywhere from ``chi``, which removes the overall constant the
    unnormalized path sums carry.
    """
    r = np.asarray(rho)
    if r.ndim != 4 or r.shape[0] != r.shape[1] or r.shape[2] != r.shape[3]:
        raise DimensionError(f"rho must have shape (Nb, Nb, Na, Na), got {r.shape}")
    chi = np.asarray(chi_a, dtype=np.complex128)
    psi = np.asarray(psi_b, dtype=np.complex128)
    if chi.shape != (r.shape[2],) or psi.shape != (r.shape[0],):
        raise DimensionError(f"state lengths {chi.shape}, {psi.shape} do not match rho {r.shape}")
    start = np.einsum("bcad,a,d->bc", r, chi, chi.conj())
    val = dx**4 * np.einsum("b,bc,c->", psi.conj(), start, psi)
    if normalize:
        total = dx**3 * np.trace(start)
        if total == 0:
            raise RelqmError("start state has zero total probability")
        val = val / total
    scale = max(1.0, abs(val))
    if abs(val.imag) > 1e-10 * scale or val.real < -1e-10 * scale:
        raise RelqmError(f"transition probability {val!r} is not real non-negative")
    return float(val.real)
