import math

import numpy as np
import pytest

from relqm import (
    ActionSpec,
    Bilinear,
    DimensionError,
    Harmonic,
    Lattice1D,
    Quartic,
    Zero,
    density_tensor_paths,
    entropy,
    influence_functional,
    kernel_single,
    propagate_wf,
    reduced_density_paths,
    relational_from_paths,
    stacked_relational,
    transition_prob_paths,
)
from relqm import pathint
from relqm.relcore import DensityKind
from oracles import enum_influence, enum_relational_action, enum_relational_transfer

TINY = Lattice1D(-2.0, 2.0, 8, 2, 0.25)
COUPLED = ActionSpec(v_s=Harmonic(1.0), v_a=Harmonic(1.0), v_int=Bilinear(0.5))
FREE = ActionSpec()


def rel_err(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


def test_lattice_validation():
    with pytest.raises(ValueError):
        Lattice1D(0, 1, 1, 1, 0.1)
    with pytest.raises(ValueError):
        Lattice1D(0, 1, 4, 0, 0.1)
    with pytest.raises(ValueError):
        Lattice1D(0, 1, 4, 1, 0.0)
    with pytest.raises(ValueError):
        Lattice1D(1, 1, 4, 1, 0.1)
    lat = Lattice1D(-1, 1, 5, 3, 0.5)
    assert lat.dx == 0.5 and lat.total_time == 1.5
    np.testing.assert_allclose(lat.half_points[::2], lat.points)


def test_potentials():
    x = np.array([-1.0, 2.0])
    np.testing.assert_array_equal(Zero()(x), [0.0, 0.0])
    np.testing.assert_allclose(Harmonic(2.0)(x), [1.0, 4.0])
    np.testing.assert_allclose(Quartic(0.5)(x), [0.5, 8.0])
    np.testing.assert_allclose(Bilinear(0.5)(x, x), [0.5, 2.0])
    assert pathint.make_interaction("none") is None
    with pytest.raises(ValueError):
        pathint.make_potential("cubic", [1.0])


def test_single_slice_is_the_straight_path_action():
    lat = Lattice1D(-1.0, 1.0, 5, 1, 0.3)
    act = ActionSpec(mass_s=2.0, v_s=Quartic(0.7), hbar=0.9)
    K = kernel_single(lat, act, scheme="action").values
    x = lat.points
    for a in range(5):
        for b in range(5):
            S = 2.0 * (x[b] - x[a]) ** 2 / (2 * 0.3) - 0.3 * 0.7 * ((x[a] + x[b]) / 2) ** 4
            expected = np.sqrt(2.0 / (2j * np.pi * 0.9 * 0.3)) * np.exp(1j * S / 0.9)
            assert K[b, a] == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("scheme", ["split", "action"])
def test_chapman_kolmogorov(scheme):
    lat = Lattice1D(-3.0, 3.0, 24, 3, 0.1)
    act = ActionSpec(v_s=Harmonic(1.0))
    K1 = kernel_single(lat, act, scheme=scheme).values
    K2 = kernel_single(lat.with_slices(6), act, scheme=scheme).values
    assert rel_err(K1 @ K1 * lat.dx, K2) < 1e-8


def test_split_kernel_is_unitary_in_quadrature():
    lat = Lattice1D(-5.0, 5.0, 40, 5, 0.2)
    K = kernel_single(lat, ActionSpec(v_s=Quartic(0.1))).values * lat.dx
    np.testing.assert_allclose(K.conj().T @ K, np.eye(40), atol=1e-12)


def test_kernel_which_side():
    lat = Lattice1D(-3.0, 3.0, 12, 2, 0.2)
    act = ActionSpec(mass_s=1.0, mass_a=3.0, v_a=Harmonic(2.0), v_int=Bilinear(1.0))
    Ka = kernel_single(lat, act, "apparatus").values
    Ks = kernel_single(lat, ActionSpec(mass_s=3.0, v_s=Harmonic(2.0))).values
    np.testing.assert_array_equal(Ka, Ks)


def test_propagate_identity():
    lat = Lattice1D(0.0, 1.0, 6, 1, 0.1)
    phi = np.arange(6) + 1j
    np.testing.assert_allclose(propagate_wf(np.eye(6) / lat.dx, phi, lat.dx), phi, atol=1e-14)
    with pytest.raises(DimensionError):
        propagate_wf(np.eye(6), phi[:5], 1.0)


def test_free_packet_keeps_its_norm():
    lat = Lattice1D(-15.0, 15.0, 200, 20, 0.1)
    x = lat.points
    phi = np.exp(-((x + 2.0) ** 2) / 2 + 1j * x) / np.pi**0.25
    out = propagate_wf(kernel_single(lat, FREE), phi)
    n0 = np.sum(np.abs(phi) ** 2) * lat.dx
    assert np.sum(np.abs(out) ** 2) * lat.dx == pytest.approx(n0, rel=0.01)
    # and it spreads as the analytic free packet does
    t = lat.total_time
    sigma2 = (1 + t**2) / 2
    analytic = np.exp(-((x + 2.0 - t) ** 2) / (2 * sigma2 * 2)) / (np.pi * 2 * sigma2) ** 0.25
    assert np.max(np.abs(np.abs(out) - analytic)) < 0.01 * analytic.max()


def test_oscillator_ground_state_is_stationary():
    lat = Lattice1D(-8.0, 8.0, 128, 64, 2 * np.pi / 64)
    act = ActionSpec(v_s=Harmonic(1.0))
    phi0 = np.exp(-lat.points**2 / 2) / np.pi**0.25
    out = propagate_wf(kernel_single(lat, act), phi0)
    assert np.max(np.abs(np.abs(out) - phi0)) < 0.01 * phi0.max()


def test_uncoupled_relational_factorizes():
    lat = Lattice1D(-3.0, 3.0, 16, 4, 0.25)
    act = ActionSpec(v_s=Harmonic(1.0), v_a=Harmonic(0.5), mass_a=2.0)
    R = relational_from_paths(lat, lat, act, 5, 10).entries
    Ks = kernel_single(lat, act, "system").values
    Ka = kernel_single(lat, act, "apparatus").values
    assert rel_err(R, np.outer(Ks[:, 5], Ka[:, 10])) < 1e-12
    assert entropy(R) < 1e-8
    phi = R.sum(axis=1)
    const = phi[3] / Ks[3, 5]
    np.testing.assert_allclose(phi, const * Ks[:, 5], rtol=1e-12, atol=1e-14)


def test_coupling_entangles():
    lat = Lattice1D(-3.0, 3.0, 16, 4, 0.25)
    assert entropy(relational_from_paths(lat, lat, COUPLED, 5, 10)) > 1e-3


def test_mismatched_lattices():
    with pytest.raises(DimensionError):
        relational_from_paths(TINY, TINY.with_slices(3), COUPLED, 0, 0)
    other = Lattice1D(-2.0, 2.0, 8, 2, 0.3)
    with pytest.raises(DimensionError):
        reduced_density_paths(TINY, other, COUPLED, 0)
    with pytest.raises(IndexError):
        relational_from_paths(TINY, TINY, COUPLED, 8, 0)


def test_relational_matches_action_enumeration():
    R = relational_from_paths(TINY, TINY, COUPLED, 3, 5, scheme="action").entries
    assert rel_err(R, enum_relational_action(TINY, TINY, COUPLED, 3, 5)) < 1e-10


def test_relational_enumeration_frozen_values():
    # exhaustive per-path sums of the slice action, evaluated once and frozen
    R = relational_from_paths(TINY, TINY, COUPLED, 3, 5, scheme="action").entries
    assert R[2, 2] == pytest.approx(-1.165170057239593 - 1.5234637260483932j, rel=1e-12)
    assert R[4, 6] == pytest.approx(0.09295532071576833 + 1.8868393349259662j, rel=1e-12)
    assert R[0, 7] == pytest.approx(-1.2337470927060734 - 0.37175942489659697j, rel=1e-12)


def test_relational_matches_transfer_enumeration_split():
    lat_a = Lattice1D(-1.5, 2.5, 6, 2, 0.25)
    Ts = pathint.slice_transfer(TINY, 1.0, COUPLED.v_s)
    Ta = pathint.slice_transfer(lat_a, 1.0, COUPLED.v_a)
    phase = pathint.coupling_phase(TINY, lat_a, COUPLED)
    expected = enum_relational_transfer(Ts, Ta, phase, TINY.dx, lat_a.dx, 2, 6, 1)
    R = relational_from_paths(TINY, lat_a, COUPLED, 6, 1).entries
    assert R.shape == (8, 6)
    assert rel_err(R, expected) < 1e-10


def test_three_slices_match_enumeration():
    lat = Lattice1D(-1.0, 1.0, 4, 3, 0.2)
    Ts = pathint.slice_transfer(lat, 1.0, COUPLED.v_s)
    phase = pathint.coupling_phase(lat, lat, COUPLED)
    expected = enum_relational_transfer(Ts, Ts, phase, lat.dx, lat.dx, 3, 0, 2)
    assert rel_err(relational_from_paths(lat, lat, COUPLED, 0, 2).entries, expected) < 1e-10


def test_influence_without_coupling():
    x = TINY.points
    K = kernel_single(TINY, FREE, "apparatus").values
    expected = TINY.dx**2 * np.sum(np.abs(K) ** 2)
    for p, q in (([x[0], x[1], x[2]], [x[5], x[5], x[5]]), ([x[7]] * 3, [x[1]] * 3)):
        assert influence_functional(TINY, FREE, p, q) == pytest.approx(expected, rel=1e-13)


def test_influence_diagonal_is_real():
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = rng.choice(TINY.points, size=3)
        F = influence_functional(TINY, COUPLED, p, p)
        assert abs(F.imag) < 1e-10 * abs(F)


def test_influence_matches_enumeration():
    x = TINY.points
    for scheme in ("split", "action"):
        Ta = pathint.slice_transfer(TINY, 1.0, COUPLED.v_a, scheme=scheme)
        for p, q in (([x[3], x[4], x[6]], [x[3], x[1], x[2]]), ([x[0], x[7], x[0]], [x[2], x[2], x[5]])):
            F = influence_functional(TINY, COUPLED, p, q, scheme=scheme)
            expected = enum_influence(Ta, TINY, COUPLED, p, q)
            assert abs(F - expected) < 1e-10 * abs(expected)
    with pytest.raises(DimensionError):
        influence_functional(TINY, COUPLED, [0.0, 1.0], [0.0, 1.0, 2.0])


def _rr_route(lat_s, lat_a, act, i0, i1, scheme):
    out = 0
    for ya in range(lat_a.n_points):
        R0 = relational_from_paths(lat_s, lat_a, act, i0, ya, scheme).entries
        R1 = relational_from_paths(lat_s, lat_a, act, i1, ya, scheme).entries
        out = out + lat_a.dx**2 * R0 @ R1.conj().T
    return out


@pytest.mark.parametrize("scheme", ["split", "action"])
def test_reduced_density_routes_agree(scheme):
    rho = reduced_density_paths(TINY, TINY, COUPLED, 3, scheme=scheme)
    assert rho.kind is DensityKind.REDUCED
    rr = _rr_route(TINY, TINY, COUPLED, 3, 3, scheme)
    assert rel_err(rho.entries, rr) < 1e-8
    infl = reduced_density_paths(TINY, TINY, COUPLED, 3, scheme=scheme, method="influence").entries
    assert rel_err(infl, rr) < 1e-10
    S = stacked_relational(TINY, TINY, COUPLED, 3, scheme).entries
    assert rel_err(S @ S.conj().T, rr) < 1e-10
    np.testing.assert_allclose(rho.entries, rho.entries.conj().T, atol=1e-10 * np.abs(rr).max())


def test_off_diagonal_start_block():
    rho = reduced_density_paths(TINY, TINY, COUPLED, 2, 5)
    assert rho.kind is DensityKind.TRANSITION
    assert rel_err(rho.entries, _rr_route(TINY, TINY, COUPLED, 2, 5, "split")) < 1e-10
    infl = reduced_density_paths(TINY, TINY, COUPLED, 2, 5, method="influence").entries
    assert rel_err(infl, rho.entries) < 1e-10
    with pytest.raises(ValueError):
        reduced_density_paths(TINY, TINY, COUPLED, 2, method="bogus")


def test_uncoupled_density_is_pure():
    act = ActionSpec(v_s=Harmonic(1.0), v_a=Harmonic(1.0))
    lat = Lattice1D(-3.0, 3.0, 12, 3, 0.25)
    lam = np.linalg.eigvalsh(reduced_density_paths(lat, lat, act, 4).entries)
    assert np.sum(lam > 1e-10 * lam.max()) == 1


def test_density_tensor_blocks():
    rho4 = density_tensor_paths(TINY, TINY, COUPLED)
    for a, b in ((3, 3), (1, 6)):
        block = reduced_density_paths(TINY, TINY, COUPLED, a, b).entries
        assert rel_err(rho4[:, :, a, b], block) < 1e-12


def test_transition_prob_delta_picks_diagonal():
    rho4 = density_tensor_paths(TINY, TINY, COUPLED)
    dx = TINY.dx
    for a, b in ((3, 3), (0, 6), (7, 2)):
        chi = np.zeros(8)
        psi = np.zeros(8)
        chi[a] = psi[b] = 1 / dx
        p = transition_prob_paths(rho4, chi, psi, dx)
        assert p == pytest.approx(rho4[b, b, a, a].real, rel=1e-12)


def test_transition_prob_is_nonnegative():
    rng = np.random.default_rng(1)
    rho4 = density_tensor_paths(TINY, TINY, COUPLED)
    for _ in range(20):
        chi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi /= np.sqrt(TINY.dx * np.vdot(psi, psi).real)
        assert transition_prob_paths(rho4, chi, psi, TINY.dx) >= -1e-10
        assert 0.0 <= transition_prob_paths(rho4, chi, psi, TINY.dx, normalize=True) <= 1.0 + 1e-10


def test_transition_prob_ground_state_overlap():
    lat_s = Lattice1D(-6.0, 6.0, 48, 8, np.pi / 16)
    lat_a = Lattice1D(-3.0, 3.0, 8, 8, np.pi / 16)
    act = ActionSpec(v_s=Harmonic(1.0), v_a=Harmonic(1.0))
    rho4 = density_tensor_paths(lat_s, lat_a, act)
    x = lat_s.points
    g = np.exp(-x**2 / 2) / np.pi**0.25
    K = kernel_single(lat_s, act).values
    dx = lat_s.dx
    expected = abs(dx**2 * g.conj() @ K @ g) ** 2 / (dx * g @ g) ** 2
    p = transition_prob_paths(rho4, g, g, dx, normalize=True) / (dx * g @ g)
    assert p == pytest.approx(expected, rel=0.02)
    assert expected == pytest.approx(1.0, abs=0.02)


def test_transition_prob_shape_checks():
    with pytest.raises(DimensionError):
        transition_prob_paths(np.zeros((2, 2, 3)), np.ones(3), np.ones(2), 1.0)
    with pytest.raises(DimensionError):
        transition_prob_paths(np.zeros((2, 2, 3, 3)), np.ones(2), np.ones(2), 1.0)


def test_path_sums_are_deterministic():
    a = relational_from_paths(TINY, TINY, COUPLED, 3, 5).entries
    b = relational_from_paths(TINY, TINY, COUPLED, 3, 5).entries
    assert a.tobytes() == b.tobytes()
    r1 = reduced_density_paths(TINY, TINY, COUPLED, 3).entries
    r2 = reduced_density_paths(TINY, TINY, COUPLED, 3).entries
    assert r1.tobytes() == r2.tobytes()
