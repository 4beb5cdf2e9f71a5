from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from helpers import random_system, state_on
from qsl.bounds import envelope, generalized_bound_curves, generalized_phase_data, standard_bound_curves
from qsl.dynamics import (
    OverlapSeries,
    detect_orthogonalization,
    evolve_amplitudes,
    evolve_overlap,
    evolve_state,
    hamming_distribution,
    verify_sandwich,
)
from qsl.freefermion import chain_overlap_series, single_particle_hamiltonian
from qsl.hamiltonians import PotentialPattern, driven_qubit, lattice_2d, xy_chain
from qsl.hilbert import (
    build_sector_basis,
    checkerboard_plus,
    density_wave,
    make_product_state,
    make_qubit_state,
    make_superposition,
)
from qsl.spectral import diagonalize, fractional_moments, spectral_stats

PLUS = make_qubit_state([1, 1])
MHZ = oracles.MHZ


def qubit_series(omega, t):
    sd = diagonalize(driven_qubit(omega, 12.5))
    return sd, evolve_overlap(sd, PLUS, t)


def test_qubit_closed_form():
    t = np.linspace(0, 250, 501)
    _, s = qubit_series(0.0, t)
    assert np.max(np.abs(s.F - np.abs(np.cos(12.5 * MHZ * t / 2)))) < 1e-12
    assert s.F[0] == 1 and s.theta[0] == 0


def test_eigenstate_never_moves(rng):
    op, _ = random_system(rng, 5)
    sd = diagonalize(op)
    s = evolve_overlap(sd, state_on(sd, {2: 1}), np.linspace(0, 100, 201))
    assert np.allclose(s.F, 1, atol=1e-10)
    assert detect_orthogonalization(s) is None


def test_grid_validation(rng):
    sd = diagonalize(driven_qubit(0, 12.5))
    with pytest.raises(ValueError):
        evolve_overlap(sd, PLUS, [0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        evolve_overlap(sd, PLUS, [])
    with pytest.raises(ValueError):
        evolve_overlap(sd, None, [0.0])


def test_state_examples():
    sd = diagonalize(driven_qubit(0.0, 12.5))
    assert np.array_equal(evolve_state(sd, PLUS, 0.0).amplitudes, PLUS.amplitudes)
    psi = evolve_state(sd, PLUS, 40.0)
    minus = np.array([1, -1]) / np.sqrt(2)
    assert abs(abs(np.vdot(minus, psi.amplitudes)) - 1) < 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(2, 24), st.floats(0, 20), st.floats(0, 20))
def test_group_property(seed, d, t1, t2):
    rng = np.random.default_rng(seed)
    op, psi = random_system(rng, d)
    sd = diagonalize(op)
    two = evolve_state(sd, evolve_state(sd, psi, t1), t2)
    one = evolve_state(sd, psi, t1 + t2)
    assert np.max(np.abs(two.amplitudes - one.amplitudes)) < 1e-10


@given(st.integers(0, 2**32 - 1), st.integers(2, 24))
def test_norm_energy_and_overlap_symmetry(seed, d):
    rng = np.random.default_rng(seed)
    op, psi = random_system(rng, d)
    sd = diagonalize(op)
    t = np.linspace(0, 30, 61)
    amps = evolve_amplitudes(sd, psi, t)
    assert np.allclose(np.linalg.norm(amps, axis=1), 1, atol=1e-10)
    h = op.dense()
    e = np.real(np.einsum("ti,ij,tj->t", amps.conj(), h, amps))
    assert np.max(np.abs(e - e[0])) <= 1e-9 * max(1.0, abs(e[0]), op.max_abs())
    forward = amps @ psi.amplitudes.conj()
    backward = np.conj(psi.amplitudes) @ amps.T
    assert np.allclose(np.abs(forward), np.abs(np.conj(backward)))
    assert np.allclose(np.abs(forward), evolve_overlap(sd, psi, t).F, atol=1e-12)


def test_lattice_matches_expm_oracle():
    op = lattice_2d(3, 3, 5, -2.0, 0.597, 3.4)
    psi = make_product_state(op.basis, checkerboard_plus(3, 3))
    t = np.arange(0, 100.5, 0.5)
    ref = oracles.expm_overlaps(op.dense(), psi.amplitudes.real, t)
    s = evolve_overlap(diagonalize(op), psi, t)
    assert np.max(np.abs(s.F - np.abs(ref))) < 1e-10


def test_chain_matches_free_fermions():
    L, w = 6, 8.0
    pot = PotentialPattern.staggered(L, w)
    op = xy_chain(L, 3, -2.0, pot)
    comps = [(0.5, "101010"), (np.sqrt(3) / 2, "010101")]
    psi = make_superposition(op.basis, comps)
    t = np.arange(0, 250.5, 0.5)
    ed = evolve_overlap(diagonalize(op), psi, t)
    ff = chain_overlap_series(single_particle_hamiltonian(L, -2.0, pot), comps, t)
    assert np.max(np.abs(ed.F - ff.F)) < 1e-10
    # Revivals: the overlap comes back up after its first dip.
    first_min = np.argmin(ed.F[t < 20])
    assert ed.F[t > 20].max() > ed.F[first_min] + 0.2


def test_hamming_distribution_basics():
    op = lattice_2d(3, 3, 5, -2.0, 0.597, 0.0)
    psi = make_product_state(op.basis, checkerboard_plus(3, 3))
    t = np.arange(0, 300.5, 0.5)
    hd = hamming_distribution(diagonalize(op), psi, t)
    assert hd.d_max == 8
    assert hd.probabilities[0, 0] == pytest.approx(1, abs=1e-12)
    assert np.allclose(hd.probabilities[0, 1:], 0, atol=1e-12)
    assert np.all(hd.probabilities >= -1e-15)
    assert np.allclose(hd.probabilities.sum(axis=1), 1, atol=1e-10)
    # Odd distances are unreachable inside a fixed-excitation sector.
    assert np.allclose(hd.probabilities[:, 1::2], 0, atol=1e-12)
    # At W = 0 the wave packet reaches the far end of Fock space.
    assert hd.probabilities[:, 8].max() > 0.05


def test_hamming_needs_fock_state():
    op = xy_chain(4, 2, -2.0)
    psi = make_superposition(op.basis, [(1, "1010"), (1, "0101")])
    with pytest.raises(ValueError):
        hamming_distribution(diagonalize(op), psi, [0.0, 1.0])


def test_hamming_matches_oracle_in_short_window():
    t = np.arange(0, 20.5, 0.5)
    op = lattice_2d(3, 3, 5, -2.0, 0.597, 6.5)
    psi = make_product_state(op.basis, checkerboard_plus(3, 3))
    hd = hamming_distribution(diagonalize(op), psi, t)
    assert np.mean(hd.tail(4)) == pytest.approx(oracles.hamming_tail_oracle(6.5, t), abs=1e-10)


def test_orthogonalization_examples():
    t = np.arange(0, 250.5, 0.5)
    _, s = qubit_series(0.0, t)
    assert detect_orthogonalization(s) == pytest.approx(40.0, abs=0.03)
    assert detect_orthogonalization(s, 1e-5) == pytest.approx(40.0, abs=1e-3)
    _, s = qubit_series(2.5, t)
    assert s.F.min() > 0.1
    assert detect_orthogonalization(s) is None
    for bad in (0.0, 0.2, -1e-3):
        with pytest.raises(ValueError):
            detect_orthogonalization(s, bad)


def test_orthogonalization_without_spectrum():
    t = np.array([0.0, 1.0, 2.0])
    s = OverlapSeries(t, np.array([1.0, 0.5, 0.0]))
    assert detect_orthogonalization(s, 0.1) == pytest.approx(1.8)
    s = OverlapSeries(t, np.array([0.0, 0.5, 0.0]))
    assert detect_orthogonalization(s, 0.1) == 0.0


def test_unified_time_precedes_detection():
    t = np.arange(0, 250.5, 0.5)
    from qsl.bounds import orthogonalization_times

    for omega in (-1.0, 0.0):
        sd, s = qubit_series(omega, t)
        tp = detect_orthogonalization(s, 1e-3)
        if tp is not None:
            assert orthogonalization_times(spectral_stats(sd, PLUS)).t_u <= tp + 0.5


def _full_envelopes(sd, psi, series):
    stats = spectral_stats(sd, psi)
    pd = generalized_phase_data(series, stats)
    ml, mh = fractional_moments(sd, psi, pd.alphas)
    return envelope(standard_bound_curves(stats, series.t) + generalized_bound_curves(pd, ml, mh))


def test_sandwich_and_negative_control():
    op = lattice_2d(3, 3, 5, -2.0, 0.597, 3.4)
    psi = make_product_state(op.basis, checkerboard_plus(3, 3))
    sd = diagonalize(op)
    series = evolve_overlap(sd, psi, np.arange(0, 300.5, 0.5))
    lower, upper = _full_envelopes(sd, psi, series)
    assert verify_sandwich(series, lower, upper) == []
    bad = verify_sandwich(series.with_overlap(series.F + 0.1), lower, upper)
    assert bad and all(v.side == "upper" and v.excess > 1e-9 for v in bad)
    assert series.F[0] == 1 and lower[0] <= 1 <= upper[0]
    with pytest.raises(ValueError):
        verify_sandwich(series, lower[:-1], upper)


def test_sandwich_reports_lower_violations():
    s = OverlapSeries(np.array([0.0, 1.0]), np.array([1.0, 0.2]))
    v = verify_sandwich(s, np.array([1.0, 0.5]), np.ones(2))
    assert len(v) == 1 and v[0].side == "lower" and v[0].excess == pytest.approx(0.3)
