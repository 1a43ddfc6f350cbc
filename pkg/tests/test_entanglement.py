import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainstar.dynamics import (
    RabiParams,
    analytic_trace,
    ansatz_state,
    default_times,
    initial_state,
    w_chain_state,
)
from chainstar.entanglement import (
    chain_pair_concurrence,
    collective_z_distribution,
    concurrence,
    effective_state,
    ghz_chain_state,
    ghz_postselect,
    max_spin_pair_concurrence,
    spin_pair_concurrence,
)
from chainstar.errors import ImpossibleOutcome, IndexOutOfRange, NotAState, PathMismatch, SiteOutOfRange
from chainstar.models import SpinLayout
from chainstar.pauli import StateVector, partial_trace

from conftest import PAULI, random_state


def _wootters_by_eigenvalues(rho):
    """Textbook recipe, used as an oracle away from degenerate points."""
    yy = np.kron(PAULI["Y"], PAULI["Y"])
    r = rho @ yy @ rho.conj() @ yy
    lam = np.sort(np.sqrt(np.clip(np.linalg.eigvals(r).real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def test_bell_states_are_maximal():
    plus_minus = np.zeros(4, dtype=complex)
    plus_minus[[1, 2]] = 1 / math.sqrt(2)
    assert abs(concurrence(np.outer(plus_minus, plus_minus.conj())) - 1) < 1e-15
    phi = np.array([1, 0, 0, 1j]) / math.sqrt(2)
    assert abs(concurrence(np.outer(phi, phi.conj())) - 1) < 1e-15


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_product_states_have_zero_concurrence(seed):
    rng = np.random.default_rng(seed)
    v = np.kron(random_state(rng, 1), random_state(rng, 1))
    assert concurrence(np.outer(v, v.conj())) < 1e-7


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pure_state_formula_and_oracle(seed):
    rng = np.random.default_rng(seed)
    v = random_state(rng, 2)
    expected = 2 * abs(v[0] * v[3] - v[1] * v[2])
    rho = np.outer(v, v.conj())
    assert abs(concurrence(rho) - expected) < 1e-9
    # full rank, so the square roots in the oracle are well conditioned
    w = random_state(rng, 2)
    mixed = 0.7 * rho + 0.2 * np.outer(w, w.conj()) + 0.1 * np.eye(4) / 4
    mixed = 0.5 * (mixed + mixed.conj().T)
    assert abs(concurrence(mixed) - _wootters_by_eigenvalues(mixed)) < 1e-12


def test_not_a_state():
    with pytest.raises(NotAState):
        concurrence(np.eye(2) / 2)
    with pytest.raises(NotAState):
        concurrence(np.eye(4))
    with pytest.raises(NotAState):
        concurrence(np.diag([1.5, -0.5, 0, 0]))
    bad = np.eye(4) / 4
    bad[0, 1] = 0.1
    with pytest.raises(NotAState):
        concurrence(bad)


def test_chain_pair_examples():
    layout = SpinLayout((1, 1))
    s = 1 / math.sqrt(2)
    ghz_point = ansatz_state(layout, 0.0, [s, s])
    rho = partial_trace(ghz_point, (1, 2))
    assert abs(concurrence(rho) - 1) < 1e-15

    p = RabiParams.build([1.0, 1.0], calibration=2.0)
    trace = analytic_trace(p, default_times(p.omega, 8))
    rep = chain_pair_concurrence(trace, 0, 1)
    assert rep.values[0] == 0.0
    assert abs(rep.values[2] - 1) < 1e-12  # omega t = pi / 2
    assert rep.to_csv().splitlines()[0] == "t,concurrence"

    p3 = RabiParams.build([1.0] * 3, calibration=2.0)
    trace3 = analytic_trace(p3, [0.0, p3.peak_time])
    for i, j in ((0, 1), (0, 2), (1, 2)):
        assert abs(chain_pair_concurrence(trace3, i, j).values[1] - 2 / 3) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.1, 2), min_size=2, max_size=3), st.floats(-2, 2))
def test_path_agreement_and_bound(gammas, delta):
    p = RabiParams.build(gammas, delta, 2.0)
    trace = analytic_trace(p, default_times(p.omega, 24))
    for i in range(len(gammas)):
        for j in range(i + 1, len(gammas)):
            rep = chain_pair_concurrence(trace, i, j)
            assert rep.path_deviation < 1e-9
            assert rep.values.max() <= 1.0


def test_path_mismatch_detected():
    p = RabiParams.build([1.0, 1.0], calibration=2.0)
    trace = analytic_trace(p, default_times(p.omega, 8))
    with pytest.raises(PathMismatch):
        chain_pair_concurrence(trace, 0, 1, tol=-1.0)
    with pytest.raises(IndexOutOfRange):
        chain_pair_concurrence(trace, 0, 2)
    with pytest.raises(ValueError):
        chain_pair_concurrence(trace, 1, 1)


def test_effective_state_layout():
    p = RabiParams.build([1.0, 2.0])
    trace = analytic_trace(p, [0.0, 0.4])
    eff = effective_state(trace, 1)
    alpha, beta = trace.alpha[1], trace.beta[1]
    assert eff.amplitudes[0b011] == alpha
    assert eff.amplitudes[0b101] == beta[0] and eff.amplitudes[0b110] == beta[1]


def test_spin_pairs_unentangled():
    ghz = ghz_chain_state(SpinLayout((5, 5)))
    assert spin_pair_concurrence(ghz, 2, 7) < 1e-10
    assert max_spin_pair_concurrence(ghz, range(10)) < 1e-10

    layout = SpinLayout((5, 5, 5))
    w = w_chain_state(layout)
    assert spin_pair_concurrence(w, 1, 2) < 1e-10
    assert spin_pair_concurrence(w, 3, 9) < 1e-10
    assert spin_pair_concurrence(initial_state(layout), 4, 12) == 0.0


def test_spin_pair_guards():
    w = w_chain_state(SpinLayout((3, 3)))
    with pytest.raises(SiteOutOfRange):
        spin_pair_concurrence(w, 1, 7)
    with pytest.raises(ValueError):
        spin_pair_concurrence(w, 2, 2)
    assert spin_pair_concurrence(w, 0, 1) < 1e-10


def test_ghz_postselection():
    layout = SpinLayout((5, 5))
    s = 1 / math.sqrt(2)
    peak = ansatz_state(layout, 0.0, [-1j * s, -1j * s])
    prob, chains = ghz_postselect(peak, -1)
    assert prob == pytest.approx(1, abs=1e-15)
    assert abs(ghz_chain_state(layout).fidelity(chains) - 1) < 1e-15
    with pytest.raises(ImpossibleOutcome):
        ghz_postselect(peak, 1)
    with pytest.raises(ValueError):
        ghz_postselect(peak, 0)

    start = initial_state(layout)
    prob, chains = ghz_postselect(start, 1)
    assert prob == 1.0
    assert np.array_equal(chains.amplitudes, start.amplitudes[: start.dim // 2])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_postselection_is_complete(n, seed):
    v = StateVector(random_state(np.random.default_rng(seed), n))
    total = sum(ghz_postselect(v, o)[0] for o in (1, -1))
    assert abs(total - 1) < 1e-12


def test_collective_z_on_ghz():
    ghz = ghz_chain_state(SpinLayout((5, 5)))
    assert collective_z_distribution(ghz, range(10)) == {0: pytest.approx(1.0)}
    dist = collective_z_distribution(ghz, range(5))
    assert dist == {-5: pytest.approx(0.5), 5: pytest.approx(0.5)}
    with pytest.raises(SiteOutOfRange):
        collective_z_distribution(ghz, [10])
