import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainstar.errors import ChainTooShort, EvenMForYZ, SectorCountTooLarge, ShapeMismatch, SiteOutOfRange
from chainstar.experiments import random_xyz_spec
from chainstar.models import ModelSpec, SpinLayout, build_chain_star, build_standard_star
from chainstar.pauli import PauliString, materialize
from chainstar.reduction import (
    all_up_sector,
    block_diagonality_residual,
    chain_transform,
    conjugate,
    enumerate_sectors,
    full_transform,
    invariant_subspace_basis,
    reduce_chain_axis,
    reduce_field,
    reduced_hamiltonian,
    restriction_deviation,
    sector_count,
    sector_effective_model,
    spectral_deviation,
    substitute_sector,
    transform_matrix,
    triplet_transform,
)

from conftest import PAULI


def test_two_site_transform_is_controlled_flip():
    t = materialize(list(triplet_transform(0, 1)), 2)
    expected = np.zeros((4, 4), dtype=complex)
    expected[:2, :2] = PAULI["I"]
    expected[2:, 2:] = PAULI["X"]
    assert np.array_equal(t, expected)


@pytest.mark.parametrize("pair", [(0, 1), (1, 0), (0, 2), (2, 1)])
def test_transform_hermitian_and_involutive(pair):
    t = materialize(list(triplet_transform(*pair)), 3)
    assert np.array_equal(t, t.conj().T)
    assert np.array_equal(t @ t, np.eye(8))


def test_transform_guards():
    with pytest.raises(ValueError):
        triplet_transform(1, 1)
    with pytest.raises(SiteOutOfRange):
        triplet_transform(0, 3, site_count=3)


def test_chain_transform_shapes():
    assert [(t.control, t.target) for t in chain_transform(SpinLayout((2,)), 0)] == [(1, 2)]
    assert [(t.control, t.target) for t in chain_transform(SpinLayout((3,)), 0)] == [(2, 3), (1, 2)]
    assert len(chain_transform(SpinLayout((1, 5)), 1)) == 4
    with pytest.raises(ChainTooShort):
        chain_transform(SpinLayout((1, 3)), 0)


def _dense_conj(strings, transforms, n):
    t = transform_matrix(transforms, n)
    return t.conj().T @ materialize(strings, n) @ t


def test_pair_transform_images():
    t12 = [triplet_transform(0, 1)]
    xx = PauliString(1, ((0, "X"), (1, "X")))
    yy = PauliString(1, ((0, "Y"), (1, "Y")))
    zz = PauliString(1, ((0, "Z"), (1, "Z")))
    assert conjugate([xx], t12) == [PauliString.single(0, "X")]
    assert conjugate([zz], t12) == [PauliString.single(1, "Z")]
    # dense conjugation decides the Y image: -X1 Z2
    assert conjugate([yy], t12) == [PauliString(-1, ((0, "X"), (1, "Z")))]
    assert np.array_equal(_dense_conj([yy], t12, 2), -np.kron(PAULI["X"], PAULI["Z"]))
    for s in (xx, zz):
        assert np.array_equal(_dense_conj([s], t12, 2), materialize(conjugate([s], t12), 2))


@st.composite
def string_and_transforms(draw):
    n = draw(st.integers(2, 5))
    axes = draw(st.lists(st.sampled_from("IXYZ"), min_size=n, max_size=n))
    ps = PauliString(draw(st.floats(-2, 2)), tuple((s, a) for s, a in enumerate(axes) if a != "I"))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1]), max_size=4))
    return n, ps, [triplet_transform(i, j) for i, j in pairs]


@settings(max_examples=150, deadline=None)
@given(string_and_transforms())
def test_string_conjugation_matches_dense(case):
    n, ps, transforms = case
    assert np.allclose(materialize(conjugate([ps], transforms), n), _dense_conj([ps], transforms, n), atol=1e-14)


def test_reduce_chain_axis_examples():
    assert reduce_chain_axis("X", 5) == reduce_chain_axis("x", 5)
    r = reduce_chain_axis("X", 5)
    assert (r.result_axis, r.sign, r.parity_sites) == ("X", 1, ())
    r = reduce_chain_axis("Y", 3)
    assert (r.result_axis, r.sign, r.parity_sites) == ("Y", -1, (3,))
    r = reduce_chain_axis("Z", 5)
    assert (r.result_axis, r.sign, r.parity_sites) == ("Z", 1, (3, 5))
    with pytest.raises(EvenMForYZ):
        reduce_chain_axis("Y", 4)
    with pytest.raises(EvenMForYZ):
        reduce_chain_axis("Z", 2)


def test_y_sign_law():
    assert [reduce_chain_axis("Y", m).sign for m in (1, 3, 5, 7, 9)] == [1, -1, 1, -1, 1]


@pytest.mark.parametrize("m", [1, 3, 5, 7])
@pytest.mark.parametrize("axis", "XYZ")
def test_reduction_report_matches_conjugation(axis, m):
    layout = SpinLayout((m,))
    nwise = PauliString.uniform(range(m + 1), axis)
    got = conjugate([nwise], full_transform(layout))
    r = reduce_chain_axis(axis, m)
    factors = [(0, axis), (1, r.result_axis)] + [(p, "Z") for p in r.parity_sites]
    assert got == [PauliString(r.sign, tuple(factors))]


def test_reduce_field():
    assert reduce_field(1, [0.7], []) == 0.7
    assert reduce_field(3, [0.1, 0.2, 0.4], [1, 1]) == pytest.approx(0.7)
    assert reduce_field(3, [0.1, 0.2, 0.4], [-1, 1]) == pytest.approx(-0.5)
    assert reduce_field(3, [0.1, 0.2, 0.4], [1, -1]) == pytest.approx(-0.1)
    with pytest.raises(ShapeMismatch):
        reduce_field(3, [0.1, 0.2], [1, 1])


def test_sector_model_all_up_sign_free():
    spec = ModelSpec.xx((5, 5), (0.6, 0.9), chain_field=0.13)
    p = sector_effective_model(spec, all_up_sector(spec.layout))
    assert p.g_x == (0.6, 0.9) and p.g_y == (0.6, 0.9)
    assert p.f == pytest.approx((5 * 0.13, 5 * 0.13), abs=1e-15)


def test_sector_model_m3_flipped_parity():
    spec = ModelSpec("XY", SpinLayout((3,)), 0.0, (0.4,), (0.8,))
    assert sector_effective_model(spec, ((1, 1),)).g_y == (-0.8,)
    assert sector_effective_model(spec, ((1, -1),)).g_y == (0.8,)


def test_sector_model_zero_couplings():
    spec = ModelSpec("XYZ", SpinLayout((3,)), 0.5, chain_field=[(0.1, 0.2, 0.3)])
    p = sector_effective_model(spec, ((-1, 1),))
    assert p.g_x == p.g_y == p.g_z == (0.0,)
    assert p.f == (reduce_field(3, (0.1, 0.2, 0.3), (-1, 1)),)
    with pytest.raises(ShapeMismatch):
        sector_effective_model(spec, ((1,),))
    with pytest.raises(ShapeMismatch):
        sector_effective_model(spec, ((1, 0),))


def test_sector_counts_and_order():
    assert sector_count(SpinLayout((3,))) == 4
    assert sector_count(SpinLayout((3, 3))) == 16
    assert sector_count(SpinLayout((5, 5))) == 256
    assert enumerate_sectors(SpinLayout((3,))) == [((1, 1),), ((1, -1),), ((-1, 1),), ((-1, -1),)]
    assert enumerate_sectors(SpinLayout((1, 2)))[:2] == [((), (1,)), ((), (-1,))]
    with pytest.raises(SectorCountTooLarge):
        enumerate_sectors(SpinLayout((11, 13)))


def test_invariant_basis_single_spin():
    basis = invariant_subspace_basis(SpinLayout((1,)))
    assert [int(np.argmax(np.abs(b.amplitudes))) for b in basis] == [0, 1, 2, 3]


@pytest.mark.parametrize("seed", range(3))
def test_conjugation_preserves_spectrum(seed):
    spec = random_xyz_spec((3, 3), seed)
    n = spec.layout.site_count
    h = materialize(build_chain_star(spec), n)
    reduced = reduced_hamiltonian(spec)
    assert np.allclose(_dense_conj(build_chain_star(spec), full_transform(spec.layout), n), materialize(reduced, n), atol=1e-12)
    assert np.max(np.abs(np.linalg.eigvalsh(h) - np.linalg.eigvalsh(materialize(reduced, n)))) < 1e-9
    assert block_diagonality_residual(reduced, spec.layout) == 0.0


@pytest.mark.parametrize("sizes", [(3, 3), (1, 5), (3, 1, 3)])
def test_spectral_decomposition(sizes):
    spec = random_xyz_spec(sizes, sum(sizes))
    assert spectral_deviation(spec) < 1e-9
    op_dev, leak = restriction_deviation(spec)
    assert op_dev < 1e-12 and leak < 1e-12


def test_x_family_even_chain_decomposes():
    spec = ModelSpec("X", SpinLayout((2, 4)), 0.3, (0.7, -0.4), chain_field=[(0.1, 0.2), (0.3, -0.1, 0.2, 0.5)])
    assert spectral_deviation(spec) < 1e-9


def test_substitution_reproduces_sector_model():
    spec = random_xyz_spec((3, 3), 7)
    reduced = reduced_hamiltonian(spec)
    for sector in enumerate_sectors(spec.layout)[:5]:
        a = materialize(substitute_sector(reduced, spec.layout, sector), 3)
        b = materialize(build_standard_star(sector_effective_model(spec, sector)), 3)
        assert np.allclose(a, b, atol=1e-14)
    with pytest.raises(ValueError):
        substitute_sector(build_chain_star(spec), spec.layout, all_up_sector(spec.layout))
