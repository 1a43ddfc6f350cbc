"""Symmetry-based reduction of N-wise chains to single effective qubits.

The elementary transform on a site pair ``(i, j)`` is

    T_ij = (1 + Z_i + X_j - Z_i X_j) / 2,

which is the identity when spin ``i`` is up and ``X_j`` when it is down, a
controlled flip.  It is Hermitian and unitary, and it maps Pauli strings to
signed Pauli strings, so every conjugation here is done exactly in string
form.  Chain ``k`` is reduced by the product ``T_{M-1,M} ... T_{2,3} T_{1,2}``
(sites counted from 1 inside the chain); after it, spins ``2..M`` only carry
``Z`` operators and their eigenvalues label the dynamically invariant sectors.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChainTooShort,
    EvenMForYZ,
    SectorCountTooLarge,
    ShapeMismatch,
    SiteOutOfRange,
)
from .models import EffectiveStarParams, ModelSpec, SpinLayout, build_chain_star, build_standard_star
from .pauli import PauliString, StateVector, materialize, simplify

SECTOR_CAP = 2**20

SectorLabel = tuple[tuple[int, ...], ...]


class TripletTransform(Sequence):
    """``T_ij`` as its four Pauli strings; ``control`` is ``i``, ``target`` is ``j``."""

    def __init__(self, control: int, target: int):
        if control == target:
            raise ValueError("transform needs two distinct sites")
        if control < 0 or target < 0:
            raise SiteOutOfRange(f"negative site in ({control}, {target})")
        self.control = control
        self.target = target
        self._terms = (
            PauliString.identity(0.5),
            PauliString.single(control, "Z", 0.5),
            PauliString.single(target, "X", 0.5),
            PauliString(-0.5, ((control, "Z"), (target, "X"))),
        )
        # Heisenberg images of single-site Paulis under T (T is self-inverse)
        c, t = control, target
        self._image = {
            (c, "X"): PauliString(1, ((c, "X"), (t, "X"))),
            (c, "Y"): PauliString(1, ((c, "Y"), (t, "X"))),
            (c, "Z"): PauliString.single(c, "Z"),
            (t, "X"): PauliString.single(t, "X"),
            (t, "Y"): PauliString(1, ((c, "Z"), (t, "Y"))),
            (t, "Z"): PauliString(1, ((c, "Z"), (t, "Z"))),
        }

    def __getitem__(self, i):
        return self._terms[i]

    def __len__(self):
        return 4

    def __repr__(self):
        return f"TripletTransform({self.control}, {self.target})"

    def conjugate_string(self, ps: PauliString) -> PauliString:
        """``T^dagger ps T`` for a single string."""
        out = PauliString.identity(ps.coefficient)
        for site, axis in ps.factors:
            image = self._image.get((site, axis))
            out = out * (image if image is not None else PauliString.single(site, axis))
        return out


def triplet_transform(i: int, j: int, site_count: int | None = None) -> TripletTransform:
    if site_count is not None and max(i, j) >= site_count:
        raise SiteOutOfRange(f"sites ({i}, {j}) outside a {site_count}-site register")
    return TripletTransform(i, j)


def chain_transform(layout: SpinLayout, k: int) -> list[TripletTransform]:
    """Ordered factors of the chain-``k`` reducing unitary.

    The list reads as an operator product, ``T = L[0] L[1] ... L[-1]``; for a
    three-spin chain that is ``[T_23, T_12]``.  :func:`conjugate` therefore
    applies ``L[0]`` first.  Each reduction step over a spin triplet uses two
    consecutive entries, so an odd chain needs ``(M-1)/2`` steps.
    """
    m = layout.chain_sizes[k]
    if m < 2:
        raise ChainTooShort(f"chain {k} has {m} spin(s); a transform needs at least 2")
    sites = list(layout.chain_sites(k))
    return [TripletTransform(sites[p], sites[p + 1]) for p in range(m - 2, -1, -1)]


def full_transform(layout: SpinLayout) -> list[TripletTransform]:
    """Chain transforms for every chain with two or more spins."""
    out: list[TripletTransform] = []
    for k, m in enumerate(layout.chain_sizes):
        if m >= 2:
            out.extend(chain_transform(layout, k))
    return out


def transform_matrix(transforms: Sequence[TripletTransform], site_count: int) -> np.ndarray:
    """Dense ``L[0] L[1] ... L[-1]``, for oracle checks only."""
    out = np.eye(1 << site_count, dtype=np.complex128)
    for t in transforms:
        out = out @ materialize(list(t), site_count)
    return out


def conjugate(strings: Iterable[PauliString], transforms: Sequence[TripletTransform]) -> list[PauliString]:
    """``T^dagger H T`` computed string by string."""
    out = list(strings)
    for t in transforms:
        out = [t.conjugate_string(ps) for ps in out]
    return simplify(out)


@dataclass(frozen=True)
class ReductionReport:
    """How the N-wise string along ``axis`` on an ``M``-spin chain reduces.

    The string becomes ``sign * prod(sigma_p for p in parity_sites) * axis_1``,
    with ``parity_sites`` 1-based positions inside the chain.
    """

    axis: str
    result_axis: str
    sign: int
    parity_sites: tuple[int, ...]
    chain: int | None = None


def reduce_chain_axis(axis: str, m: int, chain: int | None = None) -> ReductionReport:
    axis = axis.upper()
    if axis == "X":
        return ReductionReport("X", "X", 1, (), chain)
    if axis not in ("Y", "Z"):
        raise ValueError(f"unknown axis {axis!r}")
    if m % 2 == 0:
        raise EvenMForYZ(f"{axis} strings reduce to {axis} on the first spin only for odd M, got {m}")
    parity = tuple(range(3, m + 1, 2))
    sign = (-1) ** ((m - 1) // 2) if axis == "Y" else 1
    return ReductionReport(axis, axis, sign, parity, chain)


def reduce_field(m: int, omegas: Sequence[float], sector: Sequence[int]) -> float:
    """Coefficient of ``Z_1`` left by per-spin fields ``omegas`` in a sector.

    ``sector`` holds the eigenvalues of ``Z_2 .. Z_M`` in the reduced frame.
    """
    if len(omegas) != m or len(sector) != m - 1:
        raise ShapeMismatch(f"need {m} frequencies and {m - 1} sector values")
    total = float(omegas[0])
    running = 1
    for w, s in zip(omegas[1:], sector):
        running *= s
        total += running * w
    return total


def _parity_product(report: ReductionReport, signs: Sequence[int]) -> int:
    prod = 1
    for p in report.parity_sites:
        prod *= signs[p - 2]
    return prod


def sector_effective_model(spec: ModelSpec, sector: SectorLabel) -> EffectiveStarParams:
    layout = spec.layout
    if len(sector) != layout.n_chains or any(
        len(s) != m - 1 for s, m in zip(sector, layout.chain_sizes)
    ):
        raise ShapeMismatch(f"sector shape does not match chain sizes {layout.chain_sizes}")
    gx, gy, gz, f = [], [], [], []
    for k, (m, signs) in enumerate(zip(layout.chain_sizes, sector)):
        if any(s not in (1, -1) for s in signs):
            raise ShapeMismatch(f"sector values must be +1 or -1, got {signs}")
        gx.append(spec.gamma_x[k])
        if m % 2 == 1:
            ry = reduce_chain_axis("Y", m, k)
            rz = reduce_chain_axis("Z", m, k)
            gy.append(ry.sign * _parity_product(ry, signs) * spec.gamma_y[k])
            gz.append(rz.sign * _parity_product(rz, signs) * spec.gamma_z[k])
        else:
            # even chains only occur in the X family, where gamma_y = gamma_z = 0
            gy.append(0.0)
            gz.append(0.0)
        f.append(reduce_field(m, spec.spin_fields(k), signs))
    return EffectiveStarParams(
        spec.omega_a, tuple(gx), tuple(gy), tuple(gz), tuple(f), tuple(tuple(s) for s in sector)
    )


def sector_count(layout: SpinLayout) -> int:
    return 2 ** sum(m - 1 for m in layout.chain_sizes)


def enumerate_sectors(layout: SpinLayout, cap: int = SECTOR_CAP) -> list[SectorLabel]:
    """All sector labels, chains outermost, ``+1`` before ``-1`` at each position."""
    count = sector_count(layout)
    if count > cap:
        raise SectorCountTooLarge(f"{count} sectors exceeds the cap of {cap}")
    per_chain = [list(itertools.product((1, -1), repeat=m - 1)) for m in layout.chain_sizes]
    return [tuple(combo) for combo in itertools.product(*per_chain)]


def all_up_sector(layout: SpinLayout) -> SectorLabel:
    return tuple((1,) * (m - 1) for m in layout.chain_sizes)


def subspace_indices(layout: SpinLayout) -> np.ndarray:
    """Global basis indices of the aligned-chain subspace.

    Entry ``r`` is the register index of ``|s_a> (x)_k |c_k>^{M_k}`` where the
    bits of ``r`` read ``s_a c_1 ... c_N`` (most significant first, up = 0).
    """
    n, s = layout.n_chains, layout.site_count
    chain_masks = []
    for k in range(n):
        mask = 0
        for site in layout.chain_sites(k):
            mask |= 1 << (s - 1 - site)
        chain_masks.append(mask)
    out = np.empty(1 << (n + 1), dtype=np.int64)
    for r in range(1 << (n + 1)):
        idx = (1 << (s - 1)) if (r >> n) & 1 else 0
        for k in range(n):
            if (r >> (n - 1 - k)) & 1:
                idx |= chain_masks[k]
        out[r] = idx
    return out


def invariant_subspace_basis(layout: SpinLayout) -> list[StateVector]:
    s = layout.site_count
    return [StateVector.basis(s, int(i)) for i in subspace_indices(layout)]


def substitute_sector(
    strings: Iterable[PauliString], layout: SpinLayout, sector: SectorLabel
) -> list[PauliString]:
    """Replace the conserved ``Z`` operators of a reduced Hamiltonian by sector values.

    The result lives on the star layout: ancilla on 0, chain ``k`` on ``k + 1``.
    Raises ``ValueError`` if a non-first chain spin carries ``X`` or ``Y``.
    """
    where = {}
    for k in range(layout.n_chains):
        for j, site in enumerate(layout.chain_sites(k)):
            where[site] = (k, j)
    out = []
    for ps in strings:
        coef = ps.coefficient
        factors = []
        for site, axis in ps.factors:
            if site == 0:
                factors.append((0, axis))
                continue
            k, j = where[site]
            if j == 0:
                factors.append((k + 1, axis))
            elif axis == "Z":
                coef *= sector[k][j - 1]
            else:
                raise ValueError(f"{axis} on conserved site {site}; Hamiltonian is not reduced")
        out.append(PauliString(coef, tuple(factors)))
    return simplify(out)


def block_diagonality_residual(strings: Iterable[PauliString], layout: SpinLayout) -> float:
    """Total weight of strings that do not commute with every conserved ``Z``."""
    conserved = set()
    for k in range(layout.n_chains):
        conserved.update(list(layout.chain_sites(k))[1:])
    bad = 0.0
    for ps in strings:
        if any(site in conserved and axis != "Z" for site, axis in ps.factors):
            bad += abs(ps.coefficient)
    return bad


def reduced_hamiltonian(spec: ModelSpec) -> list[PauliString]:
    return conjugate(build_chain_star(spec), full_transform(spec.layout))


def sector_spectra(
    spec: ModelSpec,
    sector_model: Callable[[ModelSpec, SectorLabel], EffectiveStarParams] = sector_effective_model,
) -> np.ndarray:
    """Sorted union of the effective-star spectra over all sectors."""
    star = spec.layout.star().site_count
    eigs = []
    for sector in enumerate_sectors(spec.layout):
        h = materialize(build_standard_star(sector_model(spec, sector)), star)
        eigs.append(np.linalg.eigvalsh(h))
    return np.sort(np.concatenate(eigs))


def spectral_deviation(
    spec: ModelSpec,
    sector_model: Callable[[ModelSpec, SectorLabel], EffectiveStarParams] = sector_effective_model,
) -> float:
    """Max gap between the full spectrum and the union of sector spectra."""
    full = np.linalg.eigvalsh(materialize(build_chain_star(spec), spec.layout.site_count))
    union = sector_spectra(spec, sector_model)
    return float(np.max(np.abs(np.sort(full) - union)))


def restriction_deviation(
    spec: ModelSpec,
    sector_model: Callable[[ModelSpec, SectorLabel], EffectiveStarParams] = sector_effective_model,
) -> tuple[float, float]:
    """Compare ``P H P`` on the aligned-chain subspace with the all-up sector star.

    Returns ``(operator_deviation, leakage)``, where leakage is the largest
    entry of ``(1 - P) H P``.
    """
    layout = spec.layout
    h = materialize(build_chain_star(spec), layout.site_count)
    idx = subspace_indices(layout)
    block = h[np.ix_(idx, idx)]
    star = materialize(build_standard_star(sector_model(spec, all_up_sector(layout))), layout.star().site_count)
    outside = np.ones(h.shape[0], dtype=bool)
    outside[idx] = False
    leak = h[np.ix_(outside, idx)]
    return float(np.max(np.abs(block - star))), float(np.max(np.abs(leak), initial=0.0))
