"""Pauli strings, state vectors and the dense / matrix-free kernels on them.

Bit convention: for an ``S``-site register, site ``s`` is bit ``S - 1 - s`` of
the basis index, so site 0 (the ancilla) is the most significant bit.  Spin up
is bit value 0 and spin down is bit value 1, i.e. ``Z|0> = +|0>``.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from numbers import Number

import numpy as np

from .errors import DimensionTooLarge, SiteOutOfRange, TooManySitesKept

DENSE_LIMIT = 12
KEEP_LIMIT = 10

AXES = ("X", "Y", "Z")

# single-site products a*b = phase * c  (c is None for the identity)
_PRODUCT = {
    ("X", "X"): (1, None),
    ("Y", "Y"): (1, None),
    ("Z", "Z"): (1, None),
    ("X", "Y"): (1j, "Z"),
    ("Y", "Z"): (1j, "X"),
    ("Z", "X"): (1j, "Y"),
    ("Y", "X"): (-1j, "Z"),
    ("Z", "Y"): (-1j, "X"),
    ("X", "Z"): (-1j, "Y"),
}


@dataclass(frozen=True)
class PauliString:
    """``coefficient * P_{s1} P_{s2} ...`` with factors kept sorted by site.

    ``factors`` is a tuple of ``(site, axis)`` pairs; an empty tuple is the
    identity.  Instances are immutable and hashable on both fields.
    """

    coefficient: complex = 1.0
    factors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        factors = tuple(sorted((int(s), str(a).upper()) for s, a in self.factors))
        sites = [s for s, _ in factors]
        if len(set(sites)) != len(sites):
            raise ValueError(f"repeated site in Pauli string factors: {factors}")
        for s, a in factors:
            if a not in AXES:
                raise ValueError(f"unknown Pauli axis {a!r}")
            if s < 0:
                raise SiteOutOfRange(f"negative site index {s}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @classmethod
    def single(cls, site: int, axis: str, coefficient: complex = 1.0) -> PauliString:
        return cls(coefficient, ((site, axis),))

    @classmethod
    def uniform(cls, sites: Iterable[int], axis: str, coefficient: complex = 1.0) -> PauliString:
        """The same axis on every site in ``sites``."""
        return cls(coefficient, tuple((s, axis) for s in sites))

    @classmethod
    def identity(cls, coefficient: complex = 1.0) -> PauliString:
        return cls(coefficient, ())

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.factors)

    @property
    def weight(self) -> int:
        return len(self.factors)

    def axis_at(self, site: int) -> str | None:
        for s, a in self.factors:
            if s == site:
                return a
        return None

    def scaled(self, c: complex) -> PauliString:
        return PauliString(self.coefficient * c, self.factors)

    def with_coefficient(self, c: complex) -> PauliString:
        return PauliString(c, self.factors)

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scaled(other)
        if not isinstance(other, PauliString):
            return NotImplemented
        coef = self.coefficient * other.coefficient
        left = dict(self.factors)
        right = dict(other.factors)
        out = {}
        for site in sorted(set(left) | set(right)):
            a, b = left.get(site), right.get(site)
            if a is None or b is None:
                out[site] = a or b
                continue
            phase, c = _PRODUCT[(a, b)]
            coef *= phase
            if c is not None:
                out[site] = c
        return PauliString(coef, tuple(out.items()))

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scaled(other)
        return NotImplemented

    def __neg__(self):
        return self.scaled(-1)

    def commutes_with(self, other: PauliString) -> bool:
        mine = dict(self.factors)
        clashes = sum(1 for s, a in other.factors if s in mine and mine[s] != a)
        return clashes % 2 == 0

    def label(self, site_count: int) -> str:
        chars = ["I"] * site_count
        for s, a in self.factors:
            chars[s] = a
        return "".join(chars)

    def masks(self, site_count: int) -> tuple[int, int, int]:
        """``(flip_mask, sign_mask, y_count)`` for the bitwise kernel."""
        flip = sign = 0
        ny = 0
        for s, a in self.factors:
            if s >= site_count:
                raise SiteOutOfRange(f"site {s} outside a {site_count}-site register")
            bit = 1 << (site_count - 1 - s)
            if a in ("X", "Y"):
                flip |= bit
            if a in ("Y", "Z"):
                sign |= bit
            if a == "Y":
                ny += 1
        return flip, sign, ny

    def __repr__(self):
        body = " ".join(f"{a}{s}" for s, a in self.factors) or "I"
        return f"PauliString({self.coefficient:g} * {body})"


def simplify(strings: Iterable[PauliString], atol: float = 0.0) -> list[PauliString]:
    """Merge strings with identical factors; drop those with ``|c| <= atol``.

    Output order is the first-appearance order of each factor pattern.
    """
    acc: dict[tuple, complex] = {}
    for ps in strings:
        acc[ps.factors] = acc.get(ps.factors, 0.0) + ps.coefficient
    return [PauliString(c, f) for f, c in acc.items() if abs(c) > atol]


def _row_diagonal(ps: PauliString, site_count: int, idx: np.ndarray) -> np.ndarray:
    _, sign, ny = ps.masks(site_count)
    parity = np.bitwise_count(idx & sign) & 1
    return ps.coefficient * (-1j) ** ny * (1 - 2 * parity.astype(np.float64))


def _as_strings(strings) -> list[PauliString]:
    if isinstance(strings, PauliString):
        return [strings]
    return list(strings)


def materialize(strings, site_count: int, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense ``2^S x 2^S`` matrix of a sum of Pauli strings."""
    if site_count > dense_limit:
        raise DimensionTooLarge(f"{site_count} sites exceeds the dense limit of {dense_limit}")
    dim = 1 << site_count
    idx = np.arange(dim, dtype=np.int64)
    out = np.zeros((dim, dim), dtype=np.complex128)
    for ps in _as_strings(strings):
        flip, _, _ = ps.masks(site_count)
        out[idx, idx ^ flip] += _row_diagonal(ps, site_count, idx)
    return out


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the ``2^S`` computational basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        n = amps.size
        if n == 0 or n & (n - 1):
            raise ValueError(f"amplitude vector length {n} is not a power of two")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def site_count(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, site_count: int, index: int) -> StateVector:
        amps = np.zeros(1 << site_count, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> StateVector:
        """Basis state from per-site bits (0 = up, 1 = down), site 0 first."""
        index = 0
        for b in bits:
            index = (index << 1) | int(b)
        return cls.basis(len(bits), index)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> StateVector:
        return StateVector(self.amplitudes / self.norm())

    def inner(self, other: StateVector) -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: StateVector) -> float:
        """``|<self|other>|`` (amplitude overlap, not squared)."""
        return abs(self.inner(other))

    def kron(self, other: StateVector) -> StateVector:
        return StateVector(np.kron(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Reduced state over ``sites`` (ascending), basis ordered like a register."""

    entries: np.ndarray
    sites: tuple[int, ...]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


def apply_string(ps: PauliString, v: StateVector) -> StateVector:
    """``ps |v>`` by bit flips and phases, without building a matrix."""
    n = v.site_count
    flip, _, _ = ps.masks(n)
    idx = np.arange(v.dim, dtype=np.int64)
    return StateVector(_row_diagonal(ps, n, idx) * v.amplitudes[idx ^ flip])


class PauliSum:
    """Matrix-free Hermitian-or-not operator built from Pauli strings.

    Strings that share a flip mask are folded into one diagonal vector, so a
    product ``H|v>`` costs one gather per distinct mask.
    """

    def __init__(self, strings, site_count: int):
        self.strings = _as_strings(strings)
        self.site_count = site_count
        self.dim = 1 << site_count
        idx = np.arange(self.dim, dtype=np.int64)
        groups: dict[int, np.ndarray] = {}
        for ps in self.strings:
            flip, _, _ = ps.masks(site_count)
            diag = _row_diagonal(ps, site_count, idx)
            if flip in groups:
                groups[flip] += diag
            else:
                groups[flip] = diag.astype(np.complex128)
        self._idx = idx
        # fixed order keeps floating-point sums reproducible
        self._groups = sorted(groups.items())

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.complex128)
        for flip, diag in self._groups:
            if flip == 0:
                out += diag * v
            else:
                out += diag * v[self._idx ^ flip]
        return out

    def apply(self, v: StateVector) -> StateVector:
        return StateVector(self.matvec(v.amplitudes))

    def expectation(self, v: np.ndarray | StateVector) -> float:
        amps = v.amplitudes if isinstance(v, StateVector) else v
        return float(np.real(np.vdot(amps, self.matvec(amps))))

    def to_dense(self, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
        return materialize(self.strings, self.site_count, dense_limit)


def partial_trace(v: StateVector, keep: Iterable[int], keep_limit: int = KEEP_LIMIT) -> DensityMatrix:
    """Reduced density matrix of ``|v><v|`` on ``keep`` (ascending site order)."""
    keep = sorted(set(int(s) for s in keep))
    n = v.site_count
    if not keep:
        raise ValueError("keep must name at least one site")
    if len(keep) > keep_limit:
        raise TooManySitesKept(f"{len(keep)} sites kept, limit is {keep_limit}")
    for s in keep:
        if not 0 <= s < n:
            raise SiteOutOfRange(f"site {s} outside a {n}-site register")
    rest = [s for s in range(n) if s not in keep]
    psi = v.amplitudes.reshape((2,) * n).transpose(keep + rest)
    psi = psi.reshape(1 << len(keep), -1)
    rho = psi @ psi.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, tuple(keep))
