"""Chain-star and standard star Hamiltonians as lists of Pauli strings.

Units: hbar = 1, so every coupling and field is an angular frequency.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec, NonUniformFields
from .pauli import PauliString

FAMILIES = ("X", "XY", "XYZ", "XX")
FAMILY_AXES = {"X": ("X",), "XY": ("X", "Y"), "XX": ("X", "Y"), "XYZ": ("X", "Y", "Z")}


@dataclass(frozen=True)
class SpinLayout:
    """Ancilla on site 0 followed by the chains, one contiguous block each.

    Chains and positions are 0-based in the API: chain ``k`` position ``j``
    lives on site ``1 + sum(chain_sizes[:k]) + j``.
    """

    chain_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.chain_sizes)
        if not sizes:
            raise InvalidSpec("at least one chain is required")
        if any(m < 1 for m in sizes):
            raise InvalidSpec(f"chain sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "chain_sizes", sizes)

    @property
    def n_chains(self) -> int:
        return len(self.chain_sizes)

    @property
    def site_count(self) -> int:
        return 1 + sum(self.chain_sizes)

    def offset(self, k: int) -> int:
        return 1 + sum(self.chain_sizes[:k])

    def site(self, k: int, j: int) -> int:
        if not 0 <= j < self.chain_sizes[k]:
            raise IndexError(f"position {j} outside chain {k} of size {self.chain_sizes[k]}")
        return self.offset(k) + j

    def chain_sites(self, k: int) -> range:
        start = self.offset(k)
        return range(start, start + self.chain_sizes[k])

    def star(self) -> SpinLayout:
        """Layout of the effective star: every chain collapsed to one qubit."""
        return SpinLayout((1,) * self.n_chains)


def _per_chain(values, n: int, name: str) -> tuple:
    if np.isscalar(values):
        return (float(values),) * n
    values = tuple(values)
    if len(values) != n:
        raise InvalidSpec(f"{name} has {len(values)} entries for {n} chains")
    return values


@dataclass(frozen=True)
class ModelSpec:
    """Declarative chain-star model.

    ``chain_field[k]`` is either one frequency applied to every spin of chain
    ``k`` or a per-spin sequence of length ``M_k``.  For a uniform field
    ``omega_0`` spread over the chain set ``chain_field[k] = omega_0 / M_k``.
    """

    family: str
    layout: SpinLayout
    omega_a: float = 0.0
    gamma_x: tuple[float, ...] = ()
    gamma_y: tuple[float, ...] = ()
    gamma_z: tuple[float, ...] = ()
    chain_field: tuple = ()

    def __post_init__(self):
        fam = str(self.family).upper()
        if fam not in FAMILIES:
            raise InvalidSpec(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        layout = self.layout if isinstance(self.layout, SpinLayout) else SpinLayout(tuple(self.layout))
        n = layout.n_chains

        def coerce(vals, name):
            if isinstance(vals, Sequence) and len(vals) == 0:
                return (0.0,) * n
            return tuple(float(v) for v in _per_chain(vals, n, name))

        gx = coerce(self.gamma_x, "gamma_x")
        gy = coerce(self.gamma_y, "gamma_y")
        gz = coerce(self.gamma_z, "gamma_z")
        if isinstance(self.chain_field, Sequence) and len(self.chain_field) == 0:
            cf: tuple = (0.0,) * n
        else:
            cf = _per_chain(self.chain_field, n, "chain_field")
        fields = []
        for k, entry in enumerate(cf):
            if np.isscalar(entry):
                fields.append(float(entry))
            else:
                entry = tuple(float(w) for w in entry)
                if len(entry) != layout.chain_sizes[k]:
                    raise InvalidSpec(
                        f"chain_field[{k}] has {len(entry)} per-spin values for a chain of {layout.chain_sizes[k]}"
                    )
                fields.append(entry)

        if fam == "X" and (any(gy) or any(gz)):
            raise InvalidSpec("X family admits only gamma_x")
        if fam in ("XY", "XX") and any(gz):
            raise InvalidSpec(f"{fam} family requires gamma_z = 0")
        if fam == "XX" and gx != gy:
            raise InvalidSpec("XX family requires gamma_x == gamma_y on every chain")
        if fam != "X":
            even = [m for m in layout.chain_sizes if m % 2 == 0]
            if even:
                raise InvalidSpec(f"{fam} family needs odd chain sizes, got {layout.chain_sizes}")

        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "omega_a", float(self.omega_a))
        object.__setattr__(self, "gamma_x", gx)
        object.__setattr__(self, "gamma_y", gy)
        object.__setattr__(self, "gamma_z", gz)
        object.__setattr__(self, "chain_field", tuple(fields))

    @classmethod
    def xx(cls, chain_sizes, gamma, omega_a: float = 0.0, chain_field=0.0) -> ModelSpec:
        layout = SpinLayout(tuple(chain_sizes))
        g = _per_chain(gamma, layout.n_chains, "gamma")
        return cls("XX", layout, omega_a, g, g, (), chain_field)

    @property
    def axes(self) -> tuple[str, ...]:
        return FAMILY_AXES[self.family]

    def gamma(self, axis: str) -> tuple[float, ...]:
        return {"X": self.gamma_x, "Y": self.gamma_y, "Z": self.gamma_z}[axis]

    def spin_fields(self, k: int) -> tuple[float, ...]:
        entry = self.chain_field[k]
        if isinstance(entry, tuple):
            return entry
        return (entry,) * self.layout.chain_sizes[k]

    def chain_frequency(self, k: int) -> float:
        """Total field of chain ``k``, i.e. its effective frequency when all spins align."""
        return float(sum(self.spin_fields(k)))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "chain_sizes": list(self.layout.chain_sizes),
            "omega_a": self.omega_a,
            "gamma_x": list(self.gamma_x),
            "gamma_y": list(self.gamma_y),
            "gamma_z": list(self.gamma_z),
            "chain_field": [list(f) if isinstance(f, tuple) else f for f in self.chain_field],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ModelSpec:
        known = {"family", "chain_sizes", "omega_a", "gamma_x", "gamma_y", "gamma_z", "chain_field"}
        unknown = set(doc) - known
        if unknown:
            raise InvalidSpec(f"unknown model keys: {sorted(unknown)}")
        for key in ("family", "chain_sizes"):
            if key not in doc:
                raise InvalidSpec(f"model is missing {key!r}")
        gamma_y = doc.get("gamma_y")
        if gamma_y is None and str(doc["family"]).upper() == "XX":
            gamma_y = doc.get("gamma_x", ())
        return cls(
            family=doc["family"],
            layout=SpinLayout(tuple(doc["chain_sizes"])),
            omega_a=doc.get("omega_a", 0.0),
            gamma_x=doc.get("gamma_x", ()),
            gamma_y=gamma_y if gamma_y is not None else (),
            gamma_z=doc.get("gamma_z", ()),
            chain_field=doc.get("chain_field", ()),
        )


def load_model_spec(path: str | Path) -> ModelSpec:
    with open(path) as fh:
        return ModelSpec.from_dict(json.load(fh))


@dataclass(frozen=True)
class EffectiveStarParams:
    """Couplings of a standard star: ancilla on site 0, chain qubit ``k`` on site ``k + 1``."""

    omega_a: float
    g_x: tuple[float, ...]
    g_y: tuple[float, ...]
    g_z: tuple[float, ...]
    f: tuple[float, ...]
    sector: tuple[tuple[int, ...], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        n = len(self.g_x)
        for name in ("g_y", "g_z", "f"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {n}")

    @property
    def n_chains(self) -> int:
        return len(self.g_x)


def build_chain_star(spec: ModelSpec) -> list[PauliString]:
    """Full chain-star Hamiltonian.

    Terms, in order: the ancilla Zeeman term, then for each chain one N-wise
    string per active axis, then the nonzero per-spin chain fields.
    """
    layout = spec.layout
    terms = [PauliString.single(0, "Z", spec.omega_a)]
    for k in range(layout.n_chains):
        sites = (0, *layout.chain_sites(k))
        for axis in spec.axes:
            terms.append(PauliString.uniform(sites, axis, spec.gamma(axis)[k]))
    for k in range(layout.n_chains):
        for site, w in zip(layout.chain_sites(k), spec.spin_fields(k)):
            if w != 0.0:
                terms.append(PauliString.single(site, "Z", w))
    return terms


def build_standard_star(p: EffectiveStarParams) -> list[PauliString]:
    terms = [PauliString.single(0, "Z", p.omega_a)]
    for k in range(p.n_chains):
        for axis, g in (("X", p.g_x[k]), ("Y", p.g_y[k]), ("Z", p.g_z[k])):
            if g != 0.0:
                terms.append(PauliString.uniform((0, k + 1), axis, g))
    for k in range(p.n_chains):
        if p.f[k] != 0.0:
            terms.append(PauliString.single(k + 1, "Z", p.f[k]))
    return terms


def detuning(spec: ModelSpec, rtol: float = 1e-12) -> float:
    """``omega_0 - omega_a`` where ``omega_0`` is the common total chain field."""
    freqs = [spec.chain_frequency(k) for k in range(spec.layout.n_chains)]
    scale = max(1.0, max(abs(f) for f in freqs))
    if max(freqs) - min(freqs) > rtol * scale:
        raise NonUniformFields(f"chains carry different total fields: {freqs}")
    return freqs[0] - spec.omega_a
