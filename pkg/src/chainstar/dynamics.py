"""Exact propagation and the closed-form XX star solution.

Propagator convention: ``psi(t) = exp(-i H t) psi(0)`` with hbar = 1.

The closed form for the XX star started in ``|up_a>|->^N`` keeps one
excitation in play:

    alpha(t) = cos(w t) - i (D / w) sin(w t)
    beta_k(t) = -i (c g_k / w) sin(w t),   w^2 = sum_k (c g_k)^2 + D^2

``D`` is the detuning ``omega_0 - omega_a`` and ``c`` is the coupling
normalisation constant fixed by :func:`calibrate_convention` against exact
numerics (it comes out as 2 for the Hamiltonians built by ``models``).
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooLarge, InvalidSpec, NoConvergence, NoConventionMatches, NotResonant
from .models import ModelSpec, SpinLayout, build_chain_star, detuning
from .pauli import DENSE_LIMIT, PauliString, PauliSum, StateVector, materialize
from .reduction import subspace_indices

CALIBRATION_CANDIDATES = (0.5, 1.0, 2.0)
DEFAULT_SAMPLES = 400


# --- basis bookkeeping -------------------------------------------------------


def initial_index(layout: SpinLayout) -> int:
    """Register index of ``|up_a> |down>^{every chain spin}``."""
    return (1 << (layout.site_count - 1)) - 1


def initial_state(layout: SpinLayout) -> StateVector:
    return StateVector.basis(layout.site_count, initial_index(layout))


def _subspace_row(n: int, ancilla_down: bool, up_chains: Sequence[int] = ()) -> int:
    r = (1 << n) if ancilla_down else 0
    for k in range(n):
        if k not in up_chains:
            r |= 1 << (n - 1 - k)
    return r


def excitation_indices(layout: SpinLayout) -> tuple[int, np.ndarray]:
    """Register indices of the alpha ket and of each beta_k ket."""
    n = layout.n_chains
    sub = subspace_indices(layout)
    alpha = int(sub[_subspace_row(n, False)])
    betas = np.array([sub[_subspace_row(n, True, (k,))] for k in range(n)], dtype=np.int64)
    return alpha, betas


def ansatz_state(layout: SpinLayout, alpha: complex, beta: Sequence[complex]) -> StateVector:
    """``alpha |up_a, all down> + |down_a> sum_k beta_k |chain k up>`` on the register."""
    amps = np.zeros(1 << layout.site_count, dtype=np.complex128)
    ia, ib = excitation_indices(layout)
    amps[ia] = alpha
    amps[ib] = np.asarray(beta, dtype=np.complex128)
    return StateVector(amps)


def w_state(n: int) -> StateVector:
    """``|down_a> (1/sqrt N) sum_k |-..+_k..->`` on ``N + 1`` effective qubits."""
    if n < 1:
        raise ValueError("W state needs at least one chain")
    return w_chain_state(SpinLayout((1,) * n))


def w_chain_state(layout: SpinLayout) -> StateVector:
    n = layout.n_chains
    return ansatz_state(layout, 0.0, np.full(n, 1 / math.sqrt(n)))


def subspace_leakage(state: StateVector, layout: SpinLayout) -> float:
    """Norm of the part of ``state`` outside the aligned-chain subspace."""
    outside = np.ones(state.dim, dtype=bool)
    outside[subspace_indices(layout)] = False
    return float(np.linalg.norm(state.amplitudes[outside]))


# --- propagation -------------------------------------------------------------


def evolve_dense(
    hamiltonian, psi0: StateVector, times: Sequence[float], dense_limit: int = DENSE_LIMIT
) -> list[StateVector]:
    n = psi0.site_count
    if n > dense_limit:
        raise DimensionTooLarge(f"{n} sites exceeds the dense limit of {dense_limit}")
    h = hamiltonian if isinstance(hamiltonian, np.ndarray) else materialize(hamiltonian, n, dense_limit)
    energies, vecs = np.linalg.eigh(h)
    coeffs = vecs.conj().T @ psi0.amplitudes
    return [StateVector(vecs @ (np.exp(-1j * energies * t) * coeffs)) for t in times]


def _lanczos_expm(op: PauliSum, v: np.ndarray, dt: float, krylov_dim: int, tol: float):
    """One Krylov step of ``exp(-i H dt) v``.  Returns ``(w, error_estimate)``."""
    norm0 = np.linalg.norm(v)
    if norm0 == 0.0:
        return v.copy(), 0.0
    m = min(krylov_dim, op.dim)
    basis = np.zeros((m + 1, op.dim), dtype=np.complex128)
    diag = np.zeros(m)
    off = np.zeros(m)
    basis[0] = v / norm0
    err = math.inf
    for j in range(m):
        w = op.matvec(basis[j])
        diag[j] = np.real(np.vdot(basis[j], w))
        w -= diag[j] * basis[j]
        if j:
            w -= off[j - 1] * basis[j - 1]
        # full reorthogonalisation; the Krylov dimension is small
        w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        off[j] = np.linalg.norm(w)
        size = j + 1
        tri = np.diag(diag[:size]) + np.diag(off[: size - 1], 1) + np.diag(off[: size - 1], -1)
        evals, evecs = np.linalg.eigh(tri)
        small = evecs @ (np.exp(-1j * evals * dt) * evecs[0].conj())
        breakdown = off[j] <= 1e-13 * max(1.0, abs(diag[j]))
        err = 0.0 if breakdown else norm0 * off[j] * abs(small[-1])
        if breakdown or err <= tol:
            return norm0 * (small @ basis[:size]), err
        basis[j + 1] = w / off[j]
    return norm0 * (small @ basis[:size]), err


def evolve_matrix_free(
    hamiltonian,
    psi0: StateVector,
    times: Sequence[float],
    krylov_dim: int = 30,
    tol: float = 1e-10,
    max_splits: int = 24,
) -> list[StateVector]:
    """Stepwise Lanczos propagation; ``times`` must be non-decreasing from 0.

    Each interval is split in halves until the Lanczos error estimate falls
    below ``tol``; more than ``max_splits`` halvings raises ``NoConvergence``.
    """
    op = hamiltonian if isinstance(hamiltonian, PauliSum) else PauliSum(hamiltonian, psi0.site_count)
    v = psi0.amplitudes.copy()
    now = 0.0
    out = []

    def advance(vec, dt, depth):
        w, err = _lanczos_expm(op, vec, dt, krylov_dim, tol)
        if err <= tol:
            return w
        if depth >= max_splits:
            raise NoConvergence(f"Krylov error {err:.3e} above {tol:.1e} after {depth} step halvings")
        half = advance(vec, dt / 2, depth + 1)
        return advance(half, dt / 2, depth + 1)

    for t in times:
        if t < now:
            raise ValueError("times must be non-decreasing and start at or after 0")
        if t > now:
            v = advance(v, t - now, 0)
            now = t
        out.append(StateVector(v.copy()))
    return out


# --- traces ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    times: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray  # shape (len(times), N)
    source: str
    omega: float | None = None

    @property
    def n_chains(self) -> int:
        return self.beta.shape[1]

    @property
    def alpha_population(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def beta_population(self) -> np.ndarray:
        return np.abs(self.beta) ** 2

    def normalization_error(self) -> float:
        total = self.alpha_population + self.beta_population.sum(axis=1)
        return float(np.max(np.abs(total - 1.0)))

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=rtol, atol=rtol * max(1.0, abs(t))))
        if hits.size == 0:
            raise ValueError(f"trace does not sample t = {t!r}")
        return int(hits[0])

    def overlap(self, t: float) -> complex:
        """``<psi(0)|psi(t)>`` inside the single-excitation slice."""
        i = self.index_of(t)
        return complex(
            np.conj(self.alpha[0]) * self.alpha[i] + np.vdot(self.beta[0], self.beta[i])
        )

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = self.n_chains
        writer.writerow(["t", "abs_alpha_sq", *[f"abs_beta_{k + 1}_sq" for k in range(n)], "source"])
        pa, pb = self.alpha_population, self.beta_population
        for i, t in enumerate(self.times):
            writer.writerow([f"{t:.17g}", f"{pa[i]:.17g}", *[f"{x:.17g}" for x in pb[i]], self.source])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def trace_from_states(
    layout: SpinLayout, times: Sequence[float], states: Sequence[StateVector], omega: float | None = None
) -> EvolutionTrace:
    ia, ib = excitation_indices(layout)
    amps = np.array([s.amplitudes for s in states]) if states else np.zeros((0, 1))
    return EvolutionTrace(np.asarray(times, dtype=float), amps[:, ia], amps[:, ib], "numeric", omega)


# --- closed form -------------------------------------------------------------


@dataclass(frozen=True)
class RabiParams:
    omega: float
    delta: float
    gammas: tuple[float, ...]
    calibration: float = 1.0

    def __post_init__(self):
        expected = sum((self.calibration * g) ** 2 for g in self.gammas) + self.delta**2
        if abs(self.omega**2 - expected) > 1e-12 * max(1.0, expected):
            raise ValueError("omega^2 must equal sum((c*gamma)^2) + delta^2")

    @classmethod
    def build(cls, gammas: Sequence[float], delta: float = 0.0, calibration: float = 1.0) -> RabiParams:
        gammas = tuple(float(g) for g in gammas)
        omega = math.sqrt(sum((calibration * g) ** 2 for g in gammas) + delta**2)
        return cls(omega, float(delta), gammas, float(calibration))

    @classmethod
    def from_spec(cls, spec: ModelSpec, calibration: float) -> RabiParams:
        if spec.family != "XX":
            raise InvalidSpec("the closed-form solution covers the XX family only")
        return cls.build(spec.gamma_x, detuning(spec), calibration)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def peak_time(self) -> float:
        """First maximum of ``|beta|``, where ``alpha`` vanishes on resonance."""
        return math.pi / (2 * self.omega)


def xx_amplitudes(p: RabiParams, t):
    """``(alpha, beta)``; ``beta`` has a trailing axis of length N."""
    t = np.asarray(t, dtype=float)
    if p.omega == 0.0:
        alpha = np.ones_like(t, dtype=np.complex128)
        return alpha, np.zeros(t.shape + (len(p.gammas),), dtype=np.complex128)
    s, c = np.sin(p.omega * t), np.cos(p.omega * t)
    alpha = c - 1j * (p.delta / p.omega) * s
    g = np.asarray(p.gammas) * p.calibration
    beta = -1j * np.multiply.outer(s, g / p.omega)
    return alpha, beta


def analytic_trace(p: RabiParams, times: Sequence[float]) -> EvolutionTrace:
    times = np.asarray(times, dtype=float)
    alpha, beta = xx_amplitudes(p, times)
    return EvolutionTrace(times, alpha, beta.reshape(len(times), -1), "analytic", p.omega)


def default_times(omega: float, samples: int = DEFAULT_SAMPLES, periods: float = 1.0) -> np.ndarray:
    """``samples`` equal steps over ``periods`` periods, both ends included."""
    return np.linspace(0.0, periods * 2 * math.pi / omega, samples + 1)


def effective_star_spec(spec: ModelSpec) -> ModelSpec:
    """XX star with the same couplings and total chain fields, one spin per chain."""
    fields = [spec.chain_frequency(k) for k in range(spec.layout.n_chains)]
    return ModelSpec.xx((1,) * spec.layout.n_chains, spec.gamma_x, spec.omega_a, fields)


def require_sign_free(layout: SpinLayout) -> None:
    """XX dynamics map onto the XX star only when every (M_k - 1)/2 is even."""
    bad = [m for m in layout.chain_sizes if m % 2 == 0 or ((m - 1) // 2) % 2]
    if bad:
        raise InvalidSpec(f"chain sizes {bad} break the sign-free XX mapping; need M = 1 mod 4")


def calibrate_convention(
    spec: ModelSpec,
    candidates: Sequence[float] = CALIBRATION_CANDIDATES,
    samples: int = DEFAULT_SAMPLES,
    tol: float = 1e-8,
) -> float:
    """Pick the coupling normalisation that makes the closed form match numerics.

    Registers above the dense limit are calibrated on their effective star.
    """
    if spec.family != "XX":
        raise InvalidSpec("calibration needs an XX model")
    require_sign_free(spec.layout)
    if not any(spec.gamma_x):
        return 1.0
    if spec.layout.site_count > DENSE_LIMIT:
        spec = effective_star_spec(spec)
    delta = detuning(spec)
    slowest = RabiParams.build(spec.gamma_x, delta, min(candidates))
    times = default_times(slowest.omega, samples)
    states = evolve_dense(build_chain_star(spec), initial_state(spec.layout), times)
    numeric = trace_from_states(spec.layout, times, states)
    best, best_dev = None, math.inf
    for c in candidates:
        model = analytic_trace(RabiParams.build(spec.gamma_x, delta, c), times)
        dev = max(
            np.max(np.abs(model.alpha_population - numeric.alpha_population)),
            np.max(np.abs(model.beta_population - numeric.beta_population)),
        )
        if dev < best_dev:
            best, best_dev = c, dev
    if best_dev >= tol:
        raise NoConventionMatches(f"best candidate c={best} still deviates by {best_dev:.3e}")
    return float(best)


def evolve_spec(
    spec: ModelSpec, times: Sequence[float], method: str = "auto", **krylov
) -> list[StateVector]:
    """Propagate ``|up_a>|down...>`` under the chain-star Hamiltonian of ``spec``.

    ``method`` is ``"dense"``, ``"krylov"`` or ``"auto"`` (dense up to the
    dense limit).  Extra keywords go to :func:`evolve_matrix_free`.
    """
    h = build_chain_star(spec)
    psi0 = initial_state(spec.layout)
    if method == "auto":
        method = "dense" if spec.layout.site_count <= DENSE_LIMIT else "krylov"
    if method == "dense":
        return evolve_dense(h, psi0, times)
    if method == "krylov":
        return evolve_matrix_free(h, psi0, times, **krylov)
    raise ValueError(f"unknown method {method!r}")


def w_fidelity_peak(
    spec: ModelSpec, calibration: float | None = None, method: str = "auto", **krylov
) -> tuple[float, float]:
    """``(t*, |<W|psi(t*)>|)`` at the first population peak of a resonant XX model."""
    if spec.family != "XX":
        raise InvalidSpec("W-state generation needs an XX model")
    if len(set(spec.gamma_x)) != 1:
        raise InvalidSpec("W-state generation needs identical couplings")
    delta = detuning(spec)
    if abs(delta) > 1e-12:
        raise NotResonant(f"detuning {delta} != 0")
    c = calibrate_convention(spec) if calibration is None else calibration
    t_star = RabiParams.from_spec(spec, c).peak_time
    psi = evolve_spec(spec, [0.0, t_star], method, **krylov)[-1]
    return t_star, w_chain_state(spec.layout).fidelity(psi)


def revival_check(trace: EvolutionTrace, time: float | None = None) -> float:
    """``|<psi(0)|psi(T)>|`` with ``T = 2 pi / omega`` unless ``time`` is given."""
    if time is None:
        if trace.omega is None:
            raise ValueError("trace carries no omega; pass time explicitly")
        time = 2 * math.pi / trace.omega
    return abs(trace.overlap(time))


def locate_population_peak(trace: EvolutionTrace) -> float:
    """Time of the first sampled maximum of ``sum_k |beta_k|^2``, parabola-refined."""
    pop = trace.beta_population.sum(axis=1)
    i = 0
    while i + 1 < len(pop) and pop[i + 1] >= pop[i]:
        i += 1
    if 0 < i < len(pop) - 1:
        y0, y1, y2 = pop[i - 1], pop[i], pop[i + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0.0:
            shift = 0.5 * (y0 - y2) / denom
            h = trace.times[i + 1] - trace.times[i]
            return float(trace.times[i] + shift * h)
    return float(trace.times[i])


def hamiltonian_energy(strings: Sequence[PauliString], state: StateVector) -> float:
    return PauliSum(strings, state.site_count).expectation(state)
