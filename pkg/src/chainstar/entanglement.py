"""Concurrence between chains (as effective qubits) and between physical spins."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .dynamics import EvolutionTrace
from .errors import ImpossibleOutcome, IndexOutOfRange, NotAState, PathMismatch, SiteOutOfRange
from .models import SpinLayout
from .pauli import DensityMatrix, StateVector, partial_trace
from .reduction import subspace_indices

_YY = np.fliplr(np.diag([-1.0, 1.0, 1.0, -1.0])).astype(np.complex128)


def concurrence(rho: DensityMatrix | np.ndarray, atol: float = 1e-10) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    With ``rho = W W^dagger`` the numbers ``lambda_i`` (square roots of the
    eigenvalues of ``rho (Y x Y) rho* (Y x Y)``) are the singular values of
    ``W^dagger (Y x Y) W*``.  Taking them from an SVD keeps the small ones
    accurate to rounding instead of to its square root.
    """
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    if m.shape != (4, 4):
        raise NotAState(f"expected a 4x4 matrix, got {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > atol:
        raise NotAState("matrix is not Hermitian")
    if abs(np.trace(m) - 1.0) > 10 * atol:
        raise NotAState(f"trace {np.trace(m).real:.3e} is not 1")
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    if evals[0] < -atol:
        raise NotAState(f"negative eigenvalue {evals[0]:.3e}")
    w = evecs * np.sqrt(np.clip(evals, 0.0, None))
    lam = np.linalg.svd(w.conj().T @ _YY @ w.conj(), compute_uv=False)
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


@dataclass(frozen=True, eq=False)
class ConcurrenceReport:
    subsystem: tuple
    times: np.ndarray
    values: np.ndarray
    closed_form: np.ndarray | None = None

    @property
    def path_deviation(self) -> float:
        if self.closed_form is None:
            return 0.0
        return float(np.max(np.abs(self.values - self.closed_form), initial=0.0))

    def to_csv(self) -> str:
        lines = ["t,concurrence"]
        lines += [f"{t:.17g},{c:.17g}" for t, c in zip(self.times, self.values)]
        return "\n".join(lines) + "\n"


def _checked_clip(values: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    if values.size and (values.min() < -tol or values.max() > 1 + tol):
        raise ValueError("concurrence outside [0, 1] beyond tolerance")
    return np.clip(values, 0.0, 1.0)


def effective_state(trace: EvolutionTrace, i: int) -> StateVector:
    """State of the ``N + 1`` effective qubits at sample ``i`` of ``trace``."""
    n = trace.n_chains
    amps = np.zeros(1 << (n + 1), dtype=np.complex128)
    amps[(1 << n) - 1] = trace.alpha[i]
    for k in range(n):
        amps[(1 << (n + 1)) - 1 - (1 << (n - 1 - k))] = trace.beta[i, k]
    return StateVector(amps)


def effective_from_register(state: StateVector, layout: SpinLayout) -> StateVector:
    """Amplitudes of a full register state on the aligned-chain basis."""
    return StateVector(state.amplitudes[subspace_indices(layout)])


def chain_pair_concurrence(trace: EvolutionTrace, i: int, j: int, tol: float = 1e-9) -> ConcurrenceReport:
    """Concurrence of chains ``i`` and ``j`` (0-based) along a trace.

    Computed from the reduced state of the two effective qubits and checked
    against ``2 |beta_i| |beta_j|``; disagreement beyond ``tol`` raises.
    """
    n = trace.n_chains
    if i == j:
        raise ValueError("need two distinct chains")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"chains ({i}, {j}) outside 0..{n - 1}")
    closed = 2 * np.abs(trace.beta[:, i]) * np.abs(trace.beta[:, j])
    via_trace = np.array(
        [concurrence(partial_trace(effective_state(trace, t), (i + 1, j + 1))) for t in range(len(trace.times))]
    )
    report = ConcurrenceReport((i, j), trace.times, _checked_clip(via_trace), closed)
    if report.path_deviation > tol:
        raise PathMismatch(f"concurrence paths differ by {report.path_deviation:.3e}")
    return report


def spin_pair_concurrence(state: StateVector, site_a: int, site_b: int) -> float:
    """Concurrence of two physical sites of ``state``; the caller picks which."""
    n = state.site_count
    if site_a == site_b:
        raise ValueError("need two distinct sites")
    for s in (site_a, site_b):
        if not 0 <= s < n:
            raise SiteOutOfRange(f"site {s} outside a {n}-site register")
    return concurrence(partial_trace(state, (site_a, site_b)))


def max_spin_pair_concurrence(state: StateVector, sites: Iterable[int]) -> float:
    sites = list(sites)
    return max(
        (spin_pair_concurrence(state, a, b) for k, a in enumerate(sites) for b in sites[k + 1 :]),
        default=0.0,
    )


def ghz_postselect(state: StateVector, ancilla_outcome: int, min_probability: float = 1e-14):
    """Measure ``Z`` on the ancilla (site 0).

    Returns ``(probability, chains_state)``; the post-measurement state is
    given on the remaining sites, renormalised, with the ancilla removed.
    """
    if ancilla_outcome not in (1, -1):
        raise ValueError("ancilla outcome must be +1 or -1")
    half = state.dim // 2
    branch = state.amplitudes[:half] if ancilla_outcome == 1 else state.amplitudes[half:]
    prob = float(np.sum(np.abs(branch) ** 2))
    if prob < min_probability:
        raise ImpossibleOutcome(f"outcome {ancilla_outcome:+d} has probability {prob:.3e}")
    return prob, StateVector(branch / math.sqrt(prob))


def ghz_chain_state(layout: SpinLayout) -> StateVector:
    """``(|up>^M1 |down>^M2 + |down>^M1 |up>^M2) / sqrt 2`` on the chain spins only."""
    if layout.n_chains != 2:
        raise ValueError("the two-chain GHZ state needs exactly two chains")
    m1, m2 = layout.chain_sizes
    s = m1 + m2
    amps = np.zeros(1 << s, dtype=np.complex128)
    amps[(1 << m2) - 1] = 1 / math.sqrt(2)  # chain 1 up, chain 2 down
    amps[((1 << m1) - 1) << m2] = 1 / math.sqrt(2)
    return StateVector(amps)


def collective_z_distribution(state: StateVector, sites: Sequence[int]) -> dict[int, float]:
    """Outcome probabilities of ``sum_{s in sites} Z_s``."""
    n = state.site_count
    mask = 0
    for s in sites:
        if not 0 <= s < n:
            raise SiteOutOfRange(f"site {s} outside a {n}-site register")
        mask |= 1 << (n - 1 - s)
    idx = np.arange(state.dim, dtype=np.int64)
    totals = len(sites) - 2 * np.bitwise_count(idx & mask).astype(np.int64)
    probs = np.abs(state.amplitudes) ** 2
    out: dict[int, float] = {}
    for value in np.unique(totals):
        p = float(probs[totals == value].sum())
        if p > 1e-15:
            out[int(value)] = p
    return out
