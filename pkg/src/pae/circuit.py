"""Simulation of the parallel kick-back circuit and its parity measurements.

One circuit is: a GHZ state across ``P`` ancilla qubits, ``S`` sequential
applications of the phase shifter on every (ancilla, system) branch, then
per-ancilla X-basis readout classified by the parity of the number of 1s.

Two backends compute the even-parity probability:

* analytic -- works on the 4-dimensional ancilla (x) Grover-plane factor of a
  single branch and contracts the product structure of
  ``(tensor of branch-0 states + tensor of branch-1 states)/sqrt(2)``, so the
  cost is independent of ``P`` (complex powers); exact.
* statevector -- the full ``(n+1)P``-qubit state built from the explicit
  oracle, used to cross-validate the analytic backend at small sizes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core_model import (AmplitudeInstance, DomainError, build_explicit_oracle,
                         build_grover_unitary)
from .qsp import PhaseShifterSpec

STATEVECTOR_MAX_QUBITS = 22

_X_ANC = np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(2)).astype(complex)
_Y_ANC = np.kron(np.array([[0.0, -1.0j], [1.0j, 0.0]]), np.eye(2)).astype(complex)


class CapacityError(RuntimeError):
    """Raised when a statevector request exceeds the qubit guard."""


class MeasurementSetting(enum.Enum):
    """X-parity readout, optionally preceded by e^{i pi Z/4} on one ancilla."""

    PLUS = "plus"
    PLUS_I = "plus_i"


@dataclass(frozen=True)
class ParallelCircuit:
    """``P`` parallel branches of an ``S``-fold sequential shifter."""

    P: int
    spec: PhaseShifterSpec
    S: int
    instance: AmplitudeInstance

    @property
    def multiplier(self) -> float:
        return self.P * self.spec.T * self.S


@dataclass(frozen=True)
class BranchState:
    """Per-branch states for ancilla control values 0 and 1 (4-vectors)."""

    phi0: np.ndarray
    phi1: np.ndarray


def branch_states(circuit: ParallelCircuit) -> BranchState:
    """Apply the branch unitary ``S`` times to ``|j>_b (x) |0..0>_plane``."""
    v = circuit.spec.branch_unitary(circuit.instance.theta)
    vs = np.linalg.matrix_power(v, circuit.S)
    return BranchState(phi0=vs[:, 0].copy(), phi1=vs[:, 2].copy())


def _even_parity_probability(state: BranchState, P: int,
                             setting: MeasurementSetting) -> float:
    """Even-parity probability from per-branch 2-term contractions.

    With ``x_j = <phi_j|X(x)I|phi_j>`` and ``z = <phi_1|X(x)I|phi_0>`` the
    product over identical branches collapses to powers:
    ``p = 1/2 + (x_0^P + x_1^P)/4 + Re(z^P)/2``.  The extra rotation of the
    PLUS_I setting turns branch 0's ``X`` into ``Y``.
    """
    ph0, ph1 = state.phi0, state.phi1
    x0 = float(np.real(np.vdot(ph0, _X_ANC @ ph0)))
    x1 = float(np.real(np.vdot(ph1, _X_ANC @ ph1)))
    zx = complex(np.vdot(ph1, _X_ANC @ ph0))
    if setting is MeasurementSetting.PLUS:
        p = 0.5 + 0.25 * (x0 ** P + x1 ** P) + 0.5 * (zx ** P).real
    else:
        y0 = float(np.real(np.vdot(ph0, _Y_ANC @ ph0)))
        y1 = float(np.real(np.vdot(ph1, _Y_ANC @ ph1)))
        zy = complex(np.vdot(ph1, _Y_ANC @ ph0))
        p = (0.5 + 0.25 * (y0 * x0 ** (P - 1) + y1 * x1 ** (P - 1))
             + 0.5 * (zy * zx ** (P - 1)).real)
    return min(max(p, 0.0), 1.0)


def setting_probability(circuit: ParallelCircuit,
                        setting: MeasurementSetting) -> float:
    """Exact even-parity probability of the synthesized circuit."""
    return _even_parity_probability(branch_states(circuit), circuit.P, setting)


def ideal_setting_probability(multiplier: float, phi: float,
                              setting: MeasurementSetting) -> float:
    """Closed form with the exact shifter substituted:
    ``(1 + cos(M phi))/2`` for PLUS, ``(1 + sin(M phi))/2`` for PLUS_I."""
    if setting is MeasurementSetting.PLUS:
        return (1.0 + math.cos(multiplier * phi)) / 2.0
    return (1.0 + math.sin(multiplier * phi)) / 2.0


def sample_even_parity(probability: float, shots: int, seed) -> int:
    """Count of even-parity outcomes: one Bernoulli draw per shot.

    ``seed`` may be anything ``numpy.random.default_rng`` accepts, including
    an existing generator.  Shared by every backend so equal seeds give equal
    counts whenever the probabilities agree.
    """
    rng = np.random.default_rng(seed)
    return int(np.count_nonzero(rng.random(shots) < probability))


def sample_counts(circuit: ParallelCircuit, setting: MeasurementSetting,
                  shots: int, seed) -> int:
    """Sample the analytic backend's parity distribution."""
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    return sample_even_parity(setting_probability(circuit, setting), shots, seed)


def ghz_depth(P: int) -> int:
    """Entangling layers of the doubling ladder preparing the GHZ state."""
    if P < 1:
        raise DomainError(f"branch count must be >= 1, got {P}")
    return math.ceil(math.log2(P))


# ---------------------------------------------------------------------------
# Full statevector backend

def _apply_single(state: np.ndarray, gate: np.ndarray, qubit: int, nq: int) -> np.ndarray:
    t = state.reshape(2 ** qubit, 2, -1)
    return np.einsum("ab,ibj->iaj", gate, t).reshape(-1)

def _apply_block(state: np.ndarray, gate: np.ndarray, first: int, width: int,
                 nq: int) -> np.ndarray:
    t = state.reshape(2 ** first, 2 ** width, -1)
    return np.einsum("ab,ibj->iaj", gate, t).reshape(-1)

def _apply_cnot(state: np.ndarray, control: int, target: int, nq: int) -> np.ndarray:
    t = state.reshape([2] * nq).copy()
    idx0 = [slice(None)] * nq
    idx1 = [slice(None)] * nq
    idx0[control] = 1
    idx1[control] = 1
    idx0[target] = 0
    idx1[target] = 1
    a = t[tuple(idx0)].copy()
    t[tuple(idx0)] = t[tuple(idx1)]
    t[tuple(idx1)] = a
    return t.reshape(-1)


def _branch_unitary_full(circuit: ParallelCircuit, oracle_style: str,
                         oracle_seed) -> np.ndarray:
    """Shifter on (1 ancilla + n system) qubits from the explicit oracle."""
    inst = circuit.instance
    oracle = build_explicit_oracle(inst, style=oracle_style, seed=oracle_seed)
    q = build_grover_unitary(oracle)
    dim = 2 ** inst.n
    cq = np.eye(2 * dim, dtype=complex)
    cq[dim:, dim:] = q
    rz = np.kron(np.diag([np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4)]),
                 np.eye(dim))
    wq = cq @ rz
    wq_dag = wq.conj().T

    def rx(angle):
        ch, sh = np.cos(angle / 2), np.sin(angle / 2)
        return np.kron(np.array([[ch, -1j * sh], [-1j * sh, ch]]), np.eye(dim))

    xi = circuit.spec.angles.xi
    v = np.eye(2 * dim, dtype=complex)
    for l in range(0, circuit.spec.L, 2):
        odd = rx(xi[l] + np.pi) @ wq_dag @ rx(-(xi[l] + np.pi))
        even = rx(xi[l + 1]) @ wq @ rx(-xi[l + 1])
        v = v @ odd @ even
    return np.linalg.matrix_power(v, circuit.S)


def statevector_even_parity_probability(circuit: ParallelCircuit,
                                        setting: MeasurementSetting,
                                        oracle_style: str = "canonical",
                                        oracle_seed=None) -> float:
    """Even-parity probability from the full ``(n+1)P``-qubit state.

    Qubit order: branch by branch, each branch being (ancilla, n system
    qubits); the GHZ ladder entangles the ancillas in ``ceil(log2 P)`` layers.
    """
    P, n = circuit.P, circuit.instance.n
    nq = P * (n + 1)
    if nq > STATEVECTOR_MAX_QUBITS:
        raise CapacityError(
            f"{nq} qubits exceed the statevector guard of {STATEVECTOR_MAX_QUBITS}")
    hadamard = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    anc = [p * (n + 1) for p in range(P)]
    state = np.zeros(2 ** nq, dtype=complex)
    state[0] = 1.0
    state = _apply_single(state, hadamard.astype(complex), anc[0], nq)
    for layer in range(ghz_depth(P)):
        stride = 2 ** layer
        for i in range(stride):
            if i + stride < P:
                state = _apply_cnot(state, anc[i], anc[i + stride], nq)
    v = _branch_unitary_full(circuit, oracle_style, oracle_seed)
    for p in range(P):
        state = _apply_block(state, v, p * (n + 1), n + 1, nq)
    if setting is MeasurementSetting.PLUS_I:
        phase = np.diag([np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)])
        state = _apply_single(state, phase, anc[0], nq)
    for a in anc:
        state = _apply_single(state, hadamard.astype(complex), a, nq)
    probs = np.abs(state) ** 2
    idx = np.arange(2 ** nq)
    parity = np.zeros(2 ** nq, dtype=np.int64)
    for a in anc:
        parity ^= (idx >> (nq - 1 - a)) & 1
    return float(np.sum(probs[parity == 0]))


def statevector_run(circuit: ParallelCircuit, setting: MeasurementSetting,
                    shots: int, seed, oracle_style: str = "canonical",
                    oracle_seed=None) -> int:
    """Sample the statevector backend's parity distribution."""
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    p = statevector_even_parity_probability(circuit, setting, oracle_style,
                                            oracle_seed)
    return sample_even_parity(p, shots, seed)
