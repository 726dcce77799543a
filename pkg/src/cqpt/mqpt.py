"""Measurement-based QPT baseline with exact resource accounting.

The baseline compares full POVM statistics of the target channel output and
the trainable-Kraus output over the whole dataset, so each cost evaluation
performs n * p = 6^N * 6^N trace evaluations. Counters are exact (no
sampling) and back the scaling comparison against the compilation route.
"""

import time
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import channels, manifold, qla
from .channels import ChannelSpec
from .qla import RngStream, kron
from .tomography import (TrainerConfig, TrainingTrace, finite_difference_grad,
                         kraus_to_stack, make_dataset, riemannian_descent,
                         stack_to_kraus)

__all__ = ["ResourceLedger", "povm_set", "cost_mqpt", "grad_mqpt", "train_mqpt",
           "cqpt_evaluations_per_iteration", "stored_trainable_entries"]


@dataclass
class ResourceLedger:
    evaluations: int = 0
    stored_entries: int = 0
    elapsed_ms: float = 0.0
    cost_calls: int = 0

    def merge(self, other: "ResourceLedger") -> None:
        self.evaluations += other.evaluations
        self.stored_entries = max(self.stored_entries, other.stored_entries)
        self.elapsed_ms += other.elapsed_ms
        self.cost_calls += other.cost_calls


_KET = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "+i": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "-i": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}


def povm_set(num_qubits: int) -> np.ndarray:
    """All 6^N tensor products of the single-qubit Pauli eigenprojectors."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    singles = [np.outer(k, k.conj()) for k in _KET.values()]
    elements = [singles]
    out = singles
    for _ in range(num_qubits - 1):
        out = [kron(a, b) for a in out for b in singles]
    return np.array(out)


def _measured_traces(povm: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Real matrix t[i, j] = Tr[M_j rho_i]."""
    return np.einsum("jab,iba->ij", povm, states).real


def _kraus_states(stack: np.ndarray, dim: int, data: np.ndarray) -> np.ndarray:
    kraus = stack_to_kraus(np.asarray(stack, dtype=complex), dim)
    w = data[:, :, 0]
    kw = np.einsum("lab,ib->ila", kraus, w)  # K_l w_i
    return np.einsum("ila,ilb->iab", kw, kw.conj())


def cost_mqpt(stack: np.ndarray, target: ChannelSpec, data: np.ndarray,
              povm: np.ndarray):
    """Eq.-style double sum of squared trace differences, plus its ledger."""
    d = target.dim
    n = data.shape[0]
    p = povm.shape[0]
    w = data[:, :, 0]
    target_states = np.array([channels.apply_channel(target, np.outer(wi, wi.conj()))
                              for wi in w])
    model_states = _kraus_states(stack, d, data)
    diffs = _measured_traces(povm, target_states) - _measured_traces(povm, model_states)
    ledger = ResourceLedger(
        evaluations=n * p,
        stored_entries=stored_trainable_entries(stack) + n * p,
        cost_calls=1,
    )
    return float(np.sum(diffs ** 2)), ledger


def grad_mqpt(stack: np.ndarray, target: ChannelSpec, data: np.ndarray,
              povm: np.ndarray) -> np.ndarray:
    """Euclidean gradient of cost_mqpt, convention dC = Re Tr(G^dag dK)."""
    d = target.dim
    stack = np.asarray(stack, dtype=complex)
    kraus = stack_to_kraus(stack, d)
    w = data[:, :, 0]
    target_states = np.array([channels.apply_channel(target, np.outer(wi, wi.conj()))
                              for wi in w])
    model_states = _kraus_states(stack, d, data)
    diffs = _measured_traces(povm, target_states) - _measured_traces(povm, model_states)
    # d/dK of -sum_ij t_ij Tr[M_j K_l rho_i K_l^dag]:
    # G_l = -4 sum_ij t_ij M_j K_l rho_i
    weighted_m = np.einsum("ij,jab->iab", diffs, povm)
    kw = np.einsum("lab,ib->ila", kraus, w)
    grad_blocks = -4.0 * np.einsum("iab,ilb,ic->lac", weighted_m, kw, w.conj())
    return kraus_to_stack(grad_blocks)


def stored_trainable_entries(stack: np.ndarray) -> int:
    """Complex scalars held by the trainable Kraus stack (k * 4^N)."""
    return int(np.prod(stack.shape))


def cqpt_evaluations_per_iteration(num_qubits: int) -> int:
    """Single-shot route: one measurement per dataset state, 6^N total."""
    return 6 ** num_qubits


def train_mqpt(target: ChannelSpec, config: TrainerConfig, rng: RngStream):
    """Same Riemannian descent as the compilation route, with the POVM cost.

    Returns (trace, ledger); the ledger accumulates exact per-call counts.
    """
    d = target.dim
    k = config.kraus_terms or d
    data = make_dataset(target.num_qubits, rng=rng.substream(1))
    init = manifold.random_stiefel(k * d, d, rng.substream(2))
    povm = povm_set(target.num_qubits)
    ledger = ResourceLedger()

    def cost_fn(stack):
        value, call_ledger = cost_mqpt(stack, target, data, povm)
        ledger.merge(call_ledger)
        return value

    if config.gradient_mode == "analytic":
        def grad_fn(stack):
            return grad_mqpt(stack, target, data, povm)
    else:
        def grad_fn(stack):
            return finite_difference_grad(cost_fn, stack)

    start = time.perf_counter()
    trace = riemannian_descent(cost_fn, grad_fn, init, config)
    ledger.elapsed_ms = (time.perf_counter() - start) * 1e3
    return trace, ledger
