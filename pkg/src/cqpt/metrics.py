"""State-comparison metrics used by every benchmark."""

from dataclasses import dataclass

import numpy as np

from .qla import SIGMA_X, kron, psd_sqrt

__all__ = ["MetricRecord", "infidelity", "expect_sigma_x_first"]


@dataclass
class MetricRecord:
    label: str
    value: float
    num_qubits: int | None = None
    channel_kind: str | None = None
    parameter: float | None = None
    time: float | None = None


def infidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """1 - Tr(sqrt(sqrt(rho) sigma sqrt(rho))).

    Note this is one minus the square-root fidelity, not one minus the
    squared fidelity; all reported numbers follow this convention.
    """
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch: {rho.shape} vs {sigma.shape}")
    root = psd_sqrt(rho)
    inner = root @ sigma @ root
    value = 1.0 - np.trace(psd_sqrt(inner)).real
    return float(np.clip(value, 0.0, 1.0))


def expect_sigma_x_first(rho: np.ndarray) -> float:
    """<sigma_x (x) I> of a 2-qubit state."""
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 2-qubit (4x4) state, got {rho.shape}")
    obs = kron(SIGMA_X, np.eye(2))
    return float(np.trace(obs @ rho).real)
