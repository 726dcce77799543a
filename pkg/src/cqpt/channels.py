"""CPTP channel models: Kraus realizations, Choi matrices, noise schedules.

Channels are described declaratively by :class:`ChannelSpec` and realized as
explicit Kraus operator lists. Multi-qubit noise channels are tensor products
of independent per-qubit channels, except the ``depolarizing`` kind which is
the global map ``(1-p) rho + p I/2^N``.
"""

import io
from dataclasses import dataclass, field
from functools import reduce
from itertools import product

import numpy as np

from . import qla
from .qla import I2, SIGMA_X, SIGMA_Y, SIGMA_Z, kron, partial_trace, vec

__all__ = [
    "ChannelSpec",
    "NoiseSchedule",
    "gamma_at",
    "kraus_of",
    "apply_kraus",
    "apply_channel",
    "apply_inverse_unitary",
    "effective_inverse_unitary",
    "choi_of",
    "choi_from_kraus",
    "apply_choi",
    "choi_pinv",
    "spec_to_config",
    "spec_from_config",
]

_KINDS = ("unitary", "dephasing", "depolarizing", "depolarizing_local",
          "amplitude_damping", "tensor_composite")


@dataclass
class ChannelSpec:
    """Declarative description of a CPTP map.

    kind:
        ``unitary``             conjugation by ``unitary``
        ``dephasing``           per-qubit phase damping with strength ``gamma``
        ``depolarizing``        global N-qubit map (1-p) rho + p I/2^N
        ``depolarizing_local``  tensor product of per-qubit depolarizing maps
        ``amplitude_damping``   per-qubit relaxation with rate ``gamma``
        ``tensor_composite``    tensor product of single-qubit ``parts``
    """

    kind: str
    num_qubits: int
    unitary: np.ndarray | None = None
    gamma: float | None = None
    p: float | None = None
    parts: list | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        if self.kind == "unitary":
            u = np.asarray(self.unitary, dtype=complex)
            if u.shape != (self.dim, self.dim):
                raise ValueError(f"unitary must be {self.dim}x{self.dim}")
            if np.linalg.norm(u.conj().T @ u - np.eye(self.dim)) > 1e-10:
                raise ValueError("unitary payload is not unitary to 1e-10")
            self.unitary = u
        elif self.kind in ("dephasing", "amplitude_damping"):
            if self.gamma is None or not 0.0 <= self.gamma <= 1.0:
                raise ValueError("gamma must lie in [0, 1]")
        elif self.kind in ("depolarizing", "depolarizing_local"):
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError("p must lie in [0, 1]")
        elif self.kind == "tensor_composite":
            if not self.parts:
                raise ValueError("tensor_composite needs at least one part")
            if sum(part.num_qubits for part in self.parts) != self.num_qubits:
                raise ValueError("part qubit counts must sum to num_qubits")

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits


@dataclass
class NoiseSchedule:
    """Time dependence of the dephasing strength gamma(t).

    ``homogeneous``:   gamma(t) = 1 - exp(-2 beta t)    (Markovian)
    ``inhomogeneous``: gamma(t) = 1 - exp(-beta t^2)    (non-Markovian)
    """

    kind: str
    beta: float

    def __post_init__(self):
        if self.kind not in ("homogeneous", "inhomogeneous"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


def gamma_at(schedule: NoiseSchedule, t: float) -> float:
    if t < 0:
        raise ValueError("t must be >= 0")
    if schedule.kind == "homogeneous":
        return 1.0 - np.exp(-2.0 * schedule.beta * t)
    return 1.0 - np.exp(-schedule.beta * t * t)


def _tensor_all(kraus_lists) -> np.ndarray:
    """All tensor products of per-factor Kraus elements, as a (k, d, d) array."""
    combos = [reduce(kron, pick) for pick in product(*kraus_lists)]
    return np.array(combos)


def _dephasing_1q(gamma: float) -> list:
    a = (1.0 + np.sqrt(1.0 - gamma)) / 2.0
    b = (1.0 - np.sqrt(1.0 - gamma)) / 2.0
    ops = [np.sqrt(a) * I2]
    if b > 0.0:
        ops.append(np.sqrt(b) * SIGMA_Z)
    return ops


def _depolarizing_1q(p: float) -> list:
    ops = [np.sqrt(1.0 - 3.0 * p / 4.0) * I2]
    if p > 0.0:
        ops += [np.sqrt(p / 4.0) * s for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    return ops


def _damping_1q(gamma: float) -> list:
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    if gamma == 0.0:
        return [k0]
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return [k0, k1]


def _pauli_strings(n: int) -> list:
    singles = [I2, SIGMA_X, SIGMA_Y, SIGMA_Z]
    return [reduce(kron, pick) for pick in product(singles, repeat=n)]


def kraus_of(spec: ChannelSpec) -> np.ndarray:
    """Explicit Kraus realization as a (k, d, d) array."""
    n = spec.num_qubits
    if spec.kind == "unitary":
        return np.array([spec.unitary])
    if spec.kind == "dephasing":
        return _tensor_all([_dephasing_1q(spec.gamma)] * n)
    if spec.kind == "amplitude_damping":
        return _tensor_all([_damping_1q(spec.gamma)] * n)
    if spec.kind == "depolarizing_local":
        return _tensor_all([_depolarizing_1q(spec.p)] * n)
    if spec.kind == "depolarizing":
        # (1-p) rho + p I/d  ==  (1-p+p/d^2) rho + (p/d^2) sum_{P != I} P rho P
        d = spec.dim
        paulis = _pauli_strings(n)
        ops = [np.sqrt(1.0 - spec.p + spec.p / d**2) * paulis[0]]
        if spec.p > 0.0:
            ops += [np.sqrt(spec.p) / d * pauli for pauli in paulis[1:]]
        return np.array(ops)
    # tensor_composite
    return _tensor_all([kraus_of(part) for part in spec.parts])


def apply_kraus(kraus: np.ndarray, rho: np.ndarray) -> np.ndarray:
    kraus = np.asarray(kraus, dtype=complex)
    out = np.einsum("lab,bc,ldc->ad", kraus, rho, kraus.conj())
    return (out + out.conj().T) / 2


def apply_channel(spec: ChannelSpec, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (spec.dim, spec.dim):
        raise ValueError(f"state must be {spec.dim}x{spec.dim}, got {rho.shape}")
    return apply_kraus(kraus_of(spec), rho)


def apply_inverse_unitary(spec: ChannelSpec, rho: np.ndarray) -> np.ndarray:
    """Inverse of a unitary channel: rho -> U^dag rho U.

    Refuses non-unitary specs: their inverse maps are generally not CPTP.
    """
    if spec.kind != "unitary":
        raise ValueError(f"cannot invert non-unitary channel kind {spec.kind!r}")
    u = spec.unitary
    return u.conj().T @ rho @ u


def effective_inverse_unitary(spec: ChannelSpec, rho: np.ndarray,
                              epsilon: float) -> np.ndarray:
    """Linear-order effective inverse of (1-eps) U rho U^dag + eps I/d.

    Expanding the exact inverse to first order in eps gives
    ``(1+eps) U^dag rho U - (eps/d) I``; the residual against the true input
    is O(eps^2).
    """
    if spec.kind != "unitary":
        raise ValueError("effective inverse is defined for unitary channels")
    u = spec.unitary
    d = spec.dim
    return (1.0 + epsilon) * (u.conj().T @ rho @ u) - (epsilon / d) * np.eye(d)


def choi_from_kraus(kraus: np.ndarray) -> np.ndarray:
    """Choi matrix J = sum_l vec(K_l) vec(K_l)^dag (column-stacking vec).

    Equivalent to sum_{ij} |i><j| (x) E(|i><j|) with the input copy as the
    first Kronecker factor.
    """
    vm = np.array([vec(k) for k in np.asarray(kraus, dtype=complex)])
    j = vm.T @ vm.conj()
    return (j + j.conj().T) / 2


def choi_of(spec: ChannelSpec) -> np.ndarray:
    return choi_from_kraus(kraus_of(spec))


def apply_choi(j: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Channel application through the Choi matrix: Tr_X[(rho^T (x) I) J]."""
    j = np.asarray(j, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if j.shape != (d * d, d * d):
        raise ValueError(f"Choi matrix must be {d * d}x{d * d}, got {j.shape}")
    out = partial_trace(kron(rho.T, np.eye(d)) @ j, (d, d), "x")
    return (out + out.conj().T) / 2


def choi_pinv(j: np.ndarray) -> np.ndarray:
    """Choi matrix of the pseudoinverse map.

    The inverse of a channel acts on vectorized states through the
    pseudoinverse of the channel's transfer matrix, so the Choi matrix of the
    inverse map is ``reshuffle(pinv(reshuffle(J)))`` -- not ``pinv(J)``, since
    reshuffling and pseudoinversion do not commute. For an invertible channel
    ``apply_choi(choi_pinv(J), apply_choi(J, rho)) == rho``.
    """
    return qla.reshuffle(qla.pinv(qla.reshuffle(j)))


def spec_to_config(spec: ChannelSpec) -> str:
    """Serialize to flat key=value lines (noise channels only)."""
    if spec.kind in ("unitary", "tensor_composite"):
        raise ValueError(f"{spec.kind} channels have no flat-text form")
    buf = io.StringIO()
    buf.write(f"kind={spec.kind}\n")
    buf.write(f"qubits={spec.num_qubits}\n")
    if spec.gamma is not None:
        buf.write(f"gamma={spec.gamma:.17g}\n")
    if spec.p is not None:
        buf.write(f"p={spec.p:.17g}\n")
    return buf.getvalue()


def spec_from_config(text: str) -> ChannelSpec:
    """Parse key=value lines. Keys: kind, qubits, gamma, p, beta, t, schedule.

    When gamma is absent but beta and t are given, gamma is evaluated from
    the schedule (default: homogeneous).
    """
    fields: dict = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    if "kind" not in fields:
        raise ValueError("channel config is missing 'kind'")
    kind = fields["kind"]
    qubits = int(fields.get("qubits", 1))
    gamma = float(fields["gamma"]) if "gamma" in fields else None
    p = float(fields["p"]) if "p" in fields else None
    if gamma is None and "beta" in fields and "t" in fields:
        schedule = NoiseSchedule(fields.get("schedule", "homogeneous"),
                                 float(fields["beta"]))
        gamma = gamma_at(schedule, float(fields["t"]))
    return ChannelSpec(kind=kind, num_qubits=qubits, gamma=gamma, p=p)
