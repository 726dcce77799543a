"""Dense complex linear algebra kernel.

Everything here works on plain ``numpy`` arrays of ``complex128``. The
vectorization convention is column-stacking (Fortran order), fixed so that
``vec(A @ B @ C) == kron(C.T, A) @ vec(B)`` holds exactly.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MAX_KRON_DIM",
    "I2",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "RngStream",
    "kron",
    "partial_trace",
    "vec",
    "devec",
    "reshuffle",
    "reshuffle_adjoint",
    "psd_sqrt",
    "pinv",
    "haar_unitary",
    "assert_density",
]

# Largest matrix dimension kron() is allowed to produce. 2**14 covers the
# Choi matrices of 5-qubit channels (4**5 = 1024) with ample headroom.
MAX_KRON_DIM = 1 << 14

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass
class RngStream:
    """Counter-based deterministic random stream.

    Identical ``(seed, counter)`` pairs produce identical draws on every
    platform: each draw instantiates a fresh Philox generator keyed by the
    pair and then bumps the counter.
    """

    seed: int
    counter: int = field(default=0)

    def _next_generator(self) -> np.random.Generator:
        gen = np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.counter], dtype=np.uint64))
        )
        self.counter += 1
        return gen

    def standard_normal(self, shape) -> np.ndarray:
        return self._next_generator().standard_normal(shape)

    def complex_normal(self, shape) -> np.ndarray:
        """Standard complex Gaussian: independent N(0, 1/2) real and imag parts."""
        gen = self._next_generator()
        return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)

    def substream(self, tag: int) -> "RngStream":
        """Derive an independent stream; distinct tags give disjoint streams."""
        derived = np.random.SeedSequence([int(self.seed), int(tag)])
        return RngStream(seed=int(derived.generate_state(1, np.uint64)[0]))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with a dimension guard against infeasible sizes."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > MAX_KRON_DIM or cols > MAX_KRON_DIM:
        raise ValueError(
            f"kron result {rows}x{cols} exceeds maximum dimension {MAX_KRON_DIM}"
        )
    return np.kron(a, b)


def partial_trace(m: np.ndarray, dims: tuple, which: str) -> np.ndarray:
    """Partial trace of a bipartite operator on H_X (x) H_Y.

    The X subsystem is the first Kronecker factor, i.e. the layout matches
    ``kron(x_part, y_part)``. ``which`` selects the traced-out subsystem.
    """
    dx, dy = dims
    m = np.asarray(m, dtype=complex)
    if m.shape != (dx * dy, dx * dy):
        raise ValueError(f"expected {(dx * dy, dx * dy)} matrix, got {m.shape}")
    t = m.reshape(dx, dy, dx, dy)
    if which == "x":
        return np.einsum("iaib->ab", t)
    if which == "y":
        return np.einsum("iaja->ij", t)
    raise ValueError(f"which must be 'x' or 'y', got {which!r}")


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def devec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.size != rows * cols:
        raise ValueError(f"cannot devec length {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def _split_square_dim(m: np.ndarray) -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    d = int(round(np.sqrt(m.shape[0])))
    if d * d != m.shape[0]:
        raise ValueError(f"matrix dimension {m.shape[0]} is not a perfect square")
    return d


def reshuffle(m: np.ndarray) -> np.ndarray:
    """Involution exchanging a Choi matrix and its transfer (super)matrix.

    With ``J = sum_ij |i><j| (x) E(|i><j|)`` the output ``S = reshuffle(J)``
    satisfies ``S @ vec(rho) == vec(E(rho))`` under column-stacking ``vec``,
    and ``reshuffle(reshuffle(m)) == m``.
    """
    m = np.asarray(m, dtype=complex)
    d = _split_square_dim(m)
    return m.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d)


def reshuffle_adjoint(m: np.ndarray) -> np.ndarray:
    """Adjoint of ``reshuffle`` under the trace pairing.

    Satisfies ``Tr[X @ reshuffle(Y)] == Tr[reshuffle_adjoint(X) @ Y]`` and is
    itself an involution.
    """
    m = np.asarray(m, dtype=complex)
    d = _split_square_dim(m)
    return m.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def psd_sqrt(m: np.ndarray, neg_tol: float = 1e-8) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in [-neg_tol, 0) are clipped to zero; anything below -neg_tol
    signals an invalid state and raises.
    """
    m = np.asarray(m, dtype=complex)
    w, u = np.linalg.eigh((m + m.conj().T) / 2)
    if w.min() < -neg_tol:
        raise ValueError(f"matrix is not PSD: min eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    root = (u * np.sqrt(w)) @ u.conj().T
    return (root + root.conj().T) / 2


def pinv(m: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``max(rows, cols) * s_max * 2.2e-16 * 64`` are
    treated as zero.
    """
    m = np.asarray(m, dtype=complex)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]), dtype=complex)
    cutoff = max(m.shape) * s[0] * 2.2e-16 * 64
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return vh.conj().T @ (inv[:, None] * u.conj().T)


def haar_unitary(dim: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed random unitary (QR of a complex Gaussian matrix).

    The Q columns are multiplied by the phases of the corresponding R
    diagonal entries, which makes the distribution exactly Haar.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    z = rng.complex_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def assert_density(rho: np.ndarray, tol: float = 1e-10) -> None:
    """Validate the density matrix invariants (Hermitian, PSD, unit trace)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    if np.linalg.norm(rho - rho.conj().T) > tol:
        raise ValueError("density matrix is not Hermitian")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if w.min() < -tol:
        raise ValueError(f"density matrix has eigenvalue {w.min():.3e} < -{tol}")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError(f"density matrix trace {np.trace(rho):.12f} != 1")
