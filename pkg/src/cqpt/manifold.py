"""Complex Stiefel manifold machinery.

Points are tall matrices X (shape (k*d, d)) with orthonormal columns,
X^dag X = I. Tangent vectors V satisfy X^dag V + V^dag X = 0. Four
retractions are available: qr (first order), polar and cayley (second
order), and the exponential map of the embedded Euclidean metric.
"""

import numpy as np
from scipy.linalg import expm, solve

from .qla import RngStream

__all__ = [
    "random_stiefel",
    "stiefel_error",
    "check_stiefel",
    "project_to_tangent",
    "tangency_error",
    "retract",
    "cayley_update",
    "cayley_fixed_point",
    "exponential_map",
    "RETRACTION_METHODS",
]

RETRACTION_METHODS = ("qr", "polar", "cayley", "exponential")

# Orthonormality drift beyond this triggers a corrective QR pass.
_DRIFT_TOL = 1e-8


def random_stiefel(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    """Haar-random point: QR of a complex Gaussian with phase correction."""
    z = rng.complex_normal((rows, cols))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def stiefel_error(x: np.ndarray) -> float:
    return float(np.linalg.norm(x.conj().T @ x - np.eye(x.shape[1])))


def check_stiefel(x: np.ndarray, tol: float = 1e-10) -> None:
    err = stiefel_error(x)
    if err > tol:
        raise ValueError(f"not a Stiefel point: ||X^dag X - I|| = {err:.3e}")


def project_to_tangent(base: np.ndarray, euclid_grad: np.ndarray) -> np.ndarray:
    """Tangent projection grad -> grad - X Sym(X^dag grad)."""
    if euclid_grad.shape != base.shape:
        raise ValueError(f"shape mismatch: {euclid_grad.shape} vs {base.shape}")
    a = base.conj().T @ euclid_grad
    return euclid_grad - base @ ((a + a.conj().T) / 2)


def tangency_error(base: np.ndarray, v: np.ndarray) -> float:
    a = base.conj().T @ v
    return float(np.linalg.norm(a + a.conj().T))


def _qr_retract(base: np.ndarray, step: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(base + step)
    d = np.diagonal(r)
    # phase-fix R to a positive diagonal so a zero step returns the base
    return q * (d / np.abs(d))


def _polar_retract(base: np.ndarray, step: np.ndarray) -> np.ndarray:
    y = base + step
    u, s, vh = np.linalg.svd(y, full_matrices=False)
    return u @ vh


def _cayley_factors(base: np.ndarray, step: np.ndarray):
    """Low-rank factors of W = Vh X^dag - X Vh^dag with Vh = V - X X^dag V / 2.

    W = A B^dag where A = [Vh, X] and B = [X, -Vh], both (rows, 2*cols).
    """
    vh = step - 0.5 * base @ (base.conj().T @ step)
    a = np.hstack([vh, base])
    b = np.hstack([base, -vh])
    return a, b


def cayley_update(base: np.ndarray, tangent: np.ndarray, alpha: float) -> np.ndarray:
    """Cayley retraction (I - a/2 W)^-1 (I + a/2 W) X via a low-rank solve.

    W has rank at most 2*cols, so only a (2*cols x 2*cols) system is solved.
    """
    if alpha == 0.0:
        return base.copy()
    a, b = _cayley_factors(base, alpha * tangent)
    m = b.conj().T @ a  # 2p x 2p
    lhs = np.eye(m.shape[0]) - 0.5 * m
    rhs = b.conj().T @ base
    try:
        core = solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError("Cayley solve is singular; step too large") from exc
    return base + a @ core


def cayley_fixed_point(base: np.ndarray, tangent: np.ndarray, alpha: float,
                       iterations: int = 3) -> np.ndarray:
    """Fixed-point iteration Y <- X + a/2 W (X + Y) approximating the solve."""
    a, b = _cayley_factors(base, alpha * tangent)

    def w_apply(m):
        return a @ (b.conj().T @ m)

    y = base + w_apply(base)
    for _ in range(iterations):
        y = base + 0.5 * w_apply(base + y)
    return y


def exponential_map(base: np.ndarray, step: np.ndarray) -> np.ndarray:
    """Geodesic of the embedded Euclidean metric (closed-form for Stiefel)."""
    p = base.shape[1]
    a = base.conj().T @ step
    s = step.conj().T @ step
    m = np.block([[a, -s], [np.eye(p), a]])
    return np.hstack([base, step]) @ expm(m)[:, :p] @ expm(-a)


_RETRACTIONS = {
    "qr": _qr_retract,
    "polar": _polar_retract,
    "cayley": lambda base, step: cayley_update(base, step, 1.0),
    "exponential": exponential_map,
}


def retract(base: np.ndarray, step: np.ndarray, method: str = "cayley") -> np.ndarray:
    """Map a tangent step back onto the manifold.

    Re-orthonormalizes via QR if the result drifts beyond 1e-8.
    """
    if method not in _RETRACTIONS:
        raise ValueError(f"unknown retraction {method!r}; choose from {RETRACTION_METHODS}")
    if not np.any(step):
        return base.copy()
    out = _RETRACTIONS[method](base, step)
    if stiefel_error(out) > _DRIFT_TOL:
        q, r = np.linalg.qr(out)
        d = np.diagonal(r)
        out = q * (d / np.abs(d))
    return out
