"""Small dense complex linear algebra for qubit (2x2) and two-qubit (4x4) matrices.

Every routine accepts a single matrix or a stack with shape ``(..., n, n)`` so
that sweeps and Monte-Carlo batches can be processed in one call.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "NumericalError",
    "ConvergenceError",
    "DensityMatrixError",
    "tensor",
    "dagger",
    "hermitian_eigensystem",
    "psd_sqrt",
    "singular_values",
    "partial_transpose",
    "partial_trace",
    "validate_density",
]

HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
SQRT_NEG_TOL = 1e-9
DENSITY_TOL = 1e-10


class NumericalError(ArithmeticError):
    """Base class for failures of the numerical kernel."""


class ConvergenceError(NumericalError):
    pass


class DensityMatrixError(NumericalError, ValueError):
    pass


def _as_square(m, allowed=(2, 4)) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    if a.shape[-1] not in allowed:
        raise ValueError(f"unsupported dimension {a.shape[-1]}; expected one of {allowed}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two matrices; the result must be 2x2 or 4x4."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    dim = a.shape[-1] * b.shape[-1]
    if dim not in (2, 4) or a.shape[-2] * b.shape[-2] not in (2, 4):
        raise ValueError(f"unsupported tensor product dimension {dim}")
    return np.kron(a, b)


def hermitian_eigensystem(h, *, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigen-decompose Hermitian matrices with cyclic complex Jacobi rotations.

    Args:
        h: Hermitian matrix or stack of matrices, shape ``(..., n, n)``.
        tol: Sweeps stop once the off-diagonal Frobenius mass of every matrix
            drops below ``tol * max(1, ||h||_F)``.
        max_sweeps: Iteration cap.

    Returns:
        ``(eigenvalues, eigenvectors)``; eigenvalues are real and sorted in
        descending order, eigenvectors are the orthonormal columns of the
        second array so that ``h = V diag(w) V^dagger``.

    Raises:
        ValueError: input is not Hermitian within 1e-10.
        ConvergenceError: the sweep cap was reached.
    """
    a = _as_square(h, allowed=(1, 2, 3, 4))
    if np.max(np.abs(a - dagger(a)), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = 0.5 * (a + dagger(a)).reshape(-1, n, n)
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    scale = np.maximum(1.0, np.linalg.norm(a, axis=(-2, -1)))
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps + 1):
        off = np.sqrt(np.sum(np.abs(a[:, offdiag]) ** 2, axis=-1))
        if np.all(off < tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, v, p, q)
    else:
        raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    w = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return w.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    # In-place annihilation of a[:, p, q] for the whole stack.
    apq = a[:, p, q]
    mag = np.abs(apq)
    active = mag > 1e-300
    safe = np.where(active, mag, 1.0)
    phase = np.where(active, apq / safe, 1.0)
    tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
    t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    cph = np.conj(phase)

    # columns: A <- A J, V <- V J
    for m in (a, v):
        mp = m[:, :, p].copy()
        mq = m[:, :, q]
        m[:, :, p] = c[:, None] * mp - (s * cph)[:, None] * mq
        m[:, :, q] = s[:, None] * mp + (c * cph)[:, None] * mq
    # rows: A <- J^dagger A
    ap = a[:, p, :].copy()
    aq = a[:, q, :]
    a[:, p, :] = c[:, None] * ap - (s * phase)[:, None] * aq
    a[:, q, :] = s[:, None] * ap + (c * phase)[:, None] * aq
    a[:, p, q] = 0.0
    a[:, q, p] = 0.0
    a[:, p, p] = a[:, p, p].real
    a[:, q, q] = a[:, q, q].real


def singular_values(m, *, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """Singular values (descending) by one-sided Jacobi orthogonalisation.

    Columns are rotated pairwise, which is Jacobi on the Hermitian ``M^dagger M``
    applied implicitly; the singular values are the final column norms. Unlike
    square roots of eigenvalues of ``M^dagger M``, tiny singular values keep
    absolute accuracy of order ``eps * ||M||``.
    """
    a = _as_square(m)
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape(-1, n, n).copy()
    for _ in range(max_sweeps + 1):
        done = True
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap, aq = a[:, :, p], a[:, :, q]
                alpha = np.sum(np.abs(ap) ** 2, axis=-1)
                beta = np.sum(np.abs(aq) ** 2, axis=-1)
                gamma = np.sum(np.conj(ap) * aq, axis=-1)
                mag = np.abs(gamma)
                active = mag > tol * np.sqrt(alpha * beta)
                if not np.any(active):
                    continue
                done = False
                safe = np.where(active, mag, 1.0)
                phase = np.where(active, gamma / safe, 1.0)
                tau = (beta - alpha) / (2.0 * safe)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cph = np.conj(phase)
                new_p = c[:, None] * ap - (s * cph)[:, None] * aq
                new_q = s[:, None] * ap + (c * cph)[:, None] * aq
                a[:, :, p] = new_p
                a[:, :, q] = new_q
        if done:
            break
    else:
        raise ConvergenceError(f"one-sided Jacobi did not converge in {max_sweeps} sweeps")
    sv = -np.sort(-np.linalg.norm(a, axis=-2), axis=-1)
    return sv.reshape(batch_shape + (n,))


def psd_sqrt(m) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues in ``[-1e-9, 0)`` are treated as rounding and set to zero.
    """
    w, v = hermitian_eigensystem(m)
    if np.any(w < -SQRT_NEG_TOL):
        raise NumericalError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
    root = np.sqrt(np.clip(w, 0.0, None))
    return (v * root[..., None, :]) @ dagger(v)


def _two_qubit(rho) -> np.ndarray:
    a = np.asarray(rho, dtype=complex)
    if a.ndim < 2 or a.shape[-2:] != (4, 4):
        raise ValueError(f"expected a 4x4 two-qubit matrix, got shape {a.shape}")
    return a


def partial_transpose(rho, subsystem: str = "second") -> np.ndarray:
    """Transpose one tensor factor of a two-qubit operator."""
    a = _two_qubit(rho)
    t = a.reshape(a.shape[:-2] + (2, 2, 2, 2))  # (i, j, k, l) = <ij|rho|kl>
    if subsystem == "first":
        t = np.swapaxes(t, -4, -2)
    elif subsystem == "second":
        t = np.swapaxes(t, -3, -1)
    else:
        raise ValueError(f"subsystem must be 'first' or 'second', not {subsystem!r}")
    return t.reshape(a.shape)


def partial_trace(rho, keep: str = "first") -> np.ndarray:
    """Reduced single-qubit state of a two-qubit density matrix."""
    a = _two_qubit(rho)
    t = a.reshape(a.shape[:-2] + (2, 2, 2, 2))
    if keep == "first":
        red = np.einsum("...ijkj->...ik", t)
    elif keep == "second":
        red = np.einsum("...ijil->...jl", t)
    else:
        raise ValueError(f"keep must be 'first' or 'second', not {keep!r}")
    return validate_density(red)


def validate_density(m, tol: float = DENSITY_TOL) -> np.ndarray:
    """Check that ``m`` is a density matrix and return a cleaned, read-only copy.

    Rounding-level defects are repaired: the matrix is Hermitian-symmetrised,
    eigenvalues in ``[-tol, 0)`` are clipped to zero and the trace is reset to
    one. Anything beyond ``tol`` raises :class:`DensityMatrixError`.
    """
    try:
        a = _as_square(m)
    except ValueError as exc:
        raise DensityMatrixError(str(exc)) from exc
    if np.max(np.abs(a - dagger(a)), initial=0.0) > tol:
        raise DensityMatrixError("density matrix is not Hermitian")
    a = 0.5 * (a + dagger(a))
    tr = np.real(np.trace(a, axis1=-2, axis2=-1))
    if np.any(np.abs(tr - 1.0) > tol):
        raise DensityMatrixError(f"density matrix trace deviates from 1 (trace {np.ravel(tr)[0]:.12g})")
    w, v = hermitian_eigensystem(a)
    if np.any(w < -tol):
        raise DensityMatrixError(f"density matrix is not positive (eigenvalue {w.min():.3e})")
    if np.any(w < 0):
        w = np.clip(w, 0.0, None)
        a = (v * w[..., None, :]) @ dagger(v)
        tr = np.real(np.trace(a, axis1=-2, axis2=-1))
    a = a / np.asarray(tr)[..., None, None]
    a.flags.writeable = False
    return a
