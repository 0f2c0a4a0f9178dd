"""Two-qubit entanglement measures and the entanglement-breaking test."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import PSI_PLUS, SIGMA_Y, KrausChannel, choi, repeat
from .matcore import dagger, hermitian_eigensystem, partial_transpose, singular_values, validate_density

__all__ = [
    "EB_TOL",
    "EbVerdict",
    "concurrence",
    "negativity",
    "is_separable",
    "is_eb",
    "eb_order",
    "werner_state",
]

EB_TOL = 1e-9
_YY = np.kron(SIGMA_Y, SIGMA_Y)
# density-matrix eigenvalues below this are rounding noise
_RANK_FLOOR = 1e-14


def _spin_flip_spectrum(rho: np.ndarray) -> np.ndarray:
    # Square roots of the eigenvalues of sqrt(rho) rho~ sqrt(rho), descending.
    # That matrix is M M^dagger with M = sqrt(rho) YY sqrt(rho)*, so these are the
    # singular values of M; taking them directly avoids square roots of
    # rounding-level eigenvalues.
    w, v = hermitian_eigensystem(rho)
    root_w = np.sqrt(np.where(w > _RANK_FLOOR, w, 0.0))
    root = (v * root_w[..., None, :]) @ dagger(v)
    m = root @ _YY @ np.conj(root)
    return singular_values(m)


def concurrence(rho) -> np.ndarray | float:
    """Wootters concurrence of a two-qubit state (or stack of states).

    ``C = max(0, l1 - l2 - l3 - l4)`` where ``l_i`` are the decreasing square
    roots of the eigenvalues of ``sqrt(rho) rho~ sqrt(rho)`` and ``rho~`` is the
    spin-flipped state.
    """
    rho = validate_density(rho)
    if rho.shape[-2:] != (4, 4):
        raise ValueError("concurrence needs a two-qubit state")
    lam = _spin_flip_spectrum(rho)
    c = np.maximum(0.0, lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3])
    return float(c) if c.ndim == 0 else c


def negativity(rho) -> np.ndarray | float:
    """Sum of the magnitudes of the negative eigenvalues of the partial transpose."""
    rho = validate_density(rho)
    w = hermitian_eigensystem(partial_transpose(rho))[0]
    n = 0.0 - np.sum(np.minimum(w, 0.0), axis=-1)
    return float(n) if n.ndim == 0 else n


def is_separable(rho, tol: float = EB_TOL) -> bool:
    """PPT test, which is exact for two qubits."""
    return bool(negativity(rho) <= tol)


@dataclass(frozen=True)
class EbVerdict:
    is_eb: bool
    negativity: float
    choi_concurrence: float
    tolerance: float

    def __bool__(self) -> bool:
        return self.is_eb


def is_eb(phi: KrausChannel, tol: float = EB_TOL) -> EbVerdict:
    """Decide whether ``phi`` is entanglement breaking from its Choi state."""
    state = choi(phi)
    neg = negativity(state)
    return EbVerdict(neg <= tol, neg, concurrence(state), tol)


def eb_order(phi: KrausChannel, n_max: int, tol: float = EB_TOL) -> Optional[int]:
    """Smallest ``k <= n_max`` such that ``phi`` applied ``k`` times is EB.

    Every ``k`` is tested in turn; no monotonicity in ``k`` is assumed.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    for k in range(1, n_max + 1):
        if is_eb(repeat(phi, k), tol).is_eb:
            return k
    return None


def werner_state(fidelity) -> np.ndarray:
    """Werner mixture of ``|Psi+>`` and white noise with the given fidelity.

    Accepts an array of fidelities and returns a stack of states.
    """
    f = np.asarray(fidelity, dtype=float)
    if np.any((f < 0.25) | (f > 1.0)) or not np.all(np.isfinite(f)):
        raise ValueError(f"fidelity must lie in [0.25, 1], got {fidelity}")
    w = (4 * f - 1) / 3
    rho = w[..., None, None] * PSI_PLUS + ((1 - f) / 3)[..., None, None] * np.eye(4)
    return validate_density(rho)
