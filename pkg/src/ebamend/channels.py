"""Single-qubit channels in Kraus form.

A channel acts as ``rho -> sum_i K_i rho K_i^dagger``. The constructors below
cover half-wave-plate reflections, phase damping and amplitude damping, plus
composition, repetition and the Choi state used by the entanglement-breaking
test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .matcore import dagger, hermitian_eigensystem, validate_density

__all__ = [
    "KrausChannel",
    "IDENTITY",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PSI_PLUS",
    "identity_channel",
    "rotation_matrix",
    "rotation_channel",
    "phase_damping",
    "amplitude_damping",
    "rotated_pd",
    "rotated_ad",
    "compose",
    "repeat",
    "apply",
    "apply_one_side",
    "choi",
    "alpha_of_eta",
    "eta_of_alpha",
    "pd_branch_weights",
    "pd_chain_output",
]

MAX_KRAUS = 16
COMPLETENESS_TOL = 1e-10
PRUNE_NORM = 1e-14
CHOI_CUTOFF = 1e-12

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# (|01> + |10>)/sqrt(2); first factor is the transmitted photon, second the ancilla
PSI_PLUS = np.outer([0, 1, 1, 0], [0, 1, 1, 0]).astype(complex) / 2.0
for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, PSI_PLUS):
    _m.flags.writeable = False


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Immutable list of 2x2 Kraus operators.

    ``trace_preserving=False`` marks a sub-normalised (post-selected) map, whose
    outputs are renormalised by their trace when applied.
    """

    ops: np.ndarray
    trace_preserving: bool = True
    completeness_defect: float = field(init=False)

    def __post_init__(self):
        ops = np.array(self.ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1:] != (2, 2):
            raise ValueError(f"Kraus operators must be 2x2, got shape {ops.shape}")
        if not 1 <= len(ops) <= MAX_KRAUS:
            raise ValueError(f"need between 1 and {MAX_KRAUS} Kraus operators, got {len(ops)}")
        if not np.all(np.isfinite(ops)):
            raise ValueError("Kraus operators have non-finite entries")
        ops.flags.writeable = False
        gram = np.einsum("kji,kjl->il", ops.conj(), ops)
        defect = float(np.linalg.norm(gram - IDENTITY))
        if self.trace_preserving:
            if defect > COMPLETENESS_TOL:
                raise ValueError(f"Kraus operators are not complete (defect {defect:.3e})")
        else:
            top = hermitian_eigensystem(gram)[0][0]
            if top > 1.0 + COMPLETENESS_TOL:
                raise ValueError(f"sub-normalised channel amplifies (largest eigenvalue {top:.12g})")
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "completeness_defect", defect)

    def __len__(self) -> int:
        return len(self.ops)

    def __repr__(self) -> str:
        kind = "TP" if self.trace_preserving else "sub-normalised"
        return f"KrausChannel({len(self)} ops, {kind}, defect={self.completeness_defect:.1e})"


def identity_channel() -> KrausChannel:
    return KrausChannel(IDENTITY)


def rotation_matrix(theta):
    """Half-wave-plate reflection ``[[cos 2t, -sin 2t], [-sin 2t, -cos 2t]]``.

    Accepts an array of angles and returns a matching stack of matrices.
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    r = np.empty(theta.shape + (2, 2), dtype=complex)
    r[..., 0, 0] = c
    r[..., 0, 1] = -s
    r[..., 1, 0] = -s
    r[..., 1, 1] = -c
    return r


def rotation_channel(theta: float) -> KrausChannel:
    if not math.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    return KrausChannel(rotation_matrix(theta))


def _check_probability(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def phase_damping(p: float) -> KrausChannel:
    """Dephasing that scales the off-diagonal coherences by ``1 - p``."""
    _check_probability("p", p)
    return KrausChannel([math.sqrt(1 - p / 2) * IDENTITY, math.sqrt(p / 2) * SIGMA_Z])


def amplitude_damping(eta: float) -> KrausChannel:
    """Decay ``|1> -> |0>`` with probability ``eta``."""
    _check_probability("eta", eta)
    e1 = np.array([[1, 0], [0, math.sqrt(1 - eta)]], dtype=complex)
    e2 = np.array([[0, math.sqrt(eta)], [0, 0]], dtype=complex)
    return KrausChannel([e1, e2])


def rotated_pd(theta: float, p: float) -> KrausChannel:
    return compose(rotation_channel(theta), phase_damping(p))


def rotated_ad(theta: float, eta: float) -> KrausChannel:
    return compose(rotation_channel(theta), amplitude_damping(eta))


def _compress(ops: np.ndarray) -> np.ndarray:
    # minimal Kraus set from the spectral decomposition of the Choi matrix
    vecs = ops.reshape(len(ops), 4)
    choi_mat = vecs.T @ vecs.conj()
    w, v = hermitian_eigensystem(choi_mat)
    keep = w > CHOI_CUTOFF
    return (v[:, keep] * np.sqrt(w[keep])).T.reshape(-1, 2, 2)


def compose(after: KrausChannel, before: KrausChannel) -> KrausChannel:
    """Channel applying ``before`` first and then ``after``."""
    ops = np.einsum("aij,bjk->abik", after.ops, before.ops).reshape(-1, 2, 2)
    norms = np.linalg.norm(ops, axis=(1, 2))
    pruned = ops[norms >= PRUNE_NORM]
    if len(pruned) == 0:
        pruned = ops[:1]
    if len(pruned) > MAX_KRAUS:
        pruned = _compress(pruned)
    return KrausChannel(pruned, trace_preserving=after.trace_preserving and before.trace_preserving)


def repeat(phi: KrausChannel, n: int) -> KrausChannel:
    """``n``-fold composition of ``phi``; ``n = 0`` gives the identity channel."""
    if n < 0:
        raise ValueError("repetition count must be non-negative")
    out = identity_channel()
    for _ in range(n):
        out = compose(phi, out)
    return out


def _finish(out: np.ndarray, trace_preserving: bool) -> np.ndarray:
    if not trace_preserving:
        tr = np.real(np.trace(out))
        if tr <= 0:
            raise ValueError("post-selected output has zero success probability")
        out = out / tr
    return validate_density(out)


def apply(phi: KrausChannel, rho) -> np.ndarray:
    """Apply a channel to a single-qubit state (renormalising sub-normalised maps)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a single-qubit state, got shape {rho.shape}")
    out = np.einsum("kij,jl,kml->im", phi.ops, rho, phi.ops.conj())
    return _finish(out, phi.trace_preserving)


def one_side_ops(ops: np.ndarray) -> np.ndarray:
    """Lift Kraus operators ``K`` to ``K (x) I`` on the two-qubit space."""
    return np.einsum("...ij,kl->...ikjl", ops, IDENTITY).reshape(ops.shape[:-2] + (4, 4))


def apply_one_side(phi: KrausChannel, rho) -> np.ndarray:
    """Apply ``phi`` to the first qubit of a two-qubit state, ancilla untouched."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a two-qubit state, got shape {rho.shape}")
    big = one_side_ops(phi.ops)
    out = np.einsum("kij,jl,kml->im", big, rho, big.conj())
    return _finish(out, phi.trace_preserving)


def choi(phi: KrausChannel) -> np.ndarray:
    """Choi state ``(phi (x) I)(|Psi+><Psi+|)``."""
    return apply_one_side(phi, PSI_PLUS)


def alpha_of_eta(eta: float) -> float:
    """Sagnac half-wave-plate angle that realises amplitude damping ``eta``."""
    _check_probability("eta", eta)
    # arccos(-sqrt(1 - eta)) / 2, written to stay accurate for small eta
    return (math.pi - math.asin(math.sqrt(eta))) / 2.0


def eta_of_alpha(alpha: float) -> float:
    if not (math.pi / 4 - 1e-15 <= alpha <= math.pi / 2 + 1e-15):
        raise ValueError(f"alpha must lie in [pi/4, pi/2], got {alpha}")
    return min(1.0, max(0.0, math.sin(2.0 * alpha) ** 2))


def pd_branch_weights(p: float) -> dict[tuple[str, str], float]:
    """Mixing fractions of the four plate configurations of a two-stage PD line."""
    _check_probability("p", p)
    keep, flip = 1 - p / 2, p / 2
    return {
        ("I", "I"): keep * keep,
        ("I", "Z"): keep * flip,
        ("Z", "I"): flip * keep,
        ("Z", "Z"): flip * flip,
    }


def pd_chain_output(p: float, theta: float, phi_filter: Optional[float], rho_in) -> np.ndarray:
    """Two-stage rotated phase-damping line, built as a mixture of plate settings.

    Each branch is a fixed sequence of wave plates: optional HWP(0), HWP(theta),
    optional filter HWP(phi), optional HWP(0), HWP(theta). The branch outputs are
    mixed with :func:`pd_branch_weights`, which mirrors how the laboratory
    combines tomography registers.
    """
    rho_in = np.asarray(rho_in, dtype=complex)
    plates = {"I": IDENTITY, "Z": SIGMA_Z}
    r_theta = rotation_matrix(theta)
    middle = IDENTITY if phi_filter is None else rotation_matrix(phi_filter)
    out = np.zeros((4, 4), dtype=complex)
    for (first, second), weight in pd_branch_weights(p).items():
        k = r_theta @ plates[second] @ middle @ r_theta @ plates[first]
        big = np.kron(k, IDENTITY)
        out += weight * big @ rho_in @ dagger(big)
    return validate_density(out)
