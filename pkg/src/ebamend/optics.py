"""Amplitude-damping stage built from imperfect beam splitters.

The stage is a displaced Sagnac loop closed by one polarising beam splitter
(PBS), followed by an unbalanced Mach-Zehnder whose beam splitter (BS) merges
the damped and undamped output ports without interference.

Propagation model, amplitude level inside the loop:

* entering the PBS, polarisation ``H`` is transmitted into the H-arm with
  amplitude ``sqrt(TH_PBS)`` and reflected into the V-arm with
  ``sqrt(RH_PBS)``; ``V`` likewise with ``sqrt(TV_PBS)`` / ``sqrt(RV_PBS)``;
* the H-arm carries HWP(0), the V-arm HWP(alpha) with alpha set by the damping;
* on the way out, light from the H-arm is transmitted to the undamped port and
  reflected to the damped port, light from the V-arm the other way round;
  anything else is lost.

The two ports then reach the detector through BS transmission (undamped port)
and BS reflection (damped port). The Mach-Zehnder imbalance exceeds the
coherence length, so the ports contribute separate Kraus operators. The result
is sub-normalised; downstream states are renormalised, as coincidence
post-selection does in the lab. Wave plates are ideal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .channels import KrausChannel, alpha_of_eta, rotation_matrix, _check_probability

__all__ = [
    "OpticsParams",
    "POE",
    "ROE_MEAN",
    "ROE_STD",
    "load_optics",
    "parse_optics",
    "ad_stage_ops",
    "roe_ad_channel",
    "RoeStage",
]


@dataclass(frozen=True)
class OpticsParams:
    """Intensity transmissivities and reflectivities of the BS and PBS."""

    th_bs: float = 0.5
    rh_bs: float = 0.5
    tv_bs: float = 0.5
    rv_bs: float = 0.5
    th_pbs: float = 1.0
    rh_pbs: float = 0.0
    tv_pbs: float = 0.0
    rv_pbs: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (0.0 <= value <= 1.0) or not math.isfinite(value):
                raise ValueError(f"{f.name.upper()} must lie in [0, 1], got {value}")
        for pol in ("h", "v"):
            for part in ("bs", "pbs"):
                total = getattr(self, f"t{pol}_{part}") + getattr(self, f"r{pol}_{part}")
                if total > 1.0 + 1e-9:
                    raise ValueError(
                        f"T{pol.upper()}_{part.upper()} + R{pol.upper()}_{part.upper()} = {total} exceeds 1"
                    )


POE = OpticsParams()
# average realistic elements, measured values
ROE_MEAN = OpticsParams(
    th_bs=0.507, rh_bs=0.407, tv_bs=0.495, rv_bs=0.410,
    th_pbs=0.965, rh_pbs=0.008, tv_pbs=0.024, rv_pbs=0.928,
)
ROE_STD = {
    "th_bs": 0.016, "rh_bs": 0.011, "tv_bs": 0.018, "rv_bs": 0.001,
    "th_pbs": 0.001, "rh_pbs": 0.004, "tv_pbs": 0.014, "rv_pbs": 0.035,
}

_KEYS = {f.name.upper(): f.name for f in fields(OpticsParams)}


def parse_optics(text: str) -> OpticsParams:
    """Parse ``KEY=value`` lines; ``#`` starts a comment, absent keys keep POE values."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().upper()
        if not sep or key not in _KEYS:
            raise ValueError(f"line {lineno}: expected one of {sorted(_KEYS)} as KEY=value, got {raw!r}")
        if _KEYS[key] in values:
            raise ValueError(f"line {lineno}: duplicate key {key}")
        try:
            values[_KEYS[key]] = float(value)
        except ValueError:
            raise ValueError(f"line {lineno}: {value.strip()!r} is not a number") from None
    return OpticsParams(**values)


def load_optics(path) -> OpticsParams:
    return parse_optics(Path(path).read_text())


def ad_stage_ops(eta: float, theta, optics: OpticsParams = POE) -> np.ndarray:
    """Kraus operators of HWP(theta) after one damping stage.

    ``theta`` may be an array; the result has shape ``theta.shape + (2, 2, 2)``
    with the undamped-port operator first.
    """
    alpha = alpha_of_eta(eta)
    o = optics
    sq = np.sqrt
    open_h = np.diag([sq(o.th_pbs), sq(o.tv_pbs)]).astype(complex)
    open_v = np.diag([sq(o.rh_pbs), sq(o.rv_pbs)]).astype(complex)
    trans = open_h  # same element traversed again: transmission amplitudes
    refl = open_v
    plate_h = rotation_matrix(0.0)
    plate_v = rotation_matrix(alpha)
    undamped = trans @ plate_h @ open_h + refl @ plate_v @ open_v
    damped = refl @ plate_h @ open_h + trans @ plate_v @ open_v
    bs_t = np.diag([sq(o.th_bs), sq(o.tv_bs)])
    bs_r = np.diag([sq(o.rh_bs), sq(o.rv_bs)])
    stage = np.stack([bs_t @ undamped, bs_r @ damped])
    return rotation_matrix(theta)[..., None, :, :] @ stage


class RoeStage(NamedTuple):
    channel: KrausChannel
    success_probability: Callable[[np.ndarray], float]


def roe_ad_channel(eta: float, optics: OpticsParams = ROE_MEAN, theta: float = 0.0) -> RoeStage:
    """One rotated amplitude-damping stage with the given optical elements.

    Returns the sub-normalised channel and a function giving the probability
    that a photon in state ``rho`` (one qubit, or the first qubit of a pair)
    survives the stage.
    """
    _check_probability("eta", eta)
    ops = ad_stage_ops(eta, theta, optics)
    channel = KrausChannel(ops, trace_preserving=False)

    def success_probability(rho) -> float:
        rho = np.asarray(rho, dtype=complex)
        gram = np.einsum("kji,kjl->il", ops.conj(), ops)
        if rho.shape == (4, 4):
            gram = np.kron(gram, np.eye(2))
        elif rho.shape != (2, 2):
            raise ValueError(f"unsupported state shape {rho.shape}")
        return float(np.real(np.trace(gram @ rho)))

    return RoeStage(channel, success_probability)
