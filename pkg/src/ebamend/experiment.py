"""Sweeps, thresholds and filter optimisation for two-stage damping lines.

A line is ``stage o stage`` (no filter) or ``stage o HWP(phi) o stage`` (with a
filter), where a stage is a damping map followed by HWP(theta). The
transmitted photon is the first qubit of a Werner pair; the second photon is
untouched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .channels import (
    IDENTITY,
    SIGMA_Z,
    KrausChannel,
    compose,
    one_side_ops,
    rotated_ad,
    rotated_pd,
    rotation_channel,
    rotation_matrix,
)
from .entanglement import EB_TOL, concurrence, is_eb, negativity, werner_state
from .matcore import NumericalError, dagger, validate_density
from .optics import ROE_MEAN, OpticsParams, ad_stage_ops, roe_ad_channel

__all__ = [
    "MapKind",
    "MonteCarlo",
    "SweepSpec",
    "Curve",
    "Band",
    "FilterOptimum",
    "default_grid",
    "stage_channel",
    "line_channel",
    "line_states",
    "sweep_theta",
    "sweep_phi",
    "sweep",
    "find_eb_windows",
    "critical_damping",
    "optimize_filter",
    "mc_band",
    "golden_section_max",
]

MapKind = Literal["pd", "ad"]
EB_CONCURRENCE_TOL = 1e-7
MAX_REJECTION_DRAWS = 1_000_000


def _check_kind(kind: str) -> str:
    kind = kind.lower()
    if kind not in ("pd", "ad"):
        raise ValueError(f"map kind must be 'pd' or 'ad', got {kind!r}")
    return kind


@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 1000
    seed: int = 0
    sigma_f: float = 0.016
    sigma_theta: float = math.radians(0.5)

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("need at least one Monte-Carlo sample")
        if self.sigma_f < 0 or self.sigma_theta < 0:
            raise ValueError("Monte-Carlo spreads must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def default_grid(kind: str, sweep_var: str) -> tuple[float, float, int]:
    """Default sweep grid: wide enough to show two EB windows of each map."""
    if sweep_var == "phi":
        return (-0.8, 0.8, 161)
    return (-0.6, 0.6, 121) if _check_kind(kind) == "pd" else (-1.2, 1.2, 121)


@dataclass(frozen=True)
class SweepSpec:
    map_kind: MapKind
    damping: float
    sweep_var: Literal["theta", "phi"] = "theta"
    grid: Optional[tuple[float, float, int]] = None
    fixed_theta: Optional[float] = None
    input_fidelity: float = 1.0
    roe: bool = False
    optics: Optional[OpticsParams] = None
    mc: MonteCarlo = field(default_factory=MonteCarlo)

    def __post_init__(self):
        object.__setattr__(self, "map_kind", _check_kind(self.map_kind))
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError(f"damping must lie in [0, 1], got {self.damping}")
        if self.sweep_var not in ("theta", "phi"):
            raise ValueError(f"sweep variable must be 'theta' or 'phi', got {self.sweep_var!r}")
        if self.sweep_var == "phi" and self.fixed_theta is None:
            raise ValueError("a phi sweep needs fixed_theta")
        if self.grid is None:
            object.__setattr__(self, "grid", default_grid(self.map_kind, self.sweep_var))
        start, stop, count = self.grid
        if int(count) != count or count < 2:
            raise ValueError("grid needs at least two points")
        if not start < stop:
            raise ValueError("grid start must be below grid stop")
        if not 0.25 <= self.input_fidelity <= 1.0:
            raise ValueError(f"input fidelity must lie in [0.25, 1], got {self.input_fidelity}")
        if self.roe and self.optics is None:
            object.__setattr__(self, "optics", ROE_MEAN)

    @property
    def angles(self) -> np.ndarray:
        start, stop, count = self.grid
        return np.linspace(start, stop, int(count))

    @property
    def active_optics(self) -> Optional[OpticsParams]:
        return self.optics if self.roe else None


@dataclass(frozen=True, eq=False)
class Curve:
    angle: np.ndarray
    concurrence: np.ndarray
    negativity: np.ndarray
    eb: np.ndarray

    def __len__(self) -> int:
        return len(self.angle)

    def points(self):
        return zip(self.angle, self.concurrence, self.negativity, self.eb)


@dataclass(frozen=True, eq=False)
class Band:
    angle: np.ndarray
    c_min: np.ndarray
    c_max: np.ndarray

    def __len__(self) -> int:
        return len(self.angle)

    def points(self):
        return zip(self.angle, self.c_min, self.c_max)


class FilterOptimum(tuple):
    """``(phi_star, c_star)`` pair with named access."""

    def __new__(cls, phi_star: float, c_star: float):
        return super().__new__(cls, (phi_star, c_star))

    phi_star = property(lambda self: self[0])
    c_star = property(lambda self: self[1])


# --- channel-algebra route -------------------------------------------------

def stage_channel(kind: str, damping: float, theta: float,
                  optics: Optional[OpticsParams] = None) -> KrausChannel:
    """One elementary map: damping then HWP(theta)."""
    if _check_kind(kind) == "pd":
        return rotated_pd(theta, damping)
    if optics is None:
        return rotated_ad(theta, damping)
    return roe_ad_channel(damping, optics, theta).channel


def line_channel(kind: str, damping: float, theta: float, phi: Optional[float] = None,
                 optics: Optional[OpticsParams] = None) -> KrausChannel:
    """Two stages, with the HWP(phi) filter between them when ``phi`` is given."""
    stage = stage_channel(kind, damping, theta, optics)
    first = stage if phi is None else compose(rotation_channel(phi), stage)
    return compose(stage, first)


# --- batched route used by sweeps ------------------------------------------

def _stage_ops(kind: str, damping: float, theta: np.ndarray, optics) -> np.ndarray:
    if kind == "pd":
        base = np.stack([math.sqrt(1 - damping / 2) * IDENTITY, math.sqrt(damping / 2) * SIGMA_Z])
        return rotation_matrix(theta)[..., None, :, :] @ base
    return ad_stage_ops(damping, theta, optics if optics is not None else OpticsParams())


def line_states(kind: str, damping: float, theta, phi=None, fidelity=1.0,
                optics: Optional[OpticsParams] = None) -> np.ndarray:
    """Output two-qubit states of the line for arrays of angles and fidelities.

    ``theta``, ``phi`` and ``fidelity`` broadcast against each other. Outputs of
    lossy optics are renormalised (post-selection).
    """
    kind = _check_kind(kind)
    if phi is None:
        theta, fidelity = np.broadcast_arrays(np.asarray(theta, float), np.asarray(fidelity, float))
    else:
        theta, phi, fidelity = np.broadcast_arrays(
            np.asarray(theta, float), np.asarray(phi, float), np.asarray(fidelity, float))
    stage = _stage_ops(kind, damping, theta, optics)  # (..., k, 2, 2)
    first = stage if phi is None else rotation_matrix(phi)[..., None, :, :] @ stage
    k = stage.shape[-3]
    ops = (stage[..., :, None, :, :] @ first[..., None, :, :, :]).reshape(theta.shape + (k * k, 2, 2))
    big = one_side_ops(ops)
    rho = werner_state(fidelity)[..., None, :, :]
    out = np.sum(big @ rho @ dagger(big), axis=-3)
    tr = np.real(np.trace(out, axis1=-2, axis2=-1))
    if np.any(tr <= 0):
        raise NumericalError("line has zero transmission")
    return validate_density(out / tr[..., None, None])


def _curve(angles: np.ndarray, states: np.ndarray, tol: float) -> Curve:
    neg = np.atleast_1d(negativity(states))
    return Curve(angles, np.atleast_1d(concurrence(states)), neg, neg <= tol)


def sweep_theta(spec: SweepSpec, tol: float = EB_TOL) -> Curve:
    """Unfiltered line scanned over the plate angle theta."""
    if spec.sweep_var != "theta":
        raise ValueError("sweep_theta needs sweep_var='theta'")
    angles = spec.angles
    states = line_states(spec.map_kind, spec.damping, angles, None, spec.input_fidelity,
                         spec.active_optics)
    return _curve(angles, states, tol)


def sweep_phi(spec: SweepSpec, tol: float = EB_TOL) -> Curve:
    """Filtered line at fixed theta scanned over the filter angle phi."""
    if spec.sweep_var != "phi" or spec.fixed_theta is None:
        raise ValueError("sweep_phi needs sweep_var='phi' and fixed_theta")
    angles = spec.angles
    states = line_states(spec.map_kind, spec.damping, spec.fixed_theta, angles,
                         spec.input_fidelity, spec.active_optics)
    return _curve(angles, states, tol)


def sweep(spec: SweepSpec, tol: float = EB_TOL) -> Curve:
    return sweep_theta(spec, tol) if spec.sweep_var == "theta" else sweep_phi(spec, tol)


def find_eb_windows(curve: Curve, tol: float = EB_TOL) -> list[tuple[float, float]]:
    """Maximal runs of EB grid points, widened by half a grid step on each side.

    Edges are clipped to the grid range.
    """
    if len(curve) == 0:
        raise ValueError("empty curve")
    angle = np.asarray(curve.angle)
    eb = np.asarray(curve.negativity) <= tol
    windows = []
    i = 0
    while i < len(angle):
        if not eb[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(angle) and eb[j + 1]:
            j += 1
        lo = angle[0] if i == 0 else 0.5 * (angle[i - 1] + angle[i])
        hi = angle[-1] if j == len(angle) - 1 else 0.5 * (angle[j] + angle[j + 1])
        windows.append((float(lo), float(hi)))
        i = j + 1
    return windows


def critical_damping(kind: str, theta: float, tol: float = 1e-6,
                     edge: float = 1e-3) -> Optional[float]:
    """Smallest damping making the unfiltered two-stage line EB, by bisection.

    Returns ``None`` when the line is EB already without damping, or is still
    entangling at damping ``1 - edge``. The second case covers lines that only
    break at full damping: their negativity fades continuously, so with a
    finite EB tolerance a spurious onset would appear just below 1.
    """
    kind = _check_kind(kind)
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")

    def breaks(d: float) -> bool:
        return is_eb(line_channel(kind, d, theta)).is_eb

    lo, hi = 0.0, 1.0 - edge
    if breaks(lo) or not breaks(hi):
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if breaks(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-8, max_iter: int = 200):
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def optimize_filter(kind: str, damping: float, theta: float, fidelity: float = 1.0,
                    optics: Optional[OpticsParams] = None, grid_points: int = 64,
                    tol: float = 1e-8) -> FilterOptimum:
    """Filter angle maximising the output concurrence of the filtered line.

    The plate's action has period pi/2 in phi, so ``phi_star`` is reported in
    ``[0, pi/2)``. A coarse grid picks the best cell; golden-section search
    refines it and is only accepted if it does not lose to the grid.
    """
    kind = _check_kind(kind)
    period = math.pi / 2
    grid = np.arange(grid_points) * (period / grid_points)
    values = np.atleast_1d(concurrence(line_states(kind, damping, theta, grid, fidelity, optics)))
    # first of (near-)tied maxima, so symmetric optima resolve to the smallest angle
    best = int(np.argmax(values >= values.max() - 1e-12))
    phi_star, c_star = float(grid[best]), float(values[best])

    def f(phi):
        return float(concurrence(line_states(kind, damping, theta, phi, fidelity, optics)))

    step = period / grid_points
    x, fx = golden_section_max(f, phi_star - step, phi_star + step, tol)
    if fx > c_star:
        phi_star, c_star = x, fx
    return FilterOptimum(phi_star % period, c_star)


def _truncated_normal(rng: np.random.Generator, mean: float, sigma: float, n: int,
                      lo: float = 0.25, hi: float = 1.0) -> np.ndarray:
    if sigma == 0:
        return np.full(n, min(max(mean, lo), hi))
    out = np.empty(0)
    drawn = 0
    while len(out) < n:
        batch = max(2 * (n - len(out)), 16)
        drawn += batch
        if drawn > MAX_REJECTION_DRAWS:
            raise NumericalError("truncated-normal rejection sampling exceeded the draw cap")
        x = rng.normal(mean, sigma, batch)
        out = np.concatenate([out, x[(x >= lo) & (x <= hi)]])
    return out[:n]


def mc_band(spec: SweepSpec) -> Band:
    """Min/max concurrence envelope under input-fidelity and plate-angle jitter.

    Fidelity is drawn from a normal distribution truncated to [0.25, 1]. For
    amplitude damping the theta plates also get a common offset drawn
    uniformly from ``[-sigma_theta, sigma_theta]``. Each grid point has its own
    random stream derived from ``(seed, index)``.
    """
    mc = spec.mc
    angles = spec.angles
    optics = spec.active_optics
    c_min = np.empty(len(angles))
    c_max = np.empty(len(angles))
    for i, angle in enumerate(angles):
        rng = np.random.default_rng(np.random.SeedSequence(mc.seed, spawn_key=(i,)))
        fid = _truncated_normal(rng, spec.input_fidelity, mc.sigma_f, mc.samples)
        if spec.map_kind == "ad" and mc.sigma_theta > 0:
            jitter = rng.uniform(-mc.sigma_theta, mc.sigma_theta, mc.samples)
        else:
            jitter = np.zeros(mc.samples)
        if spec.sweep_var == "theta":
            states = line_states(spec.map_kind, spec.damping, angle + jitter, None, fid, optics)
        else:
            states = line_states(spec.map_kind, spec.damping, spec.fixed_theta + jitter, angle,
                                 fid, optics)
        c = np.atleast_1d(concurrence(states))
        c_min[i], c_max[i] = c.min(), c.max()
    return Band(angles, c_min, c_max)
