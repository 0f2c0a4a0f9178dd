"""Entanglement transmission through repeated noisy qubit channels.

Repeating a rotated phase- or amplitude-damping map twice can break all
entanglement; inserting a half-wave-plate filter between the two applications
can restore it. This package simulates both lines, locates the
entanglement-breaking regions and optimises the filter angle.
"""
from .channels import (
    KrausChannel,
    alpha_of_eta,
    amplitude_damping,
    apply,
    apply_one_side,
    choi,
    compose,
    eta_of_alpha,
    pd_chain_output,
    phase_damping,
    repeat,
    rotated_ad,
    rotated_pd,
    rotation_channel,
)
from .entanglement import EbVerdict, concurrence, eb_order, is_eb, is_separable, negativity, werner_state
from .experiment import (
    Band,
    Curve,
    MonteCarlo,
    SweepSpec,
    critical_damping,
    find_eb_windows,
    line_channel,
    mc_band,
    optimize_filter,
    sweep_phi,
    sweep_theta,
)
from .matcore import NumericalError
from .optics import POE, ROE_MEAN, OpticsParams, load_optics, roe_ad_channel

__version__ = "0.1.0"

__all__ = [
    "alpha_of_eta",
    "amplitude_damping",
    "apply",
    "apply_one_side",
    "Band",
    "choi",
    "compose",
    "concurrence",
    "critical_damping",
    "Curve",
    "eb_order",
    "EbVerdict",
    "eta_of_alpha",
    "find_eb_windows",
    "is_eb",
    "is_separable",
    "KrausChannel",
    "line_channel",
    "load_optics",
    "mc_band",
    "MonteCarlo",
    "negativity",
    "NumericalError",
    "OpticsParams",
    "optimize_filter",
    "pd_chain_output",
    "phase_damping",
    "POE",
    "repeat",
    "roe_ad_channel",
    "ROE_MEAN",
    "rotated_ad",
    "rotated_pd",
    "rotation_channel",
    "sweep_phi",
    "sweep_theta",
    "SweepSpec",
    "werner_state",
]
