"""Numerical tolerances shared by every module.

All thresholds live in one frozen record so the stress harness and tests can
tighten or relax them from a single place.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # state / operator validation
    herm: float = 1e-10
    psd: float = 1e-10
    trace: float = 1e-10
    idempotent: float = 1e-9
    proj_trace: float = 1e-8
    unit_norm: float = 1e-10
    # eigensolver
    eig_input_herm: float = 1e-8
    jacobi_rel: float = 1e-13
    jacobi_max_sweeps: int = 100
    # clamping of rounding negatives before square roots
    clamp: float = 1e-12
    # resolutions of the identity (pinching)
    resolution: float = 1e-8
    # two-projector decomposition
    jordan_classify: float = 1e-9
    jordan_leak: float = 1e-8
    # stress-harness slack on E - bound
    stress_slack: float = 1e-9
    # bisection tolerance for root inversion
    bisect: float = 1e-12
    # antipodal Bloch axes
    antipodal: float = 1e-9


DEFAULT = Tolerances()
