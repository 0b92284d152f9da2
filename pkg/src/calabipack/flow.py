"""Combinatorial Calabi flow ``du/dt = L (Kbar - K)`` in u-coordinates.

With ``Kbar = 0`` this is the negative gradient flow of the Calabi energy
``sum K_i^2`` (``grad_u C = 2 L K``); a nonzero ``Kbar`` gives the
prescribed-curvature variant, which decreases ``||K - Kbar||^2``.

The integrator is an embedded Dormand-Prince 5(4) pair with the usual
error-per-step controller plus two extra rejection rules: a step is thrown
away if it raises the energy or if it pushes some ``u_i`` above ``-eps_u``
(a radius escaping to infinity).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowupGuard, DimensionMismatch, DomainError, StepFailure, TriangleInequalityViolation
from .hypgeom import GeometryState, WeightedPacking, curvatures, r_from_u
from .laplacian import DualLaplacian, assemble, min_eigenvalue

log = logging.getLogger(__name__)

MIN_STEP = 1e-14


class Termination(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_TIME = "MaxTime"
    MAX_STEPS = "MaxSteps"
    BLOWUP_GUARD = "BlowupGuard"
    STEP_FAILURE = "StepFailure"


@dataclass
class FlowConfig:
    """Integration parameters.

    ``target`` defaults to zero curvature. ``curvature_ceiling`` is only
    monitored: samples whose largest curvature exceeds it are counted in the
    trajectory, the run itself is not altered.
    """

    target: np.ndarray | None = None
    h0: float = 1e-2
    tol: float = 1e-8
    t_max: float = 1e4
    max_steps: int = 1_000_000
    eps_u: float = 1e-12
    curvature_ceiling: float = 2 * math.pi - 1e-3
    rtol: float = 1e-9
    atol: float = 1e-9
    lambda_every: int = 25
    tail_fraction: float = 0.25

    def __post_init__(self):
        if not self.h0 > 0 or not self.tol > 0 or not self.eps_u > 0:
            raise DomainError("h0, tol and eps_u must be positive")
        if not self.t_max > 0 or self.max_steps < 1:
            raise DomainError("t_max and max_steps must be positive")
        if not self.curvature_ceiling < 2 * math.pi:
            raise DomainError("curvature ceiling must be below 2*pi")
        if not 0 < self.tail_fraction <= 1:
            raise DomainError("tail_fraction must lie in (0, 1]")

    def target_for(self, n: int) -> np.ndarray:
        if self.target is None:
            return np.zeros(n)
        target = np.asarray(self.target, dtype=float)
        if target.shape != (n,):
            raise DimensionMismatch(f"target curvature has shape {target.shape}, expected ({n},)")
        return target


@dataclass
class Sample:
    t: float
    u: np.ndarray
    K: np.ndarray
    energy: float
    h_used: float
    lambda1: float | None = None

    @property
    def r(self) -> np.ndarray:
        return r_from_u(self.u)


@dataclass
class FlowTrajectory:
    samples: list[Sample]
    termination: Termination
    target: np.ndarray
    fitted_rate: float | None = None
    rejected_steps: int = 0
    ceiling_exceeded: int = 0
    message: str = ""
    phi: np.ndarray | None = field(default=None, repr=False)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.samples])

    @property
    def u(self) -> np.ndarray:
        return np.array([s.u for s in self.samples])

    @property
    def K(self) -> np.ndarray:
        return np.array([s.K for s in self.samples])

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    @property
    def converged(self) -> bool:
        return self.termination is Termination.CONVERGED

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.final.K - self.target)))


def calabi_energy(geometry, target=None) -> float:
    """``sum_i (K_i - Kbar_i)^2``; ``geometry`` is a GeometryState or a curvature vector."""
    K = geometry.K if isinstance(geometry, GeometryState) else np.asarray(geometry, dtype=float)
    if target is None:
        return float(K @ K)
    target = np.asarray(target, dtype=float)
    if target.shape != K.shape:
        raise DimensionMismatch(f"curvature {K.shape} vs target {target.shape}")
    d = K - target
    return float(d @ d)


def flow_velocity(lap: DualLaplacian, K, target=None) -> np.ndarray:
    """``du/dt = L (Kbar - K)``; equals ``-grad_u C / 2`` when ``Kbar = 0``."""
    K = np.asarray(K, dtype=float)
    if K.shape != (lap.n,):
        raise DimensionMismatch(f"curvature of length {K.shape} for {lap.n} vertices")
    if target is None:
        return -lap.matvec(K)
    target = np.asarray(target, dtype=float)
    if target.shape != K.shape:
        raise DimensionMismatch(f"curvature {K.shape} vs target {target.shape}")
    return lap.matvec(target - K)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


class _Field:
    """Vector field of the flow with the geometry at the last evaluated point."""

    def __init__(self, surface, phi, target):
        self.surface = surface
        self.phi = phi
        self.target = target
        self.evaluations = 0

    def state(self, u):
        packing = WeightedPacking(self.surface, r_from_u(u), self.phi)
        geometry = curvatures(packing)
        lap = assemble(packing, geometry)
        self.evaluations += 1
        return geometry.K, lap

    def __call__(self, u):
        K, lap = self.state(u)
        return lap.matvec(self.target - K), K, lap


def integrate(packing0: WeightedPacking, config: FlowConfig | None = None, *, raise_on_failure=False):
    """Run the flow from ``packing0`` until convergence or a stopping rule fires.

    Every accepted step is recorded. Returns a :class:`FlowTrajectory`; with
    ``raise_on_failure`` a blow-up or step-size underflow raises instead.
    """
    config = config or FlowConfig()
    surface = packing0.surface
    n = surface.n_vertices
    target = config.target_for(n)
    field_ = _Field(surface, packing0.phi, target)

    u = np.array(packing0.u, dtype=float)
    if np.max(u) >= -config.eps_u:
        raise BlowupGuard("initial packing already violates the blow-up guard", u=u)
    f0, K, lap = field_(u)
    energy = calabi_energy(K, target)
    t, h = 0.0, config.h0

    def lam(lap_, k):
        if config.lambda_every and k % config.lambda_every == 0:
            return min_eigenvalue(lap_, tol=1e-9)
        return None

    samples = [Sample(t, u.copy(), K.copy(), energy, 0.0, lam(lap, 0))]
    rejected = 0
    ceiling = int(K.max() > config.curvature_ceiling)
    termination, message = None, ""
    steps = 0

    while True:
        if np.max(np.abs(K - target)) < config.tol:
            termination = Termination.CONVERGED
            break
        if t >= config.t_max:
            termination = Termination.MAX_TIME
            break
        if steps >= config.max_steps:
            termination = Termination.MAX_STEPS
            break

        h = min(h, config.t_max - t)
        guard_hit = False
        while True:
            if h < MIN_STEP:
                termination = Termination.BLOWUP_GUARD if guard_hit else Termination.STEP_FAILURE
                message = f"step size fell below {MIN_STEP:g} at t={t:.6g}"
                break
            trial = _dp_step(field_, u, f0, h, config.eps_u)
            if trial is None:
                guard_hit = True
                h *= 0.25
                continue
            u_new, f_new, K_new, lap_new, err_vec = trial
            scale = config.atol + config.rtol * np.maximum(np.abs(u), np.abs(u_new))
            err = float(np.max(np.abs(err_vec) / scale))
            if err > 1.0:
                h *= max(0.2, 0.9 * err ** -0.2)
                rejected += 1
                continue
            if np.max(u_new) >= -config.eps_u:
                guard_hit = True
                h *= 0.25
                rejected += 1
                continue
            energy_new = calabi_energy(K_new, target)
            if energy_new > energy:
                h *= 0.5
                rejected += 1
                continue
            break
        if termination is not None:
            break

        steps += 1
        t += h
        u, f0, K, lap, energy = u_new, f_new, K_new, lap_new, energy_new
        ceiling += int(K.max() > config.curvature_ceiling)
        samples.append(Sample(t, u.copy(), K.copy(), energy, h, lam(lap, steps)))
        h *= min(5.0, 0.9 * max(err, 1e-10) ** -0.2)

    if samples[-1].lambda1 is None and termination is Termination.CONVERGED:
        samples[-1].lambda1 = min_eigenvalue(lap, tol=1e-9)

    traj = FlowTrajectory(
        samples,
        termination,
        target,
        fitted_rate=fit_decay_rate(samples, config.tail_fraction),
        rejected_steps=rejected,
        ceiling_exceeded=ceiling,
        message=message,
        phi=packing0.phi,
    )
    log.info(
        "flow %s after %d steps, t=%.6g, energy=%.3e", termination.value, steps, t, energy
    )
    if raise_on_failure:
        if termination is Termination.BLOWUP_GUARD:
            raise BlowupGuard(message or "u approached 0", vertex=int(np.argmax(u)), u=u)
        if termination is Termination.STEP_FAILURE:
            raise StepFailure(message)
    return traj


def _dp_step(field_, u, f0, h, eps_u):
    """One Dormand-Prince step; None when a stage leaves the domain."""
    k = [f0]
    try:
        for s in range(1, 7):
            us = u + h * sum(a * kk for a, kk in zip(_A[s], k))
            if np.max(us) >= -eps_u:
                return None
            if s < 6:
                k.append(field_(us)[0])
            else:
                f_new, K_new, lap_new = field_(us)
                k.append(f_new)
    except (DomainError, TriangleInequalityViolation, FloatingPointError):
        return None
    err = h * sum(e * kk for e, kk in zip(_E, k))
    return us, f_new, K_new, lap_new, err


def fit_decay_rate(samples, tail_fraction=0.25) -> float | None:
    """Least-squares slope of ``ln C(t)`` over the last ``tail_fraction`` of samples."""
    m = len(samples)
    start = int(math.floor(m * (1 - tail_fraction)))
    tail = samples[start:]
    if len(tail) < 3:
        return None
    t = np.array([s.t for s in tail])
    c = np.array([s.energy for s in tail])
    if np.any(c <= 0) or np.ptp(t) == 0:
        return None
    slope, _ = np.polyfit(t, np.log(c), 1)
    return float(slope)


@dataclass
class RadiusFloorReport:
    """Comparison of a zero-weight trajectory with the a priori radius floor.

    The floor is ``tanh(r_i(t)/2) >= c1 exp(-c2 t)``, equivalently
    ``r_i(t) >= ln((1 + c1 e^{-c2 t}) / (1 - c1 e^{-c2 t}))``, with
    ``c1 = min_i tanh(r_i(0)/2)`` and ``c2 = d^2 pi (2 + cosh 1)``.
    """

    c1: float
    c2: float
    holds: bool
    tanh_form_holds: bool
    worst_margin: float
    violations: list = field(default_factory=list)


def radius_floor_check(trajectory: FlowTrajectory, surface) -> RadiusFloorReport:
    if trajectory.phi is not None and np.any(trajectory.phi):
        raise DomainError("the radius floor constants are only valid for zero weights")
    d = surface.max_degree
    c2 = d * d * math.pi * (2 + math.cosh(1.0))
    log_c1 = float(np.min(trajectory.samples[0].u))
    c1 = math.exp(log_c1)
    violations = []
    tanh_ok = True
    worst = math.inf
    for s in trajectory.samples:
        log_bound = log_c1 - c2 * s.t  # ln(c1 e^{-c2 t})
        r_bound = float(r_from_u(np.array(log_bound)))
        r = s.r
        margin = float(np.min(r - r_bound))
        worst = min(worst, margin)
        if margin < 0:
            violations.append((s.t, int(np.argmin(r)), margin))
        if np.min(s.u) < log_bound:
            tanh_ok = False
    return RadiusFloorReport(c1, c2, not violations, tanh_ok, worst, violations)
