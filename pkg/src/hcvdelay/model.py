"""Core HCV model: parameters, vector field, equilibria and efficacy algebra.

State is (T, I, V_I, V_NI): uninfected hepatocytes, infected hepatocytes,
infectious virions, noninfectious virions. All rates are per day, all
concentrations per ml.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "TherapyEfficacies",
    "SystemState",
    "Equilibrium",
    "NO_THERAPY",
    "combined_efficacy",
    "vector_field",
    "uninfected_equilibrium",
    "basic_r0",
    "critical_efficacy",
    "endemic_equilibrium",
]


class InvalidModelInput(ValueError):
    """Raised when a domain type is constructed from out-of-range values."""


@dataclass(frozen=True)
class ModelParams:
    """Biological constants of the four-compartment model.

    s      hepatocyte source rate (cells/day/ml)
    r      hepatocyte proliferation rate (1/day)
    t_max  hepatocyte carrying capacity (cells/ml)
    alpha  infection rate (ml/virion/day)
    beta   virion production rate (virions/day)
    d1,d2,d3  death rates of uninfected cells, infected cells, virions (1/day)
    """

    s: float
    r: float
    t_max: float
    alpha: float
    beta: float
    d1: float
    d2: float
    d3: float

    def __post_init__(self):
        for name in ("s", "r", "t_max", "alpha", "beta", "d1", "d2", "d3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidModelInput(f"{name} must be finite and > 0, got {v!r}")
        if self.s > self.d1 * self.t_max:
            # Physiological-realism guideline, not a hard constraint: one of
            # the published parameter tables violates it (the disease-free
            # hepatocyte level then sits slightly above t_max), and the
            # dynamics remain well-posed.
            warnings.warn(
                f"s={self.s} exceeds d1*t_max={self.d1 * self.t_max}: "
                "disease-free hepatocyte level will exceed the carrying capacity",
                stacklevel=2,
            )
        if self.r <= self.d1:
            raise InvalidModelInput(
                f"r={self.r} must exceed d1={self.d1} for a positive "
                "disease-free hepatocyte level"
            )


@dataclass(frozen=True)
class TherapyEfficacies:
    """Drug efficacies: interferon (eta1), ribavirin (eta_r), and the
    attenuation c of interferon's infection-blocking action.

    Zero efficacies are admitted so that the untreated system is a member
    of the family.
    """

    eta1: float
    eta_r: float
    c: float

    def __post_init__(self):
        if not (0 <= self.eta1 < 1):
            raise InvalidModelInput(f"eta1 must lie in [0, 1), got {self.eta1!r}")
        if not (0 <= self.eta_r < 1):
            raise InvalidModelInput(f"eta_r must lie in [0, 1), got {self.eta_r!r}")
        if not (0 < self.c < 1):
            raise InvalidModelInput(f"c must lie in (0, 1), got {self.c!r}")

    @property
    def eta_bar(self) -> float:
        """Fraction of produced virions rendered noninfectious."""
        return 0.5 * (self.eta_r + self.eta1)

    @property
    def infection_factor(self) -> float:
        """Multiplier (1 - c*eta1) on the infection rate."""
        return 1.0 - self.c * self.eta1

    @property
    def production_factor(self) -> float:
        """Multiplier (1 - eta_bar) on infectious-virion production."""
        return 1.0 - self.eta_bar


NO_THERAPY = TherapyEfficacies(eta1=0.0, eta_r=0.0, c=0.5)


@dataclass(frozen=True)
class SystemState:
    """Instantaneous (T, I, V_I, V_NI) concentrations."""

    t_cells: float
    i_cells: float
    v_i: float
    v_ni: float

    def __post_init__(self):
        for name in ("t_cells", "i_cells", "v_i", "v_ni"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidModelInput(f"{name} must be finite, got {v!r}")
            if v < 0:
                raise InvalidModelInput(f"{name} must be non-negative, got {v!r}")

    @property
    def total_virions(self) -> float:
        return self.v_i + self.v_ni

    def as_array(self) -> np.ndarray:
        return np.array([self.t_cells, self.i_cells, self.v_i, self.v_ni])

    @classmethod
    def from_array(cls, x) -> "SystemState":
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]))


@dataclass(frozen=True)
class Equilibrium:
    """A steady state together with the reproduction number that governs it."""

    kind: str  # "uninfected" | "endemic"
    state: SystemState
    r0: float


def combined_efficacy(eff: TherapyEfficacies) -> float:
    """Combined drug efficacy eta, via 1 - eta = (1 - c*eta1)(1 - eta_bar)."""
    return 1.0 - eff.infection_factor * eff.production_factor


def vector_field(
    current: SystemState,
    delayed: SystemState,
    p: ModelParams,
    eff: TherapyEfficacies,
) -> np.ndarray:
    """Right-hand side of the delay system, in units of 1/day.

    The delayed state enters only through the infection term of the
    infected-cell equation (V_I(t-tau) * T(t-tau)).
    """
    k_inf = eff.infection_factor * p.alpha
    t, i, vi, vni = current.t_cells, current.i_cells, current.v_i, current.v_ni
    dT = p.s + p.r * t * (1.0 - (t + i) / p.t_max) - p.d1 * t - k_inf * vi * t
    dI = k_inf * delayed.v_i * delayed.t_cells - p.d2 * i
    dVI = eff.production_factor * p.beta * i - p.d3 * vi
    dVNI = eff.eta_bar * p.beta * i - p.d3 * vni
    return np.array([dT, dI, dVI, dVNI])


def uninfected_equilibrium(p: ModelParams) -> float:
    """Disease-free hepatocyte level T_hat (positive root of the logistic
    balance s + r*T(1 - T/t_max) - d1*T = 0)."""
    rd = p.r - p.d1
    return (p.t_max / (2.0 * p.r)) * (rd + math.sqrt(rd * rd + 4.0 * p.r * p.s / p.t_max))


def _t_star(p: ModelParams, eff: TherapyEfficacies) -> float:
    """Uninfected-cell level at the endemic steady state."""
    return p.d2 * p.d3 / (eff.infection_factor * eff.production_factor * p.alpha * p.beta)


def basic_r0(p: ModelParams, eff: TherapyEfficacies) -> float:
    """Basic reproduction number T_hat / T_star under the given therapy."""
    return uninfected_equilibrium(p) / _t_star(p, eff)


def critical_efficacy(p: ModelParams) -> float:
    """Combined-efficacy threshold above which the infection clears.

    May be <= 0 when even the untreated system has R0 <= 1; the value is
    returned as-is so callers can flag that regime.
    """
    t0_star = p.d2 * p.d3 / (p.alpha * p.beta)
    return 1.0 - t0_star / uninfected_equilibrium(p)


def endemic_equilibrium(p: ModelParams, eff: TherapyEfficacies) -> Equilibrium | None:
    """Interior steady state E2, or None when R0 <= 1.

    T_star comes from the virion/infected-cell balance in closed form; the
    infected-cell level then satisfies a linear equation (the hepatocyte
    balance), which is solved exactly. This is algebraically equivalent to
    the R0-weighted closed form but avoids cancellation at large t_max.
    """
    r0 = basic_r0(p, eff)
    if r0 <= 1.0:
        return None
    ts = _t_star(p, eff)
    i_star = (p.s + p.r * ts * (1.0 - ts / p.t_max) - p.d1 * ts) / (
        p.r * ts / p.t_max + p.d2
    )
    vi_star = eff.production_factor * p.beta * i_star / p.d3
    vni_star = eff.eta_bar * p.beta * i_star / p.d3
    state = SystemState(ts, i_star, vi_star, vni_star)
    return Equilibrium(kind="endemic", state=state, r0=r0)


def uninfected_equilibrium_point(p: ModelParams, eff: TherapyEfficacies) -> Equilibrium:
    """E1 as a full equilibrium record (state plus reproduction number)."""
    t_hat = uninfected_equilibrium(p)
    return Equilibrium(
        kind="uninfected",
        state=SystemState(t_hat, 0.0, 0.0, 0.0),
        r0=basic_r0(p, eff),
    )
