"""Delay-dependent linear stability of the endemic steady state.

The characteristic equation at E2 factors into (lambda + d3) times a cubic
with a delayed linear term,

    lambda^3 + a0 lambda^2 + a1 lambda + a2 + (b1 lambda + b2) e^{-lambda tau} = 0.

Everything here works on the five coefficients of that reduced equation:
the zero-delay Routh-Hurwitz check, the positive-frequency roots of the
squared-modulus polynomial, the ladder of critical delays, the
transversality sign, and the Nyquist-style delay-length bound.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, TherapyEfficacies, endemic_equilibrium, basic_r0

__all__ = [
    "CharCoefficients",
    "OmegaAnalysis",
    "DelayBound",
    "RouthHurwitzCheck",
    "char_coefficients",
    "e1_verdict",
    "routh_hurwitz_zero_delay",
    "omega_analysis",
    "critical_delays",
    "transversality",
    "delay_length_bound",
    "characteristic_residual",
    "track_root",
    "e1_real_roots",
]

# Polynomial residuals are held to 1e-9 relative, transcendental ones to
# 1e-8 of the coefficient scale; the coefficients span ~10 orders of
# magnitude between the two published parameter tables.
POLY_RTOL = 1e-9
TRANSCENDENTAL_RTOL = 1e-8


class StabilityError(ValueError):
    """Raised for inconsistent or out-of-domain stability queries."""


@dataclass(frozen=True)
class CharCoefficients:
    """Coefficients (a0, a1, a2) of the instantaneous cubic and (b1, b2)
    of the delayed term."""

    a0: float
    a1: float
    a2: float
    b1: float
    b2: float

    def __post_init__(self):
        # a0, a1, a2 are sums of positive terms for any valid endemic point
        if not (self.a0 > 0 and self.a1 > 0 and self.a2 > 0):
            raise StabilityError(
                f"a0, a1, a2 must be positive, got ({self.a0}, {self.a1}, {self.a2})"
            )

    @property
    def scale(self) -> float:
        return max(abs(self.a0), abs(self.a1), abs(self.a2), abs(self.b1), abs(self.b2), 1.0)


@dataclass(frozen=True)
class OmegaAnalysis:
    """Positive roots omega of the squared-modulus polynomial
    omega^6 + A1 omega^4 + A2 omega^2 + A3 = 0, sorted descending."""

    a_coeffs: tuple[float, float, float]
    positive_roots: tuple[float, ...]
    simple: tuple[bool, ...]
    omega0: float | None


@dataclass(frozen=True)
class DelayBound:
    """Nyquist-style sufficient delay bound tau_plus with its ingredients."""

    mu_plus: float
    n1: float
    n2: float
    n3: float
    tau_plus: float


@dataclass(frozen=True)
class RouthHurwitzCheck:
    """Zero-delay Routh-Hurwitz verdict with the raw quantities reported."""

    holds: bool
    margin: float  # a0*(a1+b1) - (a2+b2)
    a0_positive: bool
    a1b1_positive: bool
    a2b2_positive: bool

    def __bool__(self) -> bool:
        return self.holds


def char_coefficients(p: ModelParams, eff: TherapyEfficacies) -> CharCoefficients:
    """Characteristic coefficients at the endemic point.

    Fails when R0 <= 1 (no endemic point exists).
    """
    eq = endemic_equilibrium(p, eff)
    if eq is None:
        raise StabilityError(
            f"no endemic equilibrium: R0 = {basic_r0(p, eff):.6g} <= 1"
        )
    ts, istar = eq.state.t_cells, eq.state.i_cells
    g = p.s / ts + p.r * ts / p.t_max
    a0 = p.d2 + p.d3 + g
    a1 = p.d2 * p.d3 + (p.d2 + p.d3) * g
    a2 = p.d2 * p.d3 * g
    b1 = p.d2 * p.r * istar / p.t_max - (
        eff.infection_factor * eff.production_factor * p.alpha * p.beta * ts
    )
    b2 = p.d2 * p.d3 * istar * (p.r / p.t_max + p.d2 / ts) - p.d2 * p.d3 * g
    return CharCoefficients(a0, a1, a2, b1, b2)


def e1_verdict(p: ModelParams, eff: TherapyEfficacies) -> str:
    """Local stability of the disease-free state: 'stable' iff R0 < 1,
    'unstable' iff R0 > 1, 'boundary' at R0 = 1. Independent of the delay."""
    r0 = basic_r0(p, eff)
    if r0 < 1.0:
        return "stable"
    if r0 > 1.0:
        return "unstable"
    return "boundary"


def routh_hurwitz_zero_delay(cc: CharCoefficients) -> RouthHurwitzCheck:
    """Stability of E2 at tau = 0. The margin is a0*(a1+b1) - (a2+b2);
    a zero margin is treated as failure."""
    margin = cc.a0 * (cc.a1 + cc.b1) - (cc.a2 + cc.b2)
    c1 = cc.a0 > 0
    c2 = cc.a1 + cc.b1 > 0
    c3 = cc.a2 + cc.b2 > 0
    return RouthHurwitzCheck(
        holds=bool(c1 and c2 and c3 and margin > 0),
        margin=margin,
        a0_positive=c1,
        a1b1_positive=c2,
        a2b2_positive=c3,
    )


def _omega_poly_residual(x: float, A1: float, A2: float, A3: float) -> float:
    """Relative residual of x^3 + A1 x^2 + A2 x + A3 (x = omega^2)."""
    terms = (x**3, A1 * x**2, A2 * x, A3)
    scale = max(abs(t) for t in terms) or 1.0
    return abs(sum(terms)) / scale


def omega_analysis(cc: CharCoefficients) -> OmegaAnalysis:
    """Positive roots of omega^6 + A1 omega^4 + A2 omega^2 + A3 via the
    companion-matrix eigenvalues of the cubic in x = omega^2."""
    A1 = cc.a0**2 - 2.0 * cc.a1
    A2 = cc.a1**2 - cc.b1**2 - 2.0 * cc.a0 * cc.a2
    A3 = cc.a2**2 - cc.b2**2
    roots = np.roots([1.0, A1, A2, A3])
    xs = []
    for x in roots:
        if abs(x.imag) <= POLY_RTOL * max(1.0, abs(x)) and x.real > 0:
            xs.append(x.real)
    xs.sort(reverse=True)
    # multiplicity: cluster roots closer than 1e-7 relative
    simple = []
    for i, x in enumerate(xs):
        mult = sum(
            1 for y in xs if abs(x - y) <= 1e-7 * max(abs(x), abs(y))
        )
        simple.append(mult == 1)
    omegas = tuple(math.sqrt(x) for x in xs)
    for w, x in zip(omegas, xs):
        res = _omega_poly_residual(x, A1, A2, A3)
        if res > POLY_RTOL:
            raise StabilityError(f"omega root {w} fails residual check ({res:.3e})")
    omega0 = None
    for w, s in zip(omegas, simple):
        if s:
            omega0 = w  # omegas sorted descending: first simple root is largest
            break
    return OmegaAnalysis(
        a_coeffs=(A1, A2, A3),
        positive_roots=omegas,
        simple=tuple(simple),
        omega0=omega0,
    )


def characteristic_residual(lam: complex, cc: CharCoefficients, tau: float) -> complex:
    """lambda^3 + a0 lambda^2 + a1 lambda + a2 + (b1 lambda + b2) e^{-lambda tau}."""
    return (
        lam**3
        + cc.a0 * lam**2
        + cc.a1 * lam
        + cc.a2
        + (cc.b1 * lam + cc.b2) * cmath.exp(-lam * tau)
    )


def _cos_sin_at(cc: CharCoefficients, omega: float) -> tuple[float, float]:
    """cos(omega*tau) and sin(omega*tau) solved from the real/imaginary
    parts of the characteristic equation at lambda = i*omega."""
    den = cc.b2**2 + (cc.b1 * omega) ** 2
    re = cc.a0 * omega**2 - cc.a2
    im = omega**3 - cc.a1 * omega
    cosv = (re * cc.b2 + im * cc.b1 * omega) / den
    sinv = (re * cc.b1 * omega - im * cc.b2) / den
    return cosv, sinv


def critical_delays(cc: CharCoefficients, omega0: float, j_max: int) -> list[float]:
    """Critical delays tau_j, j = 0..j_max, at which lambda = i*omega0
    crosses the imaginary axis.

    The principal branch of arccos is corrected against the paired sine
    equation so both the real and imaginary parts of the characteristic
    equation vanish at every returned delay.
    """
    if omega0 <= 0:
        raise StabilityError(f"omega0 must be positive, got {omega0}")
    cosv, sinv = _cos_sin_at(cc, omega0)
    if abs(cosv) > 1.0 + 1e-9:
        raise StabilityError(
            f"arccos argument {cosv} outside [-1, 1]: inconsistent (cc, omega0)"
        )
    theta = math.acos(max(-1.0, min(1.0, cosv)))
    if sinv < 0:
        theta = 2.0 * math.pi - theta
    taus = [theta / omega0 + 2.0 * math.pi * j / omega0 for j in range(j_max + 1)]
    scale = cc.scale
    for tau in taus:
        res = abs(characteristic_residual(1j * omega0, cc, tau))
        if res > TRANSCENDENTAL_RTOL * scale:
            raise StabilityError(
                f"critical delay tau={tau} fails residual check ({res:.3e})"
            )
    return taus


def transversality(cc: CharCoefficients, omega0: float) -> int:
    """Sign of the eigenvalue crossing speed at lambda = i*omega0.

    +1 certifies left-to-right crossing, 0 is degenerate (the simple-root
    assumption fails).
    """
    expr = (
        2.0 * omega0**6
        + (cc.a0**2 - 2.0 * cc.a1) * omega0**4
        + (cc.b2**2 - cc.a2**2)
    )
    scale = max(omega0**6, cc.scale**2, 1.0)
    if abs(expr) <= 1e-12 * scale:
        return 0
    return 1 if expr > 0 else -1


def delay_length_bound(cc: CharCoefficients) -> DelayBound:
    """Sufficient delay bound tau_plus below which E2 certainly remains
    linearly stable (Nyquist estimate).

    Requires the zero-delay Routh-Hurwitz condition and N3 > 0; degenerate
    N1 = 0 falls back to the linear solve when N2 > 0.
    """
    rh = routh_hurwitz_zero_delay(cc)
    if not rh:
        raise StabilityError("delay bound needs zero-delay stability (Routh-Hurwitz)")
    mu_plus = (abs(cc.b1) + math.sqrt(cc.b1**2 + 4.0 * cc.a0 * (abs(cc.a2) + abs(cc.b2)))) / (
        2.0 * cc.a0
    )
    n1 = 0.5 * abs(cc.b2 - cc.a0 * cc.b1) * mu_plus**2
    n2 = cc.b1 * mu_plus**2 + cc.a0 * cc.b2
    n3 = cc.a0 * cc.a1 - cc.a2 - cc.b2 + cc.a0 * cc.b1
    if n3 <= 0:
        raise StabilityError(
            f"delay-length bound not applicable: N3 = {n3:.6g} <= 0"
        )
    if n1 == 0.0:
        if n2 > 0:
            tau_plus = n3 / n2
        else:
            raise StabilityError("degenerate bound: N1 = 0 and N2 <= 0")
    else:
        tau_plus = (-n2 + math.sqrt(n2**2 + 4.0 * n1 * n3)) / (2.0 * n1)
    return DelayBound(mu_plus=mu_plus, n1=n1, n2=n2, n3=n3, tau_plus=tau_plus)


def track_root(
    cc: CharCoefficients,
    tau: float,
    lam0: complex,
    max_iter: int = 60,
    tol: float = 1e-13,
) -> complex:
    """Newton-polish a root of the transcendental characteristic equation,
    starting from lam0. Used for finite-difference continuation across the
    critical delay."""
    lam = complex(lam0)
    scale = cc.scale
    for _ in range(max_iter):
        f = characteristic_residual(lam, cc, tau)
        df = (
            3.0 * lam**2
            + 2.0 * cc.a0 * lam
            + cc.a1
            + (cc.b1 - tau * (cc.b1 * lam + cc.b2)) * cmath.exp(-lam * tau)
        )
        step = f / df
        lam -= step
        if abs(step) <= tol * max(1.0, abs(lam)):
            break
    if abs(characteristic_residual(lam, cc, tau)) > 1e-9 * scale:
        raise StabilityError(f"root tracking failed to converge at tau={tau}")
    return lam


def e1_real_roots(
    p: ModelParams,
    eff: TherapyEfficacies,
    tau: float,
    lam_max: float = 50.0,
    n_grid: int = 400,
) -> list[float]:
    """Real roots with lambda >= 0 of the disease-free characteristic factor
    lambda^2 + (d2+d3) lambda + d2 d3 (1 - R0 e^{-lambda tau}).

    Numerical verification of the delay-independent verdict: a positive
    real root exists iff R0 > 1.
    """
    r0 = basic_r0(p, eff)

    def f(lam: float) -> float:
        return lam**2 + (p.d2 + p.d3) * lam + p.d2 * p.d3 * (
            1.0 - r0 * math.exp(-lam * tau)
        )

    grid = np.linspace(0.0, lam_max, n_grid)
    vals = [f(x) for x in grid]
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            lo, hi = grid[i], grid[i + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if f(lo) * f(mid) <= 0:
                    hi = mid
                else:
                    lo = mid
            roots.append(0.5 * (lo + hi))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    return roots
