"""Hopf normal form at a critical delay of the endemic steady state.

Given a verified critical pair (omega0, tau_j) from the linear-stability
analysis, this module computes the eigenvectors of the infinitesimal
generator and its adjoint, the normalized bilinear pairing, the quadratic
and cubic center-manifold coefficients (including the two constant-vector
4x4 solves), and the summary quantities that decide the direction of the
bifurcation, the stability of the emerging cycle and its period trend.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .linalg import solve_pivoted
from .model import Equilibrium, ModelParams, TherapyEfficacies, endemic_equilibrium
from .stability import CharCoefficients, StabilityError, characteristic_residual

__all__ = [
    "EigenData",
    "CenterManifoldCoefficients",
    "HopfSummary",
    "jacobian_pair",
    "characteristic_matrix",
    "eigen_data",
    "g_coefficients",
    "lambda_prime",
    "hopf_summary",
]


@dataclass(frozen=True)
class EigenData:
    """Eigenvector components of the generator (q = (1, a, b, c1)) and of
    its adjoint (q* = D (1, a*, b*, 0)), with the normalization D and the
    hepatocyte diagonal entry F of the Jacobian."""

    a: complex
    b: complex
    c1: complex
    a_star: complex
    b_star: complex
    d_norm: complex
    f_diag: float


@dataclass(frozen=True)
class CenterManifoldCoefficients:
    g20: complex
    g11: complex
    g02: complex
    g21: complex
    e1_vec: np.ndarray  # constant vector of the second-harmonic correction
    e2_vec: np.ndarray  # constant vector of the mean-flow correction
    cond_e1: float
    cond_e2: float


@dataclass(frozen=True)
class HopfSummary:
    c11_0: complex
    mu2: float
    beta2: float
    t2: float
    lambda_prime: complex

    @property
    def direction(self) -> str:
        return "forward" if self.mu2 > 0 else "backward"

    @property
    def cycle_stability(self) -> str:
        return "stable" if self.beta2 < 0 else "unstable"

    @property
    def period_trend(self) -> str:
        return "increasing" if self.t2 > 0 else "decreasing"


def jacobian_pair(
    p: ModelParams, eff: TherapyEfficacies, eq: Equilibrium
) -> tuple[np.ndarray, np.ndarray]:
    """(J0, J1): Jacobians of the vector field with respect to the current
    and the delayed state, evaluated at the given equilibrium."""
    ts, istar, vis = eq.state.t_cells, eq.state.i_cells, eq.state.v_i
    k_inf = eff.infection_factor * p.alpha
    f_diag = (
        p.r
        - p.d1
        - 2.0 * p.r * ts / p.t_max
        - p.r * istar / p.t_max
        - k_inf * vis
    )
    j0 = np.array(
        [
            [f_diag, -p.r * ts / p.t_max, -k_inf * ts, 0.0],
            [0.0, -p.d2, 0.0, 0.0],
            [0.0, eff.production_factor * p.beta, -p.d3, 0.0],
            [0.0, eff.eta_bar * p.beta, 0.0, -p.d3],
        ]
    )
    j1 = np.zeros((4, 4))
    j1[1, 0] = k_inf * vis
    j1[1, 2] = k_inf * ts
    return j0, j1


def characteristic_matrix(
    p: ModelParams, eff: TherapyEfficacies, lam: complex, tau: float
) -> np.ndarray:
    """Delta(lambda) = lambda I - J0 - J1 e^{-lambda tau} at the endemic point."""
    eq = endemic_equilibrium(p, eff)
    if eq is None:
        raise StabilityError("no endemic equilibrium")
    j0, j1 = jacobian_pair(p, eff, eq)
    return lam * np.eye(4) - j0 - j1 * cmath.exp(-lam * tau)


def eigen_data(
    p: ModelParams,
    eff: TherapyEfficacies,
    omega0: float,
    tau_j: float,
) -> EigenData:
    """Eigenvectors and normalization at the critical pair (omega0, tau_j).

    q(0) = (1, a, b, c1) solves Delta(i omega0) q = 0; the adjoint row
    vector (1, a*, b*, 0) annihilates Delta(-i omega0) on the left; D is
    fixed by the bilinear pairing <q*, q> = 1.
    """
    eq = endemic_equilibrium(p, eff)
    if eq is None:
        raise StabilityError("no endemic equilibrium")
    ts, istar, vis = eq.state.t_cells, eq.state.i_cells, eq.state.v_i
    k_inf = eff.infection_factor * p.alpha
    f_diag = (
        p.r - p.d1 - 2.0 * p.r * ts / p.t_max - p.r * istar / p.t_max - k_inf * vis
    )
    iw = 1j * omega0
    phase = cmath.exp(-iw * tau_j)  # e^{-i omega0 tau_j}
    denom = (iw + p.d2) * (iw + p.d3) - (
        eff.infection_factor * eff.production_factor * p.alpha * p.beta * ts * phase
    )
    scale = abs((iw + p.d2) * (iw + p.d3))
    if abs(denom) < 1e-12 * max(scale, 1.0):
        raise StabilityError("degenerate eigenproblem: vanishing denominator for a")
    a = (iw + p.d3) * k_inf * vis * phase / denom
    b = eff.production_factor * p.beta * a / (iw + p.d3)
    c1 = eff.eta_bar * p.beta * a / (iw + p.d3)
    # adjoint components from the left null row of Delta(-i omega0)
    a_star = -(iw + f_diag) / (k_inf * vis * phase.conjugate())
    b_star = (p.r * ts / p.t_max + (-iw + p.d2) * a_star) / (
        eff.production_factor * p.beta
    )
    # <q*, q> = conj(D) * S with S below; choose D accordingly
    s_pair = (
        1.0
        + a * a_star.conjugate()
        + b * b_star.conjugate()
        + tau_j * phase * k_inf * a_star.conjugate() * (vis + b * ts)
    )
    d_norm = (1.0 / s_pair).conjugate()
    return EigenData(
        a=a, b=b, c1=c1, a_star=a_star, b_star=b_star, d_norm=d_norm, f_diag=f_diag
    )


def bilinear_pairing(
    ed: EigenData,
    p: ModelParams,
    eff: TherapyEfficacies,
    omega0: float,
    tau_j: float,
) -> complex:
    """<q*, q> under the stored normalization (should be 1)."""
    eq = endemic_equilibrium(p, eff)
    ts, vis = eq.state.t_cells, eq.state.v_i
    k_inf = eff.infection_factor * p.alpha
    phase = cmath.exp(-1j * omega0 * tau_j)
    s_pair = (
        1.0
        + ed.a * ed.a_star.conjugate()
        + ed.b * ed.b_star.conjugate()
        + tau_j * phase * k_inf * ed.a_star.conjugate() * (vis + ed.b * ts)
    )
    return ed.d_norm.conjugate() * s_pair


def g_coefficients(
    ed: EigenData,
    p: ModelParams,
    eff: TherapyEfficacies,
    omega0: float,
    tau_j: float,
) -> CenterManifoldCoefficients:
    """Quadratic and cubic center-manifold coefficients.

    The quadratic coefficients come from the second-order expansion of the
    nonlinearity: the hepatocyte equation carries -r/t_max (x1^2 + x1 x2)
    and -(1-c eta1) alpha x1(0) x3(0); the infected-cell equation carries
    +(1-c eta1) alpha x1(-1) x3(-1). The second-harmonic and mean-flow
    constant vectors solve Delta(2 i omega0) E1 = 2 F_zz and
    Delta(0) E2 = 2 F_zzbar.
    """
    eq = endemic_equilibrium(p, eff)
    if eq is None:
        raise StabilityError("no endemic equilibrium")
    a, b = ed.a, ed.b
    as_c = ed.a_star.conjugate()
    d_bar = ed.d_norm.conjugate()
    k = tau_j * d_bar
    r_tm = p.r / p.t_max
    ai = eff.infection_factor * p.alpha  # (1 - c eta1) alpha
    wt = omega0 * tau_j
    e_m2 = cmath.exp(-2j * wt)
    e_p2 = cmath.exp(2j * wt)
    e_m1 = cmath.exp(-1j * wt)
    e_p1 = cmath.exp(1j * wt)

    g20 = -2.0 * k * ((1.0 + a) * r_tm + ai * b - ai * b * as_c * e_m2)
    g11 = -2.0 * k * ((1.0 + a.real) * r_tm + ai * b.real - ai * b.real * as_c)
    g02 = -2.0 * k * (
        (1.0 + a.conjugate()) * r_tm
        + ai * b.conjugate()
        - ai * b.conjugate() * as_c * e_p2
    )

    # quadratic forcing vectors (z^2 and z zbar coefficients of the nonlinearity)
    f_zz = np.array(
        [-(1.0 + a) * r_tm - ai * b, ai * b * e_m2, 0.0, 0.0], dtype=complex
    )
    f_zzbar = np.array(
        [-(1.0 + a.real) * r_tm - ai * b.real, ai * b.real, 0.0, 0.0], dtype=complex
    )

    m1 = characteristic_matrix(p, eff, 2j * omega0, tau_j)
    m2 = characteristic_matrix(p, eff, 0.0, tau_j)
    e1_vec, cond_e1 = solve_pivoted(m1, 2.0 * f_zz)
    e2_vec, cond_e2 = solve_pivoted(m2, 2.0 * f_zzbar)

    q0 = np.array([1.0, a, b, ed.c1], dtype=complex)
    q0c = q0.conjugate()

    def w20(theta: float) -> np.ndarray:
        ph = cmath.exp(1j * wt * theta)
        return (
            (1j * g20 / wt) * q0 * ph
            + (1j * g02.conjugate() / (3.0 * wt)) * q0c / ph
            + e1_vec * cmath.exp(2j * wt * theta)
        )

    def w11(theta: float) -> np.ndarray:
        ph = cmath.exp(1j * wt * theta)
        return (
            (-1j * g11 / wt) * q0 * ph
            + (1j * g11.conjugate() / wt) * q0c / ph
            + e2_vec
        )

    w20_0, w20_m = w20(0.0), w20(-1.0)
    w11_0, w11_m = w11(0.0), w11(-1.0)

    g21 = (
        2.0
        * k
        * (
            -r_tm * (w20_0[0] + 2.0 * w11_0[0])
            - r_tm
            * (
                a * w11_0[0]
                + 0.5 * a.conjugate() * w20_0[0]
                + 0.5 * w20_0[1]
                + w11_0[1]
            )
            - ai * (b * w11_0[0] + 0.5 * b.conjugate() * w20_0[0] + 0.5 * w20_0[2] + w11_0[2])
            + as_c
            * ai
            * (
                0.5 * e_p1 * w20_m[2]
                + e_m1 * w11_m[2]
                + 0.5 * b.conjugate() * e_p1 * w20_m[0]
                + b * e_m1 * w11_m[0]
            )
        )
    )
    return CenterManifoldCoefficients(
        g20=g20,
        g11=g11,
        g02=g02,
        g21=g21,
        e1_vec=e1_vec,
        e2_vec=e2_vec,
        cond_e1=cond_e1,
        cond_e2=cond_e2,
    )


def lambda_prime(cc: CharCoefficients, omega0: float, tau_j: float) -> complex:
    """d lambda / d tau at the critical pair, via implicit differentiation
    of the characteristic equation."""
    lam = 1j * omega0
    num = (cc.b1 * lam + cc.b2) * lam * cmath.exp(-lam * tau_j)
    den = (
        3.0 * lam**2
        + 2.0 * cc.a0 * lam
        + cc.a1
        + (cc.b1 - tau_j * (cc.b1 * lam + cc.b2)) * cmath.exp(-lam * tau_j)
    )
    if abs(den) < 1e-12 * max(1.0, abs(num)):
        raise StabilityError("degenerate crossing: vanishing derivative denominator")
    res = abs(characteristic_residual(lam, cc, tau_j))
    if res > 1e-6 * cc.scale:
        raise StabilityError("(omega0, tau_j) is not a critical pair")
    return num / den


def hopf_summary(
    cmc: CenterManifoldCoefficients,
    lp: complex,
    omega0: float,
    tau_j: float,
) -> HopfSummary:
    """First Lyapunov quantity and the derived direction/stability/period
    indicators of the bifurcating periodic solution."""
    wt = omega0 * tau_j
    c11_0 = (1j / (2.0 * wt)) * (
        cmc.g20 * cmc.g11 - 2.0 * abs(cmc.g11) ** 2 - abs(cmc.g02) ** 2 / 3.0
    ) + cmc.g21 / 2.0
    mu2 = -c11_0.real / lp.real
    beta2 = 2.0 * c11_0.real
    t2 = -(c11_0.imag + mu2 * lp.imag) / wt
    return HopfSummary(c11_0=c11_0, mu2=mu2, beta2=beta2, t2=t2, lambda_prime=lp)
