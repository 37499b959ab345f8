"""Method-of-steps integration of the delay system.

Fixed-step classical RK4 with cubic-Hermite dense output. The step is
aligned so the delay is an integer multiple of it, which keeps the
derivative discontinuities propagating from t = 0 on grid nodes and lets
every delayed stage lookup land on an already-computed node or midpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, SystemState, TherapyEfficacies

__all__ = [
    "HistorySpec",
    "IntegrationConfig",
    "Trajectory",
    "StepSizeError",
    "BlowUpError",
    "integrate",
    "interpolate",
    "svr_time",
    "classify_longrun",
]

BLOWUP_LIMIT = 1e15
NEGATIVE_CLAMP_RTOL = 1e-12


class StepSizeError(ValueError):
    pass


class BlowUpError(RuntimeError):
    def __init__(self, t: float, state: tuple):
        self.t = t
        self.state = state
        super().__init__(f"integration blew up at t={t:.6g}: state={state}")


class NegativeStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class HistorySpec:
    """Constant pre-history on [-tau, 0]."""

    values: SystemState


@dataclass(frozen=True)
class IntegrationConfig:
    dt: float
    t_end: float
    dense_output: bool = True

    def __post_init__(self):
        if not (self.dt > 0):
            raise StepSizeError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise StepSizeError(f"t_end must be non-negative, got {self.t_end}")


@dataclass
class Trajectory:
    """Node times, states and stored derivatives (for Hermite interpolation)."""

    times: np.ndarray
    states: np.ndarray  # (n, 4)
    derivs: np.ndarray  # (n, 4)
    clamp_count: int = 0

    def state_at(self, index: int) -> SystemState:
        return SystemState.from_array(self.states[index])

    @property
    def final_state(self) -> SystemState:
        return self.state_at(-1)


def _hermite(t, t0, t1, y0, y1, d0, d1):
    h = t1 - t0
    u = (t - t0) / h
    u2 = u * u
    u3 = u2 * u
    h00 = 2 * u3 - 3 * u2 + 1
    h10 = u3 - 2 * u2 + u
    h01 = -2 * u3 + 3 * u2
    h11 = u3 - u2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def integrate(
    p: ModelParams,
    eff: TherapyEfficacies,
    tau: float,
    h: HistorySpec,
    cfg: IntegrationConfig,
) -> Trajectory:
    """Integrate from the constant history with classical RK4.

    For tau > 0 the step is snapped to tau / n with n = round(tau / dt)
    (n >= 16 required); the delayed state is read from the stored past by
    cubic Hermite interpolation. For tau = 0 the scheme is plain RK4 on
    the underlying ODE system.
    """
    if tau < 0:
        raise StepSizeError(f"tau must be non-negative, got {tau}")
    if tau > 0:
        n_sub = round(tau / cfg.dt)
        if n_sub < 16 or cfg.dt > tau / 16 * (1 + 1e-12):
            raise StepSizeError(
                f"dt={cfg.dt} too large for tau={tau}: need dt <= tau/16"
            )
        dt = tau / n_sub
    else:
        n_sub = 0
        dt = cfg.dt
    n_steps = int(math.floor(cfg.t_end / dt * (1.0 + 1e-12)))

    s_, r_, tm, al, be = p.s, p.r, p.t_max, p.alpha, p.beta
    d1, d2, d3 = p.d1, p.d2, p.d3
    k_inf = eff.infection_factor * al
    k_vi = eff.production_factor * be
    k_vni = eff.eta_bar * be

    def rhs(t_c, i_c, vi_c, vni_c, t_d, vi_d):
        dT = s_ + r_ * t_c * (1.0 - (t_c + i_c) / tm) - d1 * t_c - k_inf * vi_c * t_c
        dI = k_inf * vi_d * t_d - d2 * i_c
        dVI = k_vi * i_c - d3 * vi_c
        dVNI = k_vni * i_c - d3 * vni_c
        return dT, dI, dVI, dVNI

    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, 4))
    derivs = np.empty((n_steps + 1, 4))

    hv = h.values
    h_t, h_vi = hv.t_cells, hv.v_i
    y = (hv.t_cells, hv.i_cells, hv.v_i, hv.v_ni)

    clamp_count = 0
    times[0] = 0.0
    states[0] = y
    if tau == 0.0:
        derivs[0] = rhs(y[0], y[1], y[2], y[3], y[0], y[2])
    else:
        derivs[0] = rhs(y[0], y[1], y[2], y[3], h_t, h_vi)

    for k in range(n_steps):
        t0v, i0v, vi0v, vni0v = states[k]
        if tau == 0.0:
            a1_ = rhs(t0v, i0v, vi0v, vni0v, t0v, vi0v)
            t_m = t0v + 0.5 * dt * a1_[0]
            i_m = i0v + 0.5 * dt * a1_[1]
            vi_m = vi0v + 0.5 * dt * a1_[2]
            vni_m = vni0v + 0.5 * dt * a1_[3]
            a2_ = rhs(t_m, i_m, vi_m, vni_m, t_m, vi_m)
            t_m = t0v + 0.5 * dt * a2_[0]
            i_m = i0v + 0.5 * dt * a2_[1]
            vi_m = vi0v + 0.5 * dt * a2_[2]
            vni_m = vni0v + 0.5 * dt * a2_[3]
            a3_ = rhs(t_m, i_m, vi_m, vni_m, t_m, vi_m)
            t_e = t0v + dt * a3_[0]
            i_e = i0v + dt * a3_[1]
            vi_e = vi0v + dt * a3_[2]
            vni_e = vni0v + dt * a3_[3]
            a4_ = rhs(t_e, i_e, vi_e, vni_e, t_e, vi_e)
        else:
            j = k - n_sub
            # delayed values at stage times t_k - tau, t_k - tau + dt/2, t_k - tau + dt
            if j < 0:
                td0, vid0 = h_t, h_vi
            else:
                td0, vid0 = states[j, 0], states[j, 2]
            if j + 1 < 0:
                td2, vid2 = h_t, h_vi
            else:
                td2, vid2 = states[j + 1, 0], states[j + 1, 2]
            if j < 0:
                tdm, vidm = h_t, h_vi
            else:
                y0n, y1n = states[j], states[j + 1]
                d0n, d1n = derivs[j], derivs[j + 1]
                tmid = times[j] + 0.5 * dt
                tdm = _hermite(tmid, times[j], times[j + 1], y0n[0], y1n[0], d0n[0], d1n[0])
                vidm = _hermite(tmid, times[j], times[j + 1], y0n[2], y1n[2], d0n[2], d1n[2])

            a1_ = rhs(t0v, i0v, vi0v, vni0v, td0, vid0)
            t_m = t0v + 0.5 * dt * a1_[0]
            i_m = i0v + 0.5 * dt * a1_[1]
            vi_m = vi0v + 0.5 * dt * a1_[2]
            vni_m = vni0v + 0.5 * dt * a1_[3]
            a2_ = rhs(t_m, i_m, vi_m, vni_m, tdm, vidm)
            t_m = t0v + 0.5 * dt * a2_[0]
            i_m = i0v + 0.5 * dt * a2_[1]
            vi_m = vi0v + 0.5 * dt * a2_[2]
            vni_m = vni0v + 0.5 * dt * a2_[3]
            a3_ = rhs(t_m, i_m, vi_m, vni_m, tdm, vidm)
            t_e = t0v + dt * a3_[0]
            i_e = i0v + dt * a3_[1]
            vi_e = vi0v + dt * a3_[2]
            vni_e = vni0v + dt * a3_[3]
            a4_ = rhs(t_e, i_e, vi_e, vni_e, td2, vid2)

        c = dt / 6.0
        new = [
            t0v + c * (a1_[0] + 2 * a2_[0] + 2 * a3_[0] + a4_[0]),
            i0v + c * (a1_[1] + 2 * a2_[1] + 2 * a3_[1] + a4_[1]),
            vi0v + c * (a1_[2] + 2 * a2_[2] + 2 * a3_[2] + a4_[2]),
            vni0v + c * (a1_[3] + 2 * a2_[3] + 2 * a3_[3] + a4_[3]),
        ]
        scale = max(1.0, abs(new[0]), abs(new[1]), abs(new[2]), abs(new[3]))
        for idx in range(4):
            v = new[idx]
            if v < 0.0:
                if v > -NEGATIVE_CLAMP_RTOL * scale:
                    new[idx] = 0.0
                    clamp_count += 1
                else:
                    raise NegativeStateError(
                        f"component {idx} went negative ({v:.3e}) at "
                        f"t={times[k] + dt:.6g}; model positivity violated"
                    )
        if scale > BLOWUP_LIMIT:
            raise BlowUpError(times[k] + dt, tuple(new))

        times[k + 1] = times[k] + dt
        states[k + 1] = new
        if tau == 0.0:
            derivs[k + 1] = rhs(new[0], new[1], new[2], new[3], new[0], new[2])
        else:
            j1 = k + 1 - n_sub
            if j1 < 0:
                tdn, vidn = h_t, h_vi
            else:
                tdn, vidn = states[j1, 0], states[j1, 2]
            derivs[k + 1] = rhs(new[0], new[1], new[2], new[3], tdn, vidn)

    return Trajectory(times=times, states=states, derivs=derivs, clamp_count=clamp_count)


def interpolate(traj: Trajectory, t: float) -> SystemState:
    """Cubic Hermite dense output; exact at grid nodes."""
    times = traj.times
    if t < times[0] or t > times[-1]:
        raise ValueError(f"t={t} outside trajectory span [{times[0]}, {times[-1]}]")
    k = int(np.searchsorted(times, t, side="right")) - 1
    if k >= len(times) - 1:
        return traj.state_at(-1)
    if t == times[k]:
        return traj.state_at(k)
    y = _hermite(
        t, times[k], times[k + 1], traj.states[k], traj.states[k + 1],
        traj.derivs[k], traj.derivs[k + 1],
    )
    return SystemState.from_array(np.maximum(y, 0.0))


def svr_time(traj: Trajectory, threshold: float = 100.0) -> float | None:
    """First time total virions fall below the detection threshold and
    stay below it through the end of the trajectory, located to a tenth
    of the grid spacing by bisection on the dense output."""
    vtot = traj.states[:, 2] + traj.states[:, 3]
    below = vtot < threshold
    if not below[-1]:
        return None
    # last index at or above threshold
    above_idx = np.nonzero(~below)[0]
    if len(above_idx) == 0:
        return float(traj.times[0])
    k = int(above_idx[-1])
    lo, hi = traj.times[k], traj.times[k + 1]
    dt_target = (traj.times[1] - traj.times[0]) / 10.0
    while hi - lo > dt_target:
        mid = 0.5 * (lo + hi)
        if interpolate(traj, mid).total_virions < threshold:
            hi = mid
        else:
            lo = mid
    return float(hi)


def _window_peaks(t: np.ndarray, v: np.ndarray) -> list[float]:
    peaks = []
    for i in range(1, len(v) - 1):
        if v[i] >= v[i - 1] and v[i] > v[i + 1]:
            peaks.append(v[i])
    return peaks


def classify_longrun(
    traj: Trajectory,
    p: ModelParams,
    eff: TherapyEfficacies,
    tol: float = 1e-3,
    period_hint: float | None = None,
) -> str:
    """Coarse long-run classification of a trajectory:
    'to_E1', 'to_E2', 'oscillatory' or 'undetermined'."""
    from .model import endemic_equilibrium, uninfected_equilibrium

    span = traj.times[-1] - traj.times[0]
    if span <= 0:
        return "undetermined"
    win = 0.25 * span
    if period_hint is not None:
        win = max(win, min(3.0 * period_hint, span))
    mask = traj.times >= traj.times[-1] - win
    w_states = traj.states[mask]
    w_times = traj.times[mask]

    def rel_dist(target: np.ndarray) -> tuple[float, float]:
        scale = max(np.max(np.abs(target)), 1.0)
        mean = w_states.mean(axis=0)
        dist = np.max(np.abs(mean - target)) / scale
        amp = np.max(w_states.max(axis=0) - w_states.min(axis=0)) / scale
        return dist, amp

    e1 = np.array([uninfected_equilibrium(p), 0.0, 0.0, 0.0])
    d1_, a1_ = rel_dist(e1)
    if d1_ < tol and a1_ < tol:
        return "to_E1"
    e2 = endemic_equilibrium(p, eff)
    if e2 is not None:
        d2_, a2_ = rel_dist(e2.state.as_array())
        if d2_ < tol and a2_ < tol:
            return "to_E2"
        # oscillation about E2: compare successive late peaks of total virions
        vtot = w_states[:, 2] + w_states[:, 3]
        scale = max(e2.state.total_virions, 1.0)
        peaks = _window_peaks(w_times, vtot)
        if len(peaks) >= 2:
            amp = np.array(peaks) - vtot.min()
            if amp[-1] > tol * scale and abs(amp[-1] - amp[-2]) < 0.10 * max(
                amp[-1], amp[-2]
            ):
                return "oscillatory"
    return "undetermined"
