"""Time-domain simulation of linear and nonlinear platoons.

The leader is an exogenous signal sampled exactly at every integrator stage,
using the profile segment active at the start of the step (breakpoints on the
time grid then cost no accuracy). Control is recomputed at every stage
(continuous feedback); the sliding-mode sign term is frozen over a step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import GainSet, SynthesisRecipe, synthesize_gains
from .dynamics import GRAVITY, OutputMask, VehicleParams, closed_loop_matrix
from .graph import Topology, grounded_matrix

PLANTS = ("linear", "nonlinear")
INTEGRATORS = ("rk4", "euler")


class NotConverged(RuntimeError):
    pass


class NumericalFailure(FloatingPointError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"non-finite state at t = {t:.6g} s")


@dataclass(frozen=True)
class Segment:
    """Velocity v_base + slope * (t - start) from ``start`` until the next segment."""

    start: float
    v_base: float
    slope: float = 0.0


@dataclass(frozen=True)
class LeaderProfile:
    segments: tuple[Segment, ...]
    p0: float = 0.0
    name: str | None = None

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs or segs[0].start != 0:
            raise ValueError("first leader segment must start at t = 0")
        for a, b in zip(segs, segs[1:]):
            if not b.start > a.start:
                raise ValueError("segment start times must be strictly increasing")
            v_end = a.v_base + a.slope * (b.start - a.start)
            if not np.isclose(v_end, b.v_base, rtol=0, atol=1e-9):
                raise ValueError(f"leader velocity jumps at t = {b.start} ({v_end} -> {b.v_base})")
        object.__setattr__(self, "segments", segs)
        # position at each breakpoint, by exact integration
        pos = [float(self.p0)]
        for a, b in zip(segs, segs[1:]):
            h = b.start - a.start
            pos.append(pos[-1] + a.v_base * h + 0.5 * a.slope * h * h)
        object.__setattr__(self, "_starts", np.array([s.start for s in segs]))
        object.__setattr__(self, "_pos", tuple(pos))


def eq39_profile() -> LeaderProfile:
    """10 m/s, then +1 m/s^2 from t = 3 s until 22 m/s at t = 15 s."""
    return LeaderProfile((Segment(0.0, 10.0), Segment(3.0, 10.0, 1.0), Segment(15.0, 22.0)), 0.0, "eq39")


def eq40_profile() -> LeaderProfile:
    """10 m/s, then accelerating at 1 m/s^2 forever from t = 3 s."""
    return LeaderProfile((Segment(0.0, 10.0), Segment(3.0, 10.0, 1.0)), 0.0, "eq40")


def constant_profile(v: float) -> LeaderProfile:
    return LeaderProfile((Segment(0.0, v),), 0.0, None)


NAMED_PROFILES = {"eq39": eq39_profile, "eq40": eq40_profile}


def segment_index(profile: LeaderProfile, t: float) -> int:
    """Index of the segment active at time t (segments are closed on the left)."""
    if t < 0:
        raise ValueError("leader state requested at negative time")
    return int(np.searchsorted(profile._starts, t, side="right")) - 1


def leader_state(profile: LeaderProfile, t: float, segment: int | None = None) -> tuple[float, float, float]:
    """Leader (p, v, a) at time t.

    With ``segment`` given, that segment's polynomial is evaluated even past its
    end; the integrator uses this so that every stage of a step sees the same
    smooth piece.
    """
    k = segment_index(profile, t) if segment is None else segment
    seg = profile.segments[k]
    h = t - seg.start
    return (
        profile._pos[k] + seg.v_base * h + 0.5 * seg.slope * h * h,
        seg.v_base + seg.slope * h,
        seg.slope,
    )


@dataclass(frozen=True)
class InitialOffsets:
    """Follower start: exact spacing behind the leader, plus per-follower deviations.

    ``speed`` is the common initial follower speed; None means the leader's
    speed at t = 0. ``velocity`` offsets are added on top of it.
    """

    position: tuple[float, ...] = ()
    velocity: tuple[float, ...] = ()
    acceleration: tuple[float, ...] = ()
    speed: float | None = None

    def __post_init__(self):
        if self.speed is not None and not (np.isfinite(self.speed) and self.speed >= 0):
            raise ValueError("initial follower speed must be finite and nonnegative")

    def arrays(self, n):
        out = []
        for name in ("position", "velocity", "acceleration"):
            vals = tuple(float(x) for x in getattr(self, name))
            if vals and len(vals) != n:
                raise ValueError(f"initial {name} offsets need {n} entries")
            out.append(np.array(vals) if vals else np.zeros(n))
        return out


@dataclass(frozen=True)
class Scenario:
    vehicles: tuple[VehicleParams, ...]
    topology: Topology
    controller: GainSet | SynthesisRecipe
    leader: LeaderProfile = field(default_factory=eq39_profile)
    mask: OutputMask = field(default_factory=OutputMask)
    spacing: float = 20.0
    initial: InitialOffsets = field(default_factory=InitialOffsets)
    plant: str = "linear"
    k_s: float | None = None
    dt: float = 0.01
    horizon: float = 60.0
    integrator: str = "rk4"
    delta: float = 0.1
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        n = self.topology.n
        if len(self.vehicles) != n:
            raise ValueError(f"{len(self.vehicles)} vehicles but the topology has {n} followers")
        size = self.controller.n if isinstance(self.controller, GainSet) else len(self.controller.epsilon)
        if size != n:
            raise ValueError("controller size does not match the follower count")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon > self.dt:
            raise ValueError("horizon must exceed dt")
        if not self.spacing > 0:
            raise ValueError("spacing d0 must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.plant not in PLANTS:
            raise ValueError(f"plant must be one of {PLANTS}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.plant == "nonlinear" and not all(v.has_nonlinear for v in self.vehicles):
            raise ValueError("nonlinear plant needs true and estimated parameters for every vehicle")
        if self.k_s is not None:
            if self.k_s < 0:
                raise ValueError("k_s must be nonnegative")
            if self.plant != "nonlinear":
                raise ValueError("the sliding-mode layer applies to the nonlinear plant only")
        self.initial.arrays(n)

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def taus(self) -> np.ndarray:
        return np.array([v.tau for v in self.vehicles])

    @property
    def design_taus(self) -> np.ndarray:
        """Lags the controller is designed for: the estimates on the nonlinear plant."""
        if self.plant == "nonlinear":
            return np.array([v.tau_estimate for v in self.vehicles])
        return self.taus

    def gains(self) -> GainSet:
        if isinstance(self.controller, GainSet):
            if self.controller.mask != self.mask:
                return GainSet(self.controller.k, self.mask)
            return self.controller
        return synthesize_gains(self.design_taus, self.topology, self.controller, self.mask)


@dataclass
class Trajectory:
    t: np.ndarray  # (K,)
    leader: np.ndarray  # (K, 3) p, v, a
    states: np.ndarray  # (K, N, 3) p, v, a
    errors: np.ndarray  # (K, N, 3) p_hat, v_hat, a_hat
    inputs: np.ndarray  # (K, N) commanded acceleration
    torque: np.ndarray | None = None  # (K, N)
    sliding: np.ndarray | None = None  # (K, N)

    @property
    def spacing_errors(self) -> np.ndarray:
        return self.errors[:, :, 0]


def _rk4_step(f, t, x, dt, *args):
    k1 = f(t, x, *args)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1, *args)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2, *args)
    k4 = f(t + dt, x + dt * k3, *args)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _euler_step(f, t, x, dt, *args):
    return x + dt * f(t, x, *args)


def _nonlinear_arrays(vehicles):
    def grab(attr, which):
        return np.array([getattr(getattr(v, which), attr) for v in vehicles])

    true = {a: grab(a, "plant") for a in ("mass", "eta", "drag", "wheel_radius", "rolling")}
    est = {a: grab(a, "estimate") for a in ("mass", "eta", "drag", "wheel_radius", "rolling")}
    true["tau"] = np.array([v.tau for v in vehicles])
    est["tau"] = np.array([v.tau_estimate for v in vehicles])
    return true, est


def simulate(s: Scenario, gains: GainSet | None = None) -> Trajectory:
    gains = gains or s.gains()
    n = s.n
    offsets = (np.arange(1, n + 1) * s.spacing)
    G = grounded_matrix(s.topology)
    K = gains.matrix * gains.mask.as_array()
    profile = s.leader
    steps = int(round(s.horizon / s.dt))
    ts = np.arange(steps + 1) * s.dt
    step = _rk4_step if s.integrator == "rk4" else _euler_step

    def feedback(errors):
        return -(K * (G @ errors)).sum(axis=1)

    def tracking(t, p, v, a, seg=None):
        p0, v0, a0 = leader_state(profile, t, seg)
        return np.column_stack([p - p0 + offsets, v - v0, a - a0])

    dp0, dv0, da0 = s.initial.arrays(n)
    p0, v0, a0 = leader_state(profile, 0.0)
    pos0 = p0 - offsets + dp0
    vel0 = (v0 if s.initial.speed is None else s.initial.speed) + dv0
    acc0 = a0 + da0

    if s.plant == "linear":
        taus = s.taus

        def field_(t, x, sign, seg):
            u = feedback(tracking(t, x[:, 0], x[:, 1], x[:, 2], seg))
            return np.column_stack([x[:, 1], x[:, 2], (u - x[:, 2]) / taus])

        def observe(t, x):
            e = tracking(t, x[:, 0], x[:, 1], x[:, 2])
            return x, e, feedback(e), None, None

        x = np.column_stack([pos0, vel0, acc0])
    else:
        tr, es = _nonlinear_arrays(s.vehicles)
        k_s = s.k_s or 0.0

        def accel(v, T):
            return (tr["eta"] / tr["wheel_radius"] * T - tr["drag"] * v**2 - tr["mass"] * GRAVITY * tr["rolling"]) / tr["mass"]

        def commands(t, x, sign, seg=None):
            v, T = x[:, 1], x[:, 2]
            a = accel(v, T)
            e = tracking(t, x[:, 0], v, a, seg)
            u = feedback(e)
            u_tilde = u - k_s * sign
            T_des = es["wheel_radius"] / es["eta"] * (
                es["mass"] * u_tilde + es["mass"] * es["rolling"] * GRAVITY
                + 2.0 * es["drag"] * es["tau"] * v * a + es["drag"] * v**2
            )
            return a, e, u, u_tilde, T_des

        def field_(t, x, sign, seg):
            v, T = x[:, 1], x[:, 2]
            a, _, u, _, T_des = commands(t, x, sign, seg)
            T_dot = (T_des - T) / tr["tau"]
            a_dot = tr["eta"] / (tr["wheel_radius"] * tr["mass"]) * T_dot - 2.0 * tr["drag"] * v * a / tr["mass"]
            s_dot = es["tau"] * a_dot + a - u
            return np.column_stack([v, a, T_dot, s_dot])

        def observe(t, x):
            a, e, _, u_tilde, _ = commands(t, x, np.sign(x[:, 3]))
            return np.column_stack([x[:, 0], x[:, 1], a]), e, u_tilde, x[:, 2].copy(), x[:, 3].copy()

        torque0 = tr["wheel_radius"] / tr["eta"] * (
            tr["mass"] * acc0 + tr["drag"] * vel0**2 + tr["mass"] * GRAVITY * tr["rolling"]
        )
        x = np.column_stack([pos0, vel0, torque0, np.zeros(n)])

    leader = np.empty((steps + 1, 3))
    states = np.empty((steps + 1, n, 3))
    errors = np.empty((steps + 1, n, 3))
    inputs = np.empty((steps + 1, n))
    torque = np.empty((steps + 1, n)) if s.plant == "nonlinear" else None
    sliding = np.empty((steps + 1, n)) if s.k_s is not None else None

    with np.errstate(over="ignore", invalid="ignore"):
        for k, t in enumerate(ts):
            leader[k] = leader_state(profile, t)
            st, e, u, T, sv = observe(t, x)
            states[k], errors[k], inputs[k] = st, e, u
            if torque is not None:
                torque[k] = T
            if sliding is not None:
                sliding[k] = sv
            if k == steps:
                break
            # frozen over the step: sliding sign and the leader segment active at the step start
            sign = np.sign(x[:, 3]) if x.shape[1] == 4 else None
            x = step(field_, t, x, s.dt, sign, segment_index(profile, t))
            if not np.all(np.isfinite(x)):
                raise NumericalFailure(ts[k + 1])
    return Trajectory(ts, leader, states, errors, inputs, torque, sliding)


def convergence_time(traj: Trajectory, delta: float = 0.1) -> float:
    """Earliest grid time after which every follower keeps |p_hat| < delta."""
    worst = np.abs(traj.spacing_errors).max(axis=1)
    bad = np.nonzero(worst >= delta)[0]
    if bad.size == 0:
        return float(traj.t[0])
    last = bad[-1]
    if last == len(traj.t) - 1:
        raise NotConverged(f"spacing error still >= {delta} m at the end of the horizon (t = {traj.t[-1]:.6g} s)")
    return float(traj.t[last])


def max_spacing_error(traj: Trajectory, i: int) -> float:
    """Largest |p_hat_i| over the run (``i`` is the 0-based follower index)."""
    return float(np.abs(traj.spacing_errors[:, i]).max())


def linear_error_propagator(s: Scenario, gains: GainSet | None = None):
    """Closed-loop matrix in per-vehicle (p_hat, v_hat, a_hat) order; used for exact checks."""
    gains = gains or s.gains()
    M = closed_loop_matrix(s.taus, gains, s.topology)
    n = s.n
    perm = np.array([blk * n + i for i in range(n) for blk in range(3)])
    return M[np.ix_(perm, perm)]
