"""Maneuver references, disturbance schedules, closed-loop simulation and
the RMSE benchmark table.

References come from the open-loop linear model at the control rate; the
closed-loop plant is the full nonlinear model at the physics rate with
per-wheel time-varying friction and a noisy side-wind step. The random
source is SplitMix64 with per-run seeds derived by FNV-1a so tables are
reproducible bit for bit.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import ChassisState, ControlInput, Disturbance, linearize, \
    nonlinear_derivatives

CONTROL_DT = 0.01    # 100 Hz control / logging rate
PHYSICS_DT = 0.001   # 1 kHz plant rate
SPEED_KP = 0.05      # cruise torque P gain [N m per m/s]


class NumericBlowup(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# random source


class SplitMix64:
    """Counter-based 64-bit generator (SplitMix64), documented algorithm so
    ports in other languages reproduce the tables."""

    MASK = (1 << 64) - 1

    def __init__(self, seed):
        self.state = seed & self.MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def uniform(self, lo=0.0, hi=1.0):
        return lo + (hi - lo) * (self.next_u64() >> 11) * (2.0 ** -53)


def fnv1a64(text):
    h = 0xCBF29CE484222325
    for b in text.encode():
        h = ((h ^ b) * 0x100000001B3) & SplitMix64.MASK
    return h


def run_seed(maneuver, controller, seed):
    """Per-run seed: hash of the (maneuver, controller, seed) triple."""
    return fnv1a64(f"{maneuver}|{controller}|{seed}")


# ---------------------------------------------------------------------------
# maneuvers


@dataclass(frozen=True)
class SignalPiece:
    """One piecewise test-signal segment on [t0, t1)."""

    kind: str          # step | ramp | sine | impulse
    t0: float
    t1: float
    amplitude: float
    frequency: float = 0.0

    def value(self, t):
        if not self.t0 <= t < self.t1:
            return 0.0
        if self.kind == "step":
            return self.amplitude
        if self.kind == "ramp":
            return self.amplitude * (t - self.t0) / (self.t1 - self.t0)
        if self.kind == "sine":
            return self.amplitude * math.sin(
                2.0 * math.pi * self.frequency * (t - self.t0))
        if self.kind == "impulse":
            return self.amplitude
        raise ValueError(f"unknown signal kind {self.kind!r}")


@dataclass(frozen=True)
class ManeuverSpec:
    name: str
    duration: float
    program: tuple     # SignalPiece values, summed
    v: float = 0.35

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")

    def front_steer(self, t):
        return sum(piece.value(t) for piece in self.program)

    def steering(self, t):
        """Four steering angles; rear wheels counter-phase to the front."""
        d = self.front_steer(t)
        return (d, d, -d, -d)


def default_maneuvers():
    """The six benchmark maneuvers; amplitudes stay in the small-angle
    regime and every program is a sum of standard test signals."""
    return {
        "straight": ManeuverSpec("straight", 10.0, ()),
        "lane-change": ManeuverSpec("lane-change", 6.0, (
            SignalPiece("step", 1.0, 2.0, 0.15),
            SignalPiece("step", 2.0, 3.0, -0.15),
        )),
        "skidpad": ManeuverSpec("skidpad", 6.0, (
            SignalPiece("step", 1.0, 6.0, 0.14),
        )),
        "fishhook": ManeuverSpec("fishhook", 5.0, (
            SignalPiece("ramp", 1.0, 2.0, 0.12),
            SignalPiece("step", 2.0, 5.0, 0.12),
        )),
        "slalom": ManeuverSpec("slalom", 12.0, (
            SignalPiece("sine", 0.0, 12.0, 0.2, 0.25),
        )),
        "figure-8": ManeuverSpec("figure-8", 16.0, (
            SignalPiece("sine", 0.0, 8.0, 0.2, 0.25),
            SignalPiece("sine", 8.0, 16.0, -0.2, 0.25),
        )),
    }


# ---------------------------------------------------------------------------
# disturbance schedules


@dataclass(frozen=True)
class FrictionSchedule:
    amplitude: float = 0.35
    offset: float = 0.55
    frequency: float = 12.0
    lags: tuple = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)
    noise_half_width: float = 0.05
    seed: int = 0
    enabled: bool = True


@dataclass(frozen=True)
class WindSchedule:
    amplitude: float = 0.25
    onset: float = 1.0
    noise_scale: float = 0.1
    seed: int = 0
    enabled: bool = True


def friction_at(fs, t, T, rng=None):
    """Four phase-lagged sinusoidal friction values at mission time t.

    theta sweeps [0, 2 pi] over the mission; the deterministic part stays in
    [0.2, 0.9], noise is uniform in +-noise_half_width and the result is
    clipped to the [0.1, 1.0] box.
    """
    if not fs.enabled:
        return (0.4, 0.4, 0.4, 0.4)
    theta = 2.0 * math.pi * t / T
    out = []
    for lag in fs.lags:
        mu = fs.amplitude * math.sin(
            2.0 * math.pi * fs.frequency * theta - lag) + fs.offset
        mu = min(max(mu, 0.2), 0.9)
        if rng is not None:
            mu += rng.uniform(-fs.noise_half_width, fs.noise_half_width)
        out.append(min(max(mu, 0.1), 1.0))
    return tuple(out)


def wind_at(ws, t, rng=None):
    if not ws.enabled or t < ws.onset:
        if rng is not None:
            rng.uniform(-1.0, 1.0)  # keep the draw sequence aligned
        return 0.0
    f = ws.amplitude
    if rng is not None:
        f += ws.noise_scale * rng.uniform(-1.0, 1.0) * ws.amplitude
    return f


# ---------------------------------------------------------------------------
# reference generation


@dataclass
class Reference:
    maneuver: ManeuverSpec
    params: object
    t: np.ndarray        # control-rate time stamps
    x: np.ndarray        # N x 2 linear states (beta, psi_dot)
    u: np.ndarray        # N x 4 steering commands
    pose: np.ndarray     # N x 3 (x_g, y_g, psi)


def generate_reference(m, p):
    """Open-loop linear-model rollout of the maneuver's signal program at
    nominal friction with pose kinematics integrated alongside."""
    lp = linearize(replace(p, v=m.v))
    A, B = lp.A, lp.B
    n_ctrl = int(round(m.duration / CONTROL_DT))
    sub = int(round(CONTROL_DT / PHYSICS_DT))
    ts, xs, us, poses = [], [], [], []
    x = np.zeros(2)
    pose = np.zeros(3)
    for k in range(n_ctrl + 1):
        t = k * CONTROL_DT
        u = np.array(m.steering(t))
        ts.append(t)
        xs.append(x.copy())
        us.append(u)
        poses.append(pose.copy())
        if k == n_ctrl:
            break
        for j in range(sub):
            tj = t + j * PHYSICS_DT
            uj = np.array(m.steering(tj))

            def f(state):
                xl, ps = state[:2], state[2:]
                dx = A @ xl + B @ uj
                course = ps[2] + xl[0]
                return np.concatenate([dx, [m.v * math.cos(course),
                                            m.v * math.sin(course),
                                            xl[1]]])

            s = np.concatenate([x, pose[[0, 1]], [pose[2]]])
            k1 = f(s)
            k2 = f(s + 0.5 * PHYSICS_DT * k1)
            k3 = f(s + 0.5 * PHYSICS_DT * k2)
            k4 = f(s + PHYSICS_DT * k3)
            s = s + PHYSICS_DT / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            x, pose = s[:2], s[2:]
    return Reference(maneuver=m, params=p, t=np.array(ts), x=np.array(xs),
                     u=np.array(us), pose=np.array(poses))


# ---------------------------------------------------------------------------
# closed-loop simulation


@dataclass
class RunResult:
    maneuver: str
    controller: str
    t: np.ndarray
    pose: np.ndarray
    state: np.ndarray      # (beta, psi_dot) at control rate
    inputs: np.ndarray     # steering commands applied
    mu_log: np.ndarray
    wind_log: np.ndarray
    rmse_x: float
    rmse_y: float
    rmse_psi: float

    @property
    def rmse(self):
        return math.hypot(self.rmse_x, math.hypot(self.rmse_y,
                                                  self.rmse_psi))


def _wrap(a):
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def run_closed_loop(ref, K, fs, ws, mode="feedback", label=""):
    """Nonlinear rollout under the disturbance schedules.

    Control updates at 100 Hz with zero-order hold: u = u_ref + K (x - x_ref)
    in feedback mode, u = u_ref open loop. Drive torques come from a
    proportional cruise controller holding the maneuver speed.
    """
    m, p = ref.maneuver, ref.params
    T = m.duration
    rng = SplitMix64(run_seed(m.name, label or mode, fs.seed))
    sub = int(round(CONTROL_DT / PHYSICS_DT))
    n_ctrl = ref.t.size - 1

    state = ChassisState(v=m.v)
    times, poses, states, inputs, mus, winds = [], [], [], [], [], []
    se = np.zeros(3)
    for k in range(n_ctrl + 1):
        t = ref.t[k]
        delta = ref.u[k].copy()
        if mode == "feedback" and K is not None:
            err = state.state_vector() - ref.x[k]
            dk = K @ err
            if dk.size == 1:   # single-steer gain acts on the front axle
                dk = np.array([dk[0], dk[0], 0.0, 0.0])
            delta = delta + dk
        delta = np.clip(delta, -0.5 * math.pi, 0.5 * math.pi)

        times.append(t)
        poses.append([state.pose_x, state.pose_y, state.psi])
        states.append([state.beta, state.psi_dot])
        inputs.append(delta.copy())

        e = (state.pose_x - ref.pose[k, 0],
             state.pose_y - ref.pose[k, 1],
             _wrap(state.psi - ref.pose[k, 2]))
        se += np.array(e) ** 2
        if k == n_ctrl:
            mus.append(friction_at(fs, t, T))
            winds.append(0.0)
            break

        tau = SPEED_KP * (m.v - state.v)
        inp = ControlInput(delta=tuple(delta), tau=(tau,) * 4)
        mu_k = None
        w_k = 0.0
        for j in range(sub):
            tj = t + j * PHYSICS_DT
            mu = friction_at(fs, tj, T, rng)
            w = wind_at(ws, tj, rng)
            if mu_k is None:
                mu_k, w_k = mu, w
            dist = Disturbance(f_sw=w)
            state = _rk4(state, inp, dist, p, PHYSICS_DT, mu)
            if abs(state.beta) > 0.5 * math.pi:
                raise NumericBlowup(f"|beta| exceeded pi/2 at t={tj:.3f}")
        mus.append(mu_k)
        winds.append(w_k)

    n = n_ctrl + 1
    rx, ry, rp = np.sqrt(se / n)
    return RunResult(maneuver=m.name, controller=label or mode,
                     t=np.array(times), pose=np.array(poses),
                     state=np.array(states), inputs=np.array(inputs),
                     mu_log=np.array(mus), wind_log=np.array(winds),
                     rmse_x=float(rx), rmse_y=float(ry), rmse_psi=float(rp))


def _rk4(state, inp, dist, p, dt, mu):
    from .model import integrate_step
    return integrate_step(state, inp, dist, p, dt, mu)


# ---------------------------------------------------------------------------
# benchmark table


def benchmark_suite(controllers, maneuvers=None, seeds=(0,), params=None,
                    friction=None, wind=None):
    """Cross product maneuvers x controllers x seeds; per-cell combined RMSE
    is the median over seeds. controllers maps name -> gain matrix or None
    for open loop."""
    from .model import nigel_params
    params = params or nigel_params()
    maneuvers = maneuvers or default_maneuvers()
    friction = friction or FrictionSchedule()
    wind = wind or WindSchedule()
    table, failures, runs = {}, [], []
    for mname, m in maneuvers.items():
        ref = generate_reference(m, params)
        row = {}
        for cname, K in controllers.items():
            vals = []
            for seed in seeds:
                fs = replace(friction, seed=seed)
                mode = "open-loop" if K is None else "feedback"
                try:
                    res = run_closed_loop(ref, K, fs, wind, mode,
                                          label=cname)
                    vals.append(res.rmse)
                    runs.append(res)
                except NumericBlowup as exc:
                    failures.append({"maneuver": mname, "controller": cname,
                                     "seed": seed, "error": str(exc)})
            row[cname] = float(np.median(vals)) if vals else math.nan
        table[mname] = row
    return {"table": table, "failures": failures, "runs": runs,
            "seeds": list(seeds)}


def table_to_json(result):
    """Deterministic serialization of the benchmark table."""
    payload = {"seeds": result["seeds"], "table": result["table"],
               "failures": result["failures"]}
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def table_to_text(result):
    table = result["table"]
    controllers = sorted({c for row in table.values() for c in row})
    width = max(len(m) for m in table) + 2
    lines = ["maneuver".ljust(width) + "".join(c.rjust(14)
                                               for c in controllers)]
    for mname in table:
        row = table[mname]
        lines.append(mname.ljust(width)
                     + "".join(f"{row.get(c, math.nan):14.4e}"
                               for c in controllers))
    return "\n".join(lines) + "\n"


def run_to_csv(res):
    header = ("t,x,y,psi,beta,psi_dot,"
              "delta_fl,delta_fr,delta_rl,delta_rr,"
              "mu_fl,mu_fr,mu_rl,mu_rr,f_w")
    lines = [header]
    for i in range(res.t.size):
        vals = ([res.t[i]] + list(res.pose[i]) + list(res.state[i])
                + list(res.inputs[i]) + list(res.mu_log[i])
                + [res.wind_log[i]])
        lines.append(",".join(f"{v:.9g}" for v in vals))
    return "\n".join(lines) + "\n"
