"""Yaw-plane dynamics of an independent 4WD4WS vehicle.

The chassis is modeled in body slip angle beta and yaw rate psi_dot at (nearly)
constant forward speed. Each wheel carries its own steering angle and drive
torque. Lateral tire forces are linear in the slip angle, F_y = mu*C*alpha,
and drive forces tau/r saturate at the friction limit mu*N.
"""

import math
from dataclasses import dataclass, replace

import numpy as np


class DegenerateVelocity(ValueError):
    """Slip-angle denominator too close to zero."""


class SingularMassMatrix(ValueError):
    """The 2x2 force-balance solve for (v_dot, beta_dot) is singular."""


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the vehicle plus operating point.

    lt is the half track width, i.e. the lateral offset of each wheel from the
    centerline as used in the slip-angle denominators.
    """

    m: float          # mass [kg]
    iz: float         # yaw inertia [kg m^2]
    lf: float         # CG to front axle [m]
    lr: float         # CG to rear axle [m]
    lt: float         # half track width [m]
    r: float          # wheel radius [m]
    c: float          # tire cornering stiffness [N/rad]
    mu_nominal: float = 0.4
    v: float = 0.35   # nominal forward speed [m/s]
    g: float = 9.81

    def __post_init__(self):
        for name in ("m", "iz", "lf", "lr", "lt", "r", "c", "v", "g"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 < self.mu_nominal <= 1.5:
            raise ValueError("mu_nominal must be in (0, 1.5]")

    @property
    def wheelbase(self):
        return self.lf + self.lr

    @property
    def theta_front(self):
        """Angular wheel location w.r.t. CG for the front wheels [rad]."""
        return math.atan2(self.lt, self.lf)

    @property
    def theta_rear(self):
        return math.atan2(self.lt, self.lr)

    @property
    def n_front(self):
        """Static normal load per front wheel [N]."""
        return self.m * self.g * self.lr / (2.0 * self.wheelbase)

    @property
    def n_rear(self):
        return self.m * self.g * self.lf / (2.0 * self.wheelbase)


# Table-derived defaults. The printed track width (0.14724 m) is the full
# track; the lateral wheel offset is half of it.
def nigel_params(**overrides):
    base = dict(m=2.68, iz=0.01944, lf=0.06226, lr=0.07929,
                lt=0.14724 / 2.0, r=0.0325, c=22.4768,
                mu_nominal=0.4, v=0.35)
    base.update(overrides)
    return VehicleParams(**base)


@dataclass(frozen=True)
class ChassisState:
    beta: float = 0.0       # body slip angle [rad]
    psi_dot: float = 0.0    # yaw rate [rad/s]
    v: float = 0.35         # forward speed [m/s]
    psi: float = 0.0        # heading [rad], wrapped to (-pi, pi]
    pose_x: float = 0.0
    pose_y: float = 0.0

    def state_vector(self):
        """Linear-model state x_p = (beta, psi_dot)."""
        return np.array([self.beta, self.psi_dot])


@dataclass(frozen=True)
class ControlInput:
    delta: tuple = (0.0, 0.0, 0.0, 0.0)  # steering FL, FR, RL, RR [rad]
    tau: tuple = (0.0, 0.0, 0.0, 0.0)    # drive torque FL, FR, RL, RR [N m]


@dataclass(frozen=True)
class Disturbance:
    f_hw: float = 0.0  # head wind [N]
    f_sw: float = 0.0  # side wind [N]


@dataclass(frozen=True)
class LinearPlant:
    """Constant-speed linearization x_p_dot = A x_p + B u + D w."""

    A: np.ndarray  # 2x2
    B: np.ndarray  # 2x4
    D: np.ndarray  # 2x1
    params: VehicleParams
    mu: tuple


@dataclass(frozen=True)
class GeneralizedPlant:
    """Open-loop plant with performance outputs y1 = y2 = [x_p; u]."""

    A_p: np.ndarray
    B_p: np.ndarray
    D_p: np.ndarray
    C_p1: np.ndarray
    C_p2: np.ndarray
    B_y1: np.ndarray
    B_y2: np.ndarray
    D_y: np.ndarray
    M_p: np.ndarray
    D_z: np.ndarray


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def tire_slip_angles(state, inp, p):
    """Per-wheel slip angles alpha_i = delta_i - atan(vy_i / vx_i).

    Wheel velocity components carry +psi_dot*lf (front) or -psi_dot*lr (rear)
    laterally, and -psi_dot*lt (left) or +psi_dot*lt (right) longitudinally.
    """
    xd = state.v * math.cos(state.beta)
    yd = state.v * math.sin(state.beta)
    w = state.psi_dot
    dens = (xd - w * p.lt, xd + w * p.lt, xd - w * p.lt, xd + w * p.lt)
    nums = (yd + w * p.lf, yd + w * p.lf, yd - w * p.lr, yd - w * p.lr)
    for d in dens:
        if abs(d) < 1e-9:
            raise DegenerateVelocity("slip-angle denominator near zero")
    return tuple(inp.delta[i] - math.atan(nums[i] / dens[i]) for i in range(4))


def _drive_forces(inp, mu, p):
    loads = (p.n_front, p.n_front, p.n_rear, p.n_rear)
    out = []
    for i in range(4):
        f = inp.tau[i] / p.r
        lim = mu[i] * loads[i]
        out.append(f if abs(f) <= lim else math.copysign(lim, f))
    return tuple(out)


def nonlinear_derivatives(state, inp, dist, p, mu=None):
    """(v_dot, beta_dot, psi_ddot) from the force/moment balances.

    The longitudinal and lateral force balances are linear in (v_dot,
    beta_dot) once the tire forces are known; they are solved as a 2x2 system
    and the yaw acceleration follows from the moment balance.
    """
    if mu is None:
        mu = (p.mu_nominal,) * 4
    alpha = tire_slip_angles(state, inp, p)
    fy = tuple(mu[i] * p.c * alpha[i] for i in range(4))
    fd = _drive_forces(inp, mu, p)
    d = inp.delta
    sb, cb = math.sin(state.beta), math.cos(state.beta)
    w, v = state.psi_dot, state.v

    # Sum Fx: m (v_dot cos(b) - v b_dot sin(b) - psi_dot v sin(b)) = rhs_x
    rhs_x = (sum(fd[i] * math.cos(d[i]) for i in range(4))
             - sum(fy[i] * math.sin(d[i]) for i in range(4))
             - dist.f_hw)
    # Sum Fy: m (v_dot sin(b) + v b_dot cos(b) + psi_dot v cos(b)) = rhs_y
    # (the centripetal term enters with +, which is what the small-angle
    # reduction of the linear model requires)
    rhs_y = (sum(fd[i] * math.sin(d[i]) for i in range(4))
             + sum(fy[i] * math.cos(d[i]) for i in range(4))
             + dist.f_sw)

    # [m cb, -m v sb; m sb, m v cb] [v_dot; b_dot] = [rhs_x + m w v sb,
    #                                                 rhs_y - m w v cb]
    a11, a12 = p.m * cb, -p.m * v * sb
    a21, a22 = p.m * sb, p.m * v * cb
    det = a11 * a22 - a12 * a21  # = m^2 v
    if abs(det) < 1e-12:
        raise SingularMassMatrix("degenerate (v_dot, beta_dot) solve")
    b1 = rhs_x + p.m * w * v * sb
    b2 = rhs_y - p.m * w * v * cb
    v_dot = (b1 * a22 - a12 * b2) / det
    beta_dot = (a11 * b2 - a21 * b1) / det

    # moment balance with the wheel location angles theta_i; the lever arms
    # are the radial CG-to-wheel distances, which reduces to x*Fy - y*Fx per
    # wheel and linearizes to the closed-form b2j coefficients
    thf, thr = p.theta_front, p.theta_rear
    rf = math.hypot(p.lf, p.lt)
    rr = math.hypot(p.lr, p.lt)
    mz_front = (fd[0] * math.sin(d[0] - thf) + fd[1] * math.sin(d[1] + thf)
                + fy[0] * math.cos(d[0] - thf) + fy[1] * math.cos(d[1] + thf))
    mz_rear = (fd[2] * math.sin(d[2] + thr) - fd[3] * math.sin(thr - d[3])
               + fy[2] * math.cos(d[2] + thr) + fy[3] * math.cos(thr - d[3]))
    psi_ddot = (rf * mz_front - rr * mz_rear
                + 0.5 * (p.lf - p.lr) * dist.f_sw) / p.iz
    return v_dot, beta_dot, psi_ddot


def integrate_step(state, inp, dist, p, dt, mu=None):
    """One fixed-step RK4 update of the chassis states and the global pose."""
    if not 0.0 < dt <= 0.01:
        raise ValueError("dt must be in (0, 0.01]")

    def rates(s):
        v_dot, b_dot, w_dot = nonlinear_derivatives(s, inp, dist, p, mu)
        course = s.psi + s.beta
        return (b_dot, w_dot, v_dot, s.psi_dot,
                s.v * math.cos(course), s.v * math.sin(course))

    def advance(s, k, h):
        return ChassisState(beta=s.beta + h * k[0],
                            psi_dot=s.psi_dot + h * k[1],
                            v=s.v + h * k[2],
                            psi=s.psi + h * k[3],
                            pose_x=s.pose_x + h * k[4],
                            pose_y=s.pose_y + h * k[5])

    k1 = rates(state)
    k2 = rates(advance(state, k1, dt / 2.0))
    k3 = rates(advance(state, k2, dt / 2.0))
    k4 = rates(advance(state, k3, dt))
    ksum = tuple(k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i] for i in range(6))
    nxt = advance(state, ksum, dt / 6.0)
    return replace(nxt, psi=wrap_angle(nxt.psi))


def linearize(p, mu=None):
    """Small-angle, constant-speed linear model in (beta, psi_dot).

    Coefficients are the closed forms of the linearized force/moment balances;
    the wind feedthrough on the yaw channel uses the printed half-offset form
    d2 = (lf - lr)/2.
    """
    if p.v <= 0.0:
        raise ValueError("v must be positive")
    if mu is None:
        mu = (p.mu_nominal,) * 4
    muc = [mu[i] * p.c for i in range(4)]
    front = muc[0] + muc[1]
    rear = muc[2] + muc[3]
    m, v, lf, lr, iz = p.m, p.v, p.lf, p.lr, p.iz
    A = np.array([
        [-(front + rear) / (m * v),
         (lr * rear - lf * front) / (m * v * v) - 1.0],
        [(lr * rear - lf * front) / iz,
         -(lf * lf * front + lr * lr * rear) / (iz * v)],
    ])
    B = np.array([
        [muc[0] / (m * v), muc[1] / (m * v), muc[2] / (m * v), muc[3] / (m * v)],
        [lf * muc[0] / iz, lf * muc[1] / iz, -lr * muc[2] / iz, -lr * muc[3] / iz],
    ])
    D = np.array([[1.0 / (m * v)], [(lf - lr) / 2.0]])
    return LinearPlant(A=A, B=B, D=D, params=p, mu=tuple(mu))


def generalized_plant(lp):
    """Wrap a linear plant with the fixed output maps y1 = y2 = [x_p; u]."""
    nu = lp.B.shape[1]
    C = np.vstack([np.eye(2), np.zeros((nu, 2))])
    By = np.vstack([np.zeros((2, nu)), np.eye(nu)])
    return GeneralizedPlant(
        A_p=lp.A, B_p=lp.B, D_p=lp.D,
        C_p1=C, C_p2=C.copy(), B_y1=By, B_y2=By.copy(),
        D_y=np.zeros((2 + nu, 1)), M_p=np.eye(2), D_z=np.zeros((2, 1)))
