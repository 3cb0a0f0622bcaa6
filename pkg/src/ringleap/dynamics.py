"""Reduced Hamiltonian dynamics of k coaxial ring centers.

In the co-moving frame the scaled offsets ``q_j`` of thin coaxial
rings obey

    dq_j/dtau = -4 sum_{l != j} (q_j - q_l)^perp / |q_j - q_l|^2
                + 2 (q_j^1 / r0^2) e_2,      v^perp := (-v_2, v_1),

a Hamiltonian system for

    H_k = 2 sum_{i != j} log|q_i - q_j| - (1/r0^2) sum_j |q_j^1|^2

(the double sum runs over ordered pairs).  Small symmetric pairs orbit
closed level curves of ``H_2(q, -q)``: the leapfrogging pattern.

``scaled_to_physical`` maps offsets to physical ring centers
``P_j = (r0, 0) + q_j / sqrt(|log eps|)`` with core scales tied by
``r_j eps_j^2 = r0 eps^2``, and ``theta0`` is the physical-variable
main term of the center dynamics.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionError, ConvergenceError, InvalidInputError

__all__ = [
    "ScaledConfig", "RingFamily", "Trajectory",
    "perp", "rhs", "hamiltonian", "hamiltonian_gradient",
    "symmetric_pair_rhs", "integrate", "poincare_return",
    "theta0", "scaled_to_physical",
]

COLLISION_HALT = 1e-6
RHS_MIN_SEPARATION = 1e-9


def perp(v):
    """Rotate 2-vectors by +90 degrees: ``(x, y) -> (-y, x)``."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


@dataclass(frozen=True)
class ScaledConfig:
    """k scaled ring offsets in the co-moving frame."""

    q: np.ndarray
    r0: float = 1.0

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        if q.ndim != 2 or q.shape[1] != 2:
            raise InvalidInputError("q must be a (k, 2) array")
        if q.shape[0] < 1:
            raise InvalidInputError("need at least one ring")
        if not self.r0 > 0:
            raise InvalidInputError("r0 must be positive")
        object.__setattr__(self, "q", q)
        if self.k > 1 and self.min_separation() == 0.0:
            raise CollisionError("coincident scaled offsets")

    @property
    def k(self):
        return self.q.shape[0]

    def min_separation(self):
        if self.k == 1:
            return np.inf
        d = self.q[:, None, :] - self.q[None, :, :]
        dist = np.sqrt((d ** 2).sum(-1))
        dist[np.diag_indices(self.k)] = np.inf
        return float(dist.min())


@dataclass(frozen=True)
class RingFamily:
    """Physical ring centers and core scales.

    Invariant: every center has ``r_j > 0`` and
    ``r_j * eps_j^2 == r0 * eps^2`` to 1e-12 relative.
    """

    centers: np.ndarray
    core_scales: np.ndarray
    epsilon: float
    r0: float

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        e = np.atleast_1d(np.asarray(self.core_scales, dtype=float))
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "core_scales", e)
        if c.ndim != 2 or c.shape[1] != 2 or e.shape != (c.shape[0],):
            raise InvalidInputError("centers (k,2) and core_scales (k,) required")
        if c.shape[0] and np.any(c[:, 0] <= 0):
            raise InvalidInputError("ring centers must have r > 0")
        target = self.r0 * self.epsilon ** 2
        if c.shape[0]:
            got = c[:, 0] * e ** 2
            if np.any(np.abs(got - target) > 1e-12 * abs(target)):
                raise InvalidInputError(
                    "core scales violate r_j eps_j^2 = r0 eps^2")

    @property
    def k(self):
        return self.centers.shape[0]


@dataclass
class Trajectory:
    """Time series of scaled configurations with conserved quantities."""

    times: np.ndarray
    states: list
    hamiltonian: np.ndarray
    min_separation: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=float)
        self.min_separation = np.asarray(self.min_separation, dtype=float)
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise InvalidInputError("trajectory times must be increasing")
        ks = {s.k for s in self.states}
        r0s = {s.r0 for s in self.states}
        if len(ks) > 1 or len(r0s) > 1:
            raise InvalidInputError("states must share k and r0")

    @property
    def k(self):
        return self.states[0].k if self.states else 0

    def q_array(self):
        """States stacked as an (n_times, k, 2) array."""
        return np.array([s.q for s in self.states])

    def to_csv(self, path):
        k = self.k
        cols = ["tau"]
        for j in range(1, k + 1):
            cols += [f"q{j}_r", f"q{j}_z"]
        cols += ["H", "min_sep"]
        with open(path, "w") as f:
            f.write(",".join(cols) + "\n")
            for i, t in enumerate(self.times):
                row = [repr(float(t))]
                for j in range(k):
                    row += [repr(float(self.states[i].q[j, 0])),
                            repr(float(self.states[i].q[j, 1]))]
                row += [repr(float(self.hamiltonian[i])),
                        repr(float(self.min_separation[i]))]
                f.write(",".join(row) + "\n")


# ----------------------------------------------------------------------
# vector field and energy
# ----------------------------------------------------------------------

def _pairwise(q):
    d = q[:, None, :] - q[None, :, :]
    d2 = (d ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    return d, d2


def _check_separation(cfg, threshold):
    if cfg.k == 1:
        return
    d, d2 = _pairwise(cfg.q)
    dist = np.sqrt(d2)
    i, j = np.unravel_index(np.argmin(dist), dist.shape)
    if dist[i, j] <= threshold:
        raise CollisionError(
            f"rings {i} and {j} at separation {dist[i, j]:.3e}",
            pair=(int(i), int(j)), separation=float(dist[i, j]))


def rhs(cfg):
    """Right-hand side of the reduced center dynamics."""
    _check_separation(cfg, RHS_MIN_SEPARATION)
    q = cfg.q
    d, d2 = _pairwise(q)
    inter = -4.0 * (perp(d) / d2[..., None]).sum(axis=1)
    out = inter
    out[:, 1] += 2.0 * q[:, 0] / cfg.r0 ** 2
    return out


def hamiltonian(cfg):
    """Energy ``H_k``; ordered-pair double sum."""
    _check_separation(cfg, RHS_MIN_SEPARATION)
    q = cfg.q
    if cfg.k > 1:
        _, d2 = _pairwise(q)
        iu = np.triu_indices(cfg.k, 1)
        log_part = 2.0 * np.log(d2[iu]).sum()  # = 2*sum_{i!=j} log|.|
    else:
        log_part = 0.0
    return log_part - (q[:, 0] ** 2).sum() / cfg.r0 ** 2


def hamiltonian_gradient(cfg):
    """Gradient of ``H_k`` per ring; ``rhs = -(grad H)^perp``."""
    _check_separation(cfg, RHS_MIN_SEPARATION)
    q = cfg.q
    d, d2 = _pairwise(q)
    grad = 4.0 * (d / d2[..., None]).sum(axis=1)
    grad[:, 0] -= 2.0 * q[:, 0] / cfg.r0 ** 2
    return grad


def symmetric_pair_rhs(q, r0=1.0):
    """Reduced field of the symmetric pair ``q_1 = -q_2 = q``."""
    q = np.asarray(q, dtype=float)
    n2 = float((q ** 2).sum())
    if n2 <= RHS_MIN_SEPARATION ** 2:
        raise CollisionError("symmetric pair at the origin singularity")
    out = -2.0 * perp(q) / n2
    out[1] += 2.0 * q[0] / r0 ** 2
    return out


# ----------------------------------------------------------------------
# integration
# ----------------------------------------------------------------------

def _step_rk4(q, r0, dt):
    def f(qq):
        return rhs(ScaledConfig(q=qq, r0=r0))

    k1 = f(q)
    k2 = f(q + 0.5 * dt * k1)
    k3 = f(q + 0.5 * dt * k2)
    k4 = f(q + dt * k3)
    return q + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_symplectic_euler(q, r0, dt):
    # first-order semi-implicit update in the canonical pairs
    # (q^1, q^2): advance q^1 with the old state, then q^2 with the
    # updated q^1 (exactly symplectic only for separable energies).
    g = hamiltonian_gradient(ScaledConfig(q=q, r0=r0))
    qn = q.copy()
    qn[:, 0] += dt * g[:, 1]          # dq1/dtau = +dH/dq2
    g = hamiltonian_gradient(ScaledConfig(q=qn, r0=r0))
    qn[:, 1] += -dt * g[:, 0]         # dq2/dtau = -dH/dq1
    return qn


_STEPPERS = {"rk4": _step_rk4, "symplectic-euler": _step_symplectic_euler}


def integrate(cfg0, dt, T, method="rk4"):
    """March the reduced dynamics to horizon ``T``.

    Samples at every multiple of ``dt``; halts with a collision error
    if the minimum separation drops below 1e-6.
    """
    if method not in _STEPPERS:
        raise InvalidInputError(f"unknown method {method!r}; "
                                f"choose from {sorted(_STEPPERS)}")
    if not dt > 0 or T < dt:
        raise InvalidInputError("need dt > 0 and T >= dt")
    stepper = _STEPPERS[method]
    n_steps = int(round(T / dt))
    q = cfg0.q.copy()
    r0 = cfg0.r0
    times = [0.0]
    states = [ScaledConfig(q=q.copy(), r0=r0)]
    H = [hamiltonian(states[0])]
    seps = [states[0].min_separation()]
    for i in range(1, n_steps + 1):
        q = stepper(q, r0, dt)
        if not np.all(np.isfinite(q)):
            raise ConvergenceError(f"nonfinite state at tau={i * dt}")
        state = ScaledConfig(q=q.copy(), r0=r0)
        sep = state.min_separation()
        if sep < COLLISION_HALT:
            raise CollisionError(
                f"integration halted at tau={i * dt}: separation {sep:.3e}",
                separation=sep)
        times.append(i * dt)
        states.append(state)
        H.append(hamiltonian(state))
        seps.append(sep)
    return Trajectory(times=np.array(times), states=states,
                      hamiltonian=np.array(H), min_separation=np.array(seps))


def poincare_return(traj, ring=0):
    """Distance of the first Poincare return to the initial state.

    Section: the initial value of ``q_ring^2``, crossed in the initial
    direction of motion.  Crossing states are linearly interpolated
    between samples.  Returns ``(distance, tau)``; raises if the orbit
    never returns within the trajectory horizon.
    """
    qarr = traj.q_array()
    z = qarr[:, ring, 1] - qarr[0, ring, 1]
    direction = np.sign(z[np.argmax(np.abs(z) > 0)]) or 1.0
    # look for a crossing back through zero with the same signature as
    # the departure, after the orbit has moved away from the section
    away = np.abs(z) > 1e-6
    if not away.any():
        raise ConvergenceError("orbit never leaves the section")
    start = int(np.argmax(away))
    for i in range(start + 1, len(z) - 1):
        if z[i] == 0.0 or (z[i] * z[i + 1] < 0 and np.sign(z[i + 1]) == direction):
            w = z[i] / (z[i] - z[i + 1]) if z[i] != z[i + 1] else 0.0
            q_cross = (1 - w) * qarr[i] + w * qarr[i + 1]
            tau = (1 - w) * traj.times[i] + w * traj.times[i + 1]
            dist = float(np.sqrt(((q_cross - qarr[0]) ** 2).sum(-1)).max())
            return dist, float(tau)
    raise ConvergenceError("no Poincare return within the horizon")


# ----------------------------------------------------------------------
# physical-variable forms
# ----------------------------------------------------------------------

def theta0(rings, log_eps):
    """Main term of the physical center dynamics, per ring.

    ``|log eps| dP_j/dt = theta0_j + O(1)`` with

        theta0_j = -4 sum_{l != j} (P_j - P_l)^perp / |P_j - P_l|^2
                   + 2 |log eps| (r0 - r_j)/(r0 r_j) e_2 .
    """
    P = rings.centers
    k = rings.k
    if k > 1:
        d = P[:, None, :] - P[None, :, :]
        d2 = (d ** 2).sum(-1)
        np.fill_diagonal(d2, np.inf)
        if d2.min() == 0.0:
            raise CollisionError("coincident ring centers")
        inter = -4.0 * (perp(d) / d2[..., None]).sum(axis=1)
    else:
        inter = np.zeros((1, 2))
    out = inter
    out[:, 1] += (2.0 * abs(log_eps) * (rings.r0 - P[:, 0])
                  / (rings.r0 * P[:, 0]))
    return out


def scaled_to_physical(cfg, epsilon):
    """Map scaled offsets to physical centers and core scales.

    ``P_j = (r0, 0) + q_j/sqrt(|log eps|)``, ``eps_j = eps sqrt(r0/r_j)``,
    which enforces ``r_j eps_j^2 = r0 eps^2`` exactly.
    """
    if not 0 < epsilon < 1:
        raise InvalidInputError("epsilon must lie in (0, 1)")
    L = abs(np.log(epsilon))
    centers = np.empty_like(cfg.q)
    centers[:, 0] = cfg.r0 + cfg.q[:, 0] / np.sqrt(L)
    centers[:, 1] = cfg.q[:, 1] / np.sqrt(L)
    if np.any(centers[:, 0] <= 0):
        raise InvalidInputError("scaled offsets push a ring to r <= 0")
    core = epsilon * np.sqrt(cfg.r0 / centers[:, 0])
    return RingFamily(centers=centers, core_scales=core,
                      epsilon=epsilon, r0=cfg.r0)
