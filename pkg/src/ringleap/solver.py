"""Semi-Lagrangian integration of the scaled axisymmetric Euler equation.

Marches ``|log eps| r dW/dtau + grad^perp(r^2(Psi - alpha0 |log eps|))
. grad W = 0`` with ``-Delta5 Psi = W``: every step refreshes the
stream function from the vorticity, freezes the advecting field, traces
each node backward along the characteristics (RK2 substeps), and reads
the old vorticity at the feet with shape-preserving interpolation.
Interpolation can only redistribute within local bounds, so the max
norm cannot grow; the weighted mass ``int r W`` is the monitored
conservation surrogate.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics, kernels
from .errors import (CFLError, ConvergenceError, DomainError,
                     InvalidInputError, LostRingError, ResolutionError,
                     WindowOverlapError)
from .fields import AxiGrid, ScalarField, ring_mass, solve_delta5, superpose

__all__ = ["SolverConfig", "SolverState", "RunResult", "init", "step", "run"]

CFL_WARN_CELLS = 5.0
CFL_ERROR_CELLS = 20.0
BOUNDARY_MARGIN_CELLS = 10
# levels for the per-step confinement check, relative to the initial
# max norm.  The co-moving frame continuously strips vorticity outside
# the rings' entrained atmosphere and streams it out through the
# downstream boundary, so vorticity near a boundary is legitimate where
# the characteristics LEAVE the domain.  INFLOW_LEVEL polices the
# inflow sides (they must be quiescent for the W = 0 inflow condition
# to be consistent); HARD_LEVEL flags core-scale vorticity near any
# outer boundary regardless of direction.
INFLOW_LEVEL = 1e-3
HARD_LEVEL = 5e-2


@dataclass(frozen=True)
class SolverConfig:
    """Scenario parameters for the transport solver."""

    epsilon: float
    r0: float
    grid: AxiGrid
    dt: float
    T: float
    alpha0: float = None
    interp: str = "monotone-bicubic"
    substeps: int = 4

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise InvalidInputError("epsilon must lie in (0, 1)")
        if not self.dt > 0 or self.T < self.dt:
            raise InvalidInputError("need dt > 0 and T >= dt")
        if self.substeps < 1:
            raise InvalidInputError("substeps must be >= 1")
        if self.interp not in ("bilinear", "monotone-bicubic"):
            raise InvalidInputError(f"unknown interp {self.interp!r}")
        if self.epsilon < 2.0 * max(self.grid.hr, self.grid.hz):
            raise ResolutionError(
                "core scale below twice the grid spacing")
        if self.alpha0 is None:
            object.__setattr__(self, "alpha0", 1.0 / self.r0)

    @property
    def log_eps(self):
        return abs(np.log(self.epsilon))


@dataclass
class SolverState:
    """Vorticity/stream pair at one scaled time."""

    tau: float
    omega: ScalarField
    psi: ScalarField
    mass0: float
    maxnorm0: float


def init(rings, cfg):
    """Superpose the ring family on the grid and solve for the stream."""
    omega = superpose(rings, cfg.grid)
    psi = solve_delta5(omega)
    return SolverState(tau=0.0, omega=omega, psi=psi,
                       mass0=ring_mass(omega),
                       maxnorm0=float(np.abs(omega.values).max()))


def _advection_stream(state, cfg):
    g = cfg.grid
    R, _ = g.mesh()
    pt = state.psi.values - cfg.alpha0 * cfg.log_eps
    F = R ** 2 * pt
    axis_uz = 2.0 * pt[0, :] / cfg.log_eps
    return F, axis_uz


def _check_support(omega, maxnorm0, xi0, yi0, xi, yi):
    """Confine the support away from boundaries the flow enters through.

    Within the margin bands, vorticity above INFLOW_LEVEL is an error
    wherever the local characteristic direction points into the domain
    (the foot lies on the boundary side of the node); above HARD_LEVEL
    it is an error unconditionally.
    """
    v = np.abs(omega.values)
    hard = HARD_LEVEL * max(maxnorm0, 1e-300)
    soft = INFLOW_LEVEL * max(maxnorm0, 1e-300)
    m = BOUNDARY_MARGIN_CELLS
    bands = (
        ("r_max", v[-m:, :], xi[-m:, :] > xi0[-m:, :]),
        ("z_min", v[:, :m], yi[:, :m] < yi0[:, :m]),
        ("z_max", v[:, -m:], yi[:, -m:] > yi0[:, -m:]),
    )
    for name, band, inflow in bands:
        if band.max() > hard:
            raise DomainError(
                f"vorticity support within {m} cells of the {name} boundary")
        if inflow.any() and band[inflow].max() > soft:
            raise DomainError(
                f"inflow through {name} carries vorticity above the "
                "consistency level; enlarge the domain")


def step(state, cfg):
    """One semi-Lagrangian step with the velocity frozen at tau."""
    g = cfg.grid
    F, axis_uz = _advection_stream(state, cfg)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(axis_uz))):
        raise ConvergenceError("nonfinite advecting field")
    nr, nz = g.nr, g.nz
    xi0, yi0 = np.meshgrid(np.arange(nr, dtype=float),
                           np.arange(nz, dtype=float), indexing="ij")
    xi, yi, maxdisp = kernels.backtrace(F, axis_uz, xi0, yi0, g.hr, g.hz,
                                        cfg.log_eps, cfg.dt, cfg.substeps)
    if maxdisp > CFL_ERROR_CELLS:
        raise CFLError(
            f"characteristic displacement {maxdisp:.1f} cells per substep")
    if maxdisp > CFL_WARN_CELLS:
        warnings.warn(
            f"characteristic displacement {maxdisp:.1f} cells per substep "
            "exceeds the advisory limit", RuntimeWarning, stacklevel=2)
    if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(yi))):
        raise ConvergenceError("nonfinite characteristic feet")
    w_new = kernels.interpolate(state.omega.values, xi, yi, method=cfg.interp)
    omega = ScalarField(grid=g, values=w_new, role="relative_vorticity")
    if state.mass0 >= 0 and w_new.min() < -1e-12 * max(state.maxnorm0, 1.0):
        raise ConvergenceError("interpolation produced spurious negatives")
    _check_support(omega, state.maxnorm0, xi0, yi0, xi, yi)
    psi = solve_delta5(omega)
    return SolverState(tau=state.tau + cfg.dt, omega=omega, psi=psi,
                       mass0=state.mass0, maxnorm0=state.maxnorm0)


@dataclass
class RunResult:
    """Series produced by a full transport run.

    Centroid tracking may end earlier than the conservation series when
    the rings can no longer be told apart (windows overlap or a window
    loses its vorticity); ``tracking_truncated_at`` records that time.
    """

    times: np.ndarray
    mass: np.ndarray
    maxnorm: np.ndarray
    center_series: object
    snapshots: list = field(default_factory=list)
    tracking_truncated_at: float = None

    def conserved_to_csv(self, path):
        with open(path, "w") as f:
            f.write("tau,mass,maxnorm\n")
            for t, m, x in zip(self.times, self.mass, self.maxnorm):
                f.write(f"{float(t)!r},{float(m)!r},{float(x)!r}\n")


def default_window_radius(rings):
    """Centroid window: five core scales, capped by window disjointness."""
    emax = float(rings.core_scales.max())
    lower = 5.0 * emax
    if rings.k > 1:
        d = rings.centers[:, None, :] - rings.centers[None, :, :]
        dist = np.sqrt((d ** 2).sum(-1))
        dist[np.diag_indices(rings.k)] = np.inf
        upper = 0.45 * float(dist.min())
    else:
        upper = 2.0 * lower
    radius = min(max(lower, 1e-12), upper) if upper < lower else lower
    if radius < lower:
        warnings.warn(
            f"window radius {radius:.3g} below five core scales "
            f"({lower:.3g}); rings too close for a fully valid window",
            RuntimeWarning, stacklevel=2)
    return radius


def run(rings, cfg, snapshot_every=0, window_radius=None):
    """March to the horizon, recording conserved series and centroids."""
    state = init(rings, cfg)
    n_steps = int(round(cfg.T / cfg.dt))
    if window_radius is None:
        window_radius = default_window_radius(rings)

    times = [0.0]
    mass = [ring_mass(state.omega)]
    maxnorm = [float(np.abs(state.omega.values).max())]
    snapshots = []
    if snapshot_every:
        snapshots.append((0.0, state.omega))

    centers = rings.centers.copy()
    center_times = [0.0]
    center_list = [centers.copy()]
    tracking = True
    truncated_at = None
    # windows shrink with the current separation so rings stay
    # individually tracked deep into a close approach; tracking ends
    # when the window falls to grid scale
    radius_floor = 3.0 * max(cfg.grid.hr, cfg.grid.hz)

    for i in range(1, n_steps + 1):
        state = step(state, cfg)
        times.append(state.tau)
        mass.append(ring_mass(state.omega))
        maxnorm.append(float(np.abs(state.omega.values).max()))
        if tracking:
            radius = window_radius
            if centers.shape[0] > 1:
                d = centers[:, None, :] - centers[None, :, :]
                dist = np.sqrt((d ** 2).sum(-1))
                dist[np.diag_indices(centers.shape[0])] = np.inf
                radius = min(radius, 0.45 * float(dist.min()))
            if radius < radius_floor:
                tracking = False
                truncated_at = state.tau
            else:
                try:
                    centers = diagnostics.ring_centroids(
                        state.omega, centers, radius)
                    center_times.append(state.tau)
                    center_list.append(centers.copy())
                except (WindowOverlapError, LostRingError):
                    tracking = False
                    truncated_at = state.tau
        if snapshot_every and i % snapshot_every == 0:
            snapshots.append((state.tau, state.omega))

    series = diagnostics.CenterSeries(
        times=np.array(center_times),
        centers=np.array(center_list),
        window_radius=window_radius)
    return RunResult(times=np.array(times), mass=np.array(mass),
                     maxnorm=np.array(maxnorm), center_series=series,
                     snapshots=snapshots, tracking_truncated_at=truncated_at)
