"""Axisymmetric fields on the (r, z) half-plane and the weighted solvers.

The relative stream/vorticity pair solves ``-Delta5 psi = omega`` with

    Delta5 = d_rr + (3/r) d_r + d_zz ,

the five-dimensional Laplacian acting on functions of ``(r, z)``; the
axis carries a Neumann condition ``d_r psi(0, z) = 0`` (enforced by
ghost reflection, with the regular limit ``4 d_rr + d_zz`` at ``r=0``)
and the outer boundaries carry Dirichlet data from the R^5 monopole far
field.  The discrete system is assembled once per grid, factorized
sparsely, and reused across solves.

Concentrated ring fields: ``stream_ring`` is the regularized stream
function of a thin ring of core scale ``eps`` centered at ``P0``
(log-regularized leading term, optional curvature corrector ``Gamma``
from :mod:`ringleap.profiles`, hooks for higher-order terms), and
``vorticity_leading`` / ``superpose`` build the matching concentrated
vorticity used as initial data.
"""

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (ConvergenceError, DomainError, InvalidInputError,
                     ResolutionError)
from .profiles import compute_Gamma, eval_U

__all__ = [
    "AxiGrid", "ScalarField", "RingFieldOptions",
    "greens_near", "stream_ring", "vorticity_leading", "superpose",
    "solve_delta5", "apply_delta5", "velocity_field", "alpha_speed",
    "ring_mass",
]

SUPPORT_TRUNCATION = 20.0     # vorticity cut at 20 core scales
RESOLUTION_FACTOR = 2.0       # require eps_j >= 2 max(hr, hz)
SOLVER_RTOL = 1e-9
# "effectively zero" for the compact-support precondition.  A thin
# outflow sheet of this relative amplitude crossing the boundary rings
# perturbs the monopole closure negligibly; anything heavier means the
# source genuinely touches the boundary and the closure is invalid.
# The transport loop polices boundary traffic in a direction-aware way
# on top of this hard level.
EDGE_LEVEL = 5e-2


# ----------------------------------------------------------------------
# grid and field containers
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AxiGrid:
    """Uniform node-centered grid over the half-plane, axis included.

    Nodes sit at ``r_i = i*hr`` (``i = 0..nr-1``) and
    ``z_m = z_min + m*hz``.
    """

    nr: int
    nz: int
    hr: float
    hz: float
    z_min: float

    def __post_init__(self):
        if self.nr < 8 or self.nz < 8:
            raise InvalidInputError("need nr, nz >= 8")
        if not (self.hr > 0 and self.hz > 0):
            raise InvalidInputError("need positive spacings")

    @classmethod
    def from_extents(cls, r_max, z_min, z_max, nr, nz):
        return cls(nr=nr, nz=nz, hr=r_max / (nr - 1),
                   hz=(z_max - z_min) / (nz - 1), z_min=z_min)

    @property
    def r_max(self):
        return (self.nr - 1) * self.hr

    @property
    def z_max(self):
        return self.z_min + (self.nz - 1) * self.hz

    def r_nodes(self):
        return np.arange(self.nr) * self.hr

    def z_nodes(self):
        return self.z_min + np.arange(self.nz) * self.hz

    def mesh(self):
        return np.meshgrid(self.r_nodes(), self.z_nodes(), indexing="ij")

    def key(self):
        return (self.nr, self.nz, self.hr, self.hz, self.z_min)


@dataclass
class ScalarField:
    """Sampled field on an AxiGrid; role tags vorticity vs stream."""

    grid: AxiGrid
    values: np.ndarray
    role: str = "relative_vorticity"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nr, self.grid.nz):
            raise InvalidInputError("values must be shaped (nr, nz)")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("field values must be finite")
        if self.role not in ("relative_vorticity", "relative_stream"):
            raise InvalidInputError(f"unknown field role {self.role!r}")

    def to_binary(self, path):
        """Flat binary: int64 nr, nz; float64 hr, hz, z_min; row-major body."""
        g = self.grid
        with open(path, "wb") as f:
            f.write(struct.pack("<qqddd", g.nr, g.nz, g.hr, g.hz, g.z_min))
            f.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def from_binary(cls, path, role="relative_vorticity"):
        with open(path, "rb") as f:
            nr, nz, hr, hz, z_min = struct.unpack("<qqddd", f.read(40))
            body = np.frombuffer(f.read(), dtype="<f8").reshape(nr, nz)
        grid = AxiGrid(nr=nr, nz=nz, hr=hr, hz=hz, z_min=z_min)
        return cls(grid=grid, values=body.astype(float), role=role)

    def to_csv(self, path):
        if self.grid.nr * self.grid.nz > 1 << 20:
            raise InvalidInputError("grid too large for CSV output")
        r = self.grid.r_nodes()
        z = self.grid.z_nodes()
        with open(path, "w") as f:
            f.write("r,z,value\n")
            for i in range(self.grid.nr):
                for m in range(self.grid.nz):
                    f.write(f"{float(r[i])!r},{float(z[m])!r},{float(self.values[i, m])!r}\n")


@dataclass(frozen=True)
class RingFieldOptions:
    """Term selection for the regularized ring stream function.

    ``include_H`` / ``include_K`` are hooks for the second-order
    near-field correction and the regular harmonic part; neither has a
    pinned closed form, so they default to zero models unless callables
    ``h_func(x, P0)`` / ``k_func(x, P0)`` are supplied.  ``gamma`` may
    override the computed core corrector profile.
    """

    include_H: bool = False
    include_K: bool = False
    include_Gamma: bool = True
    h_func: object = None
    k_func: object = None
    gamma: object = None


DEFAULT_RING_OPTIONS = RingFieldOptions()


# ----------------------------------------------------------------------
# concentrated ring fields
# ----------------------------------------------------------------------

def _split_xy(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def greens_near(x, P0):
    """Near-field expansion of the weighted Green function about P0."""
    r, z = _split_xy(x)
    r0, z0 = float(P0[0]), float(P0[1])
    d2 = (r - r0) ** 2 + (z - z0) ** 2
    if np.any(d2 == 0.0):
        raise InvalidInputError("greens_near is singular at x = P0")
    return -2.0 * np.log(d2) * (1.0 - 1.5 * (r - r0) / r0)


def stream_ring(x, P0, eps, opts=DEFAULT_RING_OPTIONS):
    """Regularized stream function of one concentrated ring.

    ``r0 * Psi = log(1/(eps^2+|x-P0|^2)^2) (1 - 3(r-r0)/(2 r0) + H)
    + K + (r-r0)/(2 r0) * Gamma(|x-P0|/eps)``; finite everywhere.
    """
    if not 0 < eps < 0.5:
        raise InvalidInputError("eps must lie in (0, 0.5)")
    r, z = _split_xy(x)
    r0, z0 = float(P0[0]), float(P0[1])
    if r0 <= 0:
        raise InvalidInputError("P0 must lie in the half-plane r > 0")
    d2 = (r - r0) ** 2 + (z - z0) ** 2
    core = -2.0 * np.log(eps ** 2 + d2)
    pref = 1.0 - 1.5 * (r - r0) / r0
    if opts.include_H and opts.h_func is not None:
        pref = pref + opts.h_func(x, P0)
    val = core * pref
    if opts.include_K and opts.k_func is not None:
        val = val + opts.k_func(x, P0)
    if opts.include_Gamma:
        gamma = opts.gamma if opts.gamma is not None else compute_Gamma()
        val = val + ((r - r0) / (2.0 * r0)) * gamma(np.sqrt(d2) / eps)
    return val / r0


def vorticity_leading(x, P_j, eps_j):
    """Leading concentrated vorticity ``U((x-P_j)/eps_j)/(r_j eps_j^2)``."""
    if not eps_j > 0:
        raise InvalidInputError("eps_j must be positive")
    r, z = _split_xy(x)
    rj, zj = float(P_j[0]), float(P_j[1])
    if rj <= 0:
        raise InvalidInputError("P_j must lie in the half-plane r > 0")
    d2 = ((r - rj) ** 2 + (z - zj) ** 2) / eps_j ** 2
    return 8.0 / (1.0 + d2) ** 2 / (rj * eps_j ** 2)


def superpose(rings, grid):
    """Sum of leading ring vorticities sampled on the grid.

    Each ring is truncated outside ``|x - P_j| > 20 eps_j``.  Raises a
    resolution error naming the worst ring when a core is thinner than
    twice the grid spacing.
    """
    hmax = max(grid.hr, grid.hz)
    vals = np.zeros((grid.nr, grid.nz))
    if rings.k == 0:
        return ScalarField(grid=grid, values=vals, role="relative_vorticity")
    worst = int(np.argmin(rings.core_scales))
    if rings.core_scales[worst] < RESOLUTION_FACTOR * hmax:
        raise ResolutionError(
            f"ring {worst} under-resolved: eps_j = "
            f"{rings.core_scales[worst]:.4g} < {RESOLUTION_FACTOR} * "
            f"max(hr, hz) = {RESOLUTION_FACTOR * hmax:.4g}")
    R, Z = grid.mesh()
    for j in range(rings.k):
        rj, zj = rings.centers[j]
        ej = rings.core_scales[j]
        d2 = (R - rj) ** 2 + (Z - zj) ** 2
        wj = 8.0 / (1.0 + d2 / ej ** 2) ** 2 / (rj * ej ** 2)
        wj[d2 > (SUPPORT_TRUNCATION * ej) ** 2] = 0.0
        vals += wj
    return ScalarField(grid=grid, values=vals, role="relative_vorticity")


def ring_mass(field):
    """Weighted mass ``int r W dr dz`` on the grid."""
    R, _ = field.grid.mesh()
    return float((field.values * R).sum() * field.grid.hr * field.grid.hz)


# ----------------------------------------------------------------------
# discrete Delta5
# ----------------------------------------------------------------------

_LU_CACHE = {}


def _assemble(grid):
    """Sparse matrix of ``-Delta5`` with axis regularization.

    Interior rows: centered second order.  Axis rows: the regular limit
    ``4 d_rr + d_zz`` with ghost reflection.  Outer boundary rows are
    identity (Dirichlet).
    """
    nr, nz, hr, hz = grid.nr, grid.nz, grid.hr, grid.hz
    N = nr * nz
    ii, mm = np.meshgrid(np.arange(nr), np.arange(nz), indexing="ij")
    k = (ii * nz + mm).ravel()
    ii = ii.ravel()
    mm = mm.ravel()
    bnd = (ii == nr - 1) | (mm == 0) | (mm == nz - 1)
    axis = (ii == 0) & ~bnd
    inner = ~bnd & ~axis

    rows = [k[bnd]]
    cols = [k[bnd]]
    vals = [np.ones(int(bnd.sum()))]

    ka = k[axis]
    rows += [ka, ka, ka, ka]
    cols += [ka, ka + nz, ka - 1, ka + 1]
    vals += [np.full(ka.size, 8.0 / hr ** 2 + 2.0 / hz ** 2),
             np.full(ka.size, -8.0 / hr ** 2),
             np.full(ka.size, -1.0 / hz ** 2),
             np.full(ka.size, -1.0 / hz ** 2)]

    ki = k[inner]
    ri = ii[inner] * hr
    rows += [ki] * 5
    cols += [ki, ki + nz, ki - nz, ki - 1, ki + 1]
    vals += [np.full(ki.size, 2.0 / hr ** 2 + 2.0 / hz ** 2),
             -(1.0 / hr ** 2 + 1.5 / (ri * hr)),
             -(1.0 / hr ** 2 - 1.5 / (ri * hr)),
             np.full(ki.size, -1.0 / hz ** 2),
             np.full(ki.size, -1.0 / hz ** 2)]

    A = sp.csc_matrix(sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N, N)))
    return A, bnd


def _factorized(grid):
    key = grid.key()
    hit = _LU_CACHE.get(key)
    if hit is None:
        A, bnd = _assemble(grid)
        hit = (A, spla.splu(A), bnd)
        _LU_CACHE[key] = hit
    return hit


def monopole_far_field(omega):
    """Dirichlet closure: R^5 monopole ``m5 / (15 w5 s^3)``.

    ``m5 = 2 pi^2 int omega r^3 dr dz`` and ``15 w5 = 8 pi^2`` with
    ``w5`` the volume of the unit 5-ball, so the far field reduces to
    ``m5/(8 pi^2 s^3)``.
    """
    g = omega.grid
    R, Z = g.mesh()
    m3 = np.trapezoid(np.trapezoid(omega.values * R ** 3, dx=g.hz, axis=1),
                      dx=g.hr)
    m5 = 2.0 * np.pi ** 2 * m3
    s3 = np.maximum(np.sqrt(R ** 2 + Z ** 2), 1e-300) ** 3
    return m5 / (8.0 * np.pi ** 2 * s3)


def solve_delta5(omega, grid=None):
    """Solve ``-Delta5 psi = omega`` on the grid of ``omega``.

    The source must be compactly supported inside the domain: zero on
    the three outermost node rings (the axis excepted).
    """
    if grid is not None and grid.key() != omega.grid.key():
        raise InvalidInputError("grid does not match the field's grid")
    g = omega.grid
    w = omega.values
    scale = np.abs(w).max()
    if scale > 0:
        edge = np.zeros_like(w, dtype=bool)
        edge[-3:, :] = True
        edge[:, :3] = True
        edge[:, -3:] = True
        if np.abs(w[edge]).max() > EDGE_LEVEL * scale:
            raise DomainError(
                "source support touches the outer boundary rings")
    A, lu, bnd = _factorized(g)
    rhs = w.ravel().copy()
    rhs[bnd] = monopole_far_field(omega).ravel()[bnd]
    x = lu.solve(rhs)
    rnorm = np.abs(A @ x - rhs).max()
    ref = max(np.abs(rhs).max(), 1.0)
    if rnorm > SOLVER_RTOL * ref:
        raise ConvergenceError(
            f"sparse solve residual {rnorm:.3e} above tolerance "
            f"{SOLVER_RTOL * ref:.3e}", residual=rnorm)
    return ScalarField(grid=g, values=x.reshape(g.nr, g.nz),
                       role="relative_stream")


def apply_delta5(psi):
    """Discrete ``Delta5 psi`` with the same axis regularization.

    One-sided second-order stencils fill the outer boundary rings.
    """
    g = psi.grid
    v = psi.values
    nr, nz, hr, hz = g.nr, g.nz, g.hr, g.hz
    r = g.r_nodes()[:, None]

    d_rr = np.empty_like(v)
    d_rr[1:-1, :] = (v[2:, :] - 2 * v[1:-1, :] + v[:-2, :]) / hr ** 2
    d_rr[0, :] = 2.0 * (v[1, :] - v[0, :]) / hr ** 2      # ghost reflection
    d_rr[-1, :] = (2 * v[-1, :] - 5 * v[-2, :] + 4 * v[-3, :]
                   - v[-4, :]) / hr ** 2
    d_r = np.empty_like(v)
    d_r[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2 * hr)
    d_r[0, :] = 0.0
    d_r[-1, :] = (1.5 * v[-1, :] - 2 * v[-2, :] + 0.5 * v[-3, :]) / hr

    d_zz = np.empty_like(v)
    d_zz[:, 1:-1] = (v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]) / hz ** 2
    d_zz[:, 0] = (2 * v[:, 0] - 5 * v[:, 1] + 4 * v[:, 2] - v[:, 3]) / hz ** 2
    d_zz[:, -1] = (2 * v[:, -1] - 5 * v[:, -2] + 4 * v[:, -3]
                   - v[:, -4]) / hz ** 2

    out = np.empty_like(v)
    out[1:, :] = d_rr[1:, :] + 3.0 * d_r[1:, :] / r[1:] + d_zz[1:, :]
    # regular limit at the axis (d_rr already uses the reflected ghost)
    out[0, :] = 4.0 * d_rr[0, :] + d_zz[0, :]
    return ScalarField(grid=g, values=out, role=psi.role)


# ----------------------------------------------------------------------
# advecting velocity and the translation constant
# ----------------------------------------------------------------------

def velocity_field(psi, log_eps, alpha0):
    """Advecting velocity ``u = grad^perp(r^2 (psi - alpha0 L))/(r L)``.

    ``L = |log eps|``.  Centered differences of the products; one-sided
    at the outer boundary; on the axis ``u_r = 0`` exactly and ``u_z``
    takes the regular limit ``2 (psi - alpha0 L)/L``.
    """
    g = psi.grid
    L = abs(log_eps)
    R, _ = g.mesh()
    pt = psi.values - alpha0 * L
    F = R ** 2 * pt
    hr, hz = g.hr, g.hz

    ur = np.empty_like(F)
    ur[:, 1:-1] = -(F[:, 2:] - F[:, :-2]) / (2 * hz)
    ur[:, 0] = -(-1.5 * F[:, 0] + 2 * F[:, 1] - 0.5 * F[:, 2]) / hz
    ur[:, -1] = -(1.5 * F[:, -1] - 2 * F[:, -2] + 0.5 * F[:, -3]) / hz

    uz = np.empty_like(F)
    uz[1:-1, :] = (F[2:, :] - F[:-2, :]) / (2 * hr)
    uz[-1, :] = (1.5 * F[-1, :] - 2 * F[-2, :] + 0.5 * F[-3, :]) / hr
    uz[0, :] = 0.0

    ur[1:, :] /= R[1:, :] * L
    uz[1:, :] /= R[1:, :] * L
    ur[0, :] = 0.0
    uz[0, :] = 2.0 * pt[0, :] / L
    return (ScalarField(grid=g, values=ur, role="relative_stream"),
            ScalarField(grid=g, values=uz, role="relative_stream"))


def alpha_speed(r0, eps, consts):
    """Frame speed constant of a single concentrated ring.

    ``alpha = 1/r0 - (A0 - A)/(4 r0 log eps)`` with
    ``A0 = 6 - log 8`` (the K = 0 specialization) and ``A`` the
    orthogonality constant; ``alpha - 1/r0 = O(1/|log eps|)``.
    """
    if not 0 < eps < 1:
        raise InvalidInputError("eps must lie in (0, 1)")
    A0 = 6.0 - np.log(8.0)
    return 1.0 / r0 - (A0 - consts.A) / (4.0 * r0 * np.log(eps))
