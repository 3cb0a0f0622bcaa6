"""Radial vortex profiles and the Fourier-mode linearized solver.

The building block is the algebraically localized vortex profile
``U(y) = 8/(1+|y|^2)^2`` (total mass ``8*pi``) whose logarithm
``Gamma0 = log U`` solves the Liouville equation ``-lap Gamma0 = U``.
Linearizing around it and separating Fourier modes in the angle gives,
for mode ``n``, the radial operator

    L_n[p] = p'' + p'/rho - n^2 p/rho^2 + 8 p/(1+rho^2)^2 .

``mode_solve`` inverts ``L_n`` with a zero condition at the outer
radius through nested quadratures against the homogeneous solution
``zeta_n`` (``zeta_1 = rho/(1+rho^2)`` in closed form).  For ``|n| = 1``
the operator has a kernel, so the datum must be orthogonal to
``zeta_1`` in ``L^2(rho drho)``; the solver projects small defects away
and rejects large ones.

``compute_Gamma`` assembles the mode-1 core corrector: the swirl
profile whose first angular harmonic compensates the self-interaction
of a curved vortex core.  Its datum is ``-(rho/2) U (Gamma0 + A)`` with
the constant ``A`` fixed exactly by the orthogonality condition.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, quad, solve_ivp

from .errors import ConvergenceError, InvalidInputError, OrthogonalityError

__all__ = [
    "RadialProfile", "ProfileConstants",
    "eval_U", "eval_Gamma0", "kernel_Z",
    "zeta_profile", "mode_operator_apply", "mode_solve",
    "compute_constants", "compute_Gamma", "gamma_datum",
    "grid_orthogonal_A",
]


# ----------------------------------------------------------------------
# domain types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """A sampled radial function of ``rho = |y|``.

    ``mode_n`` records the Fourier mode a profile belongs to
    (0 for plain radial scalars).
    """

    rho: np.ndarray
    values: np.ndarray
    mode_n: int = 0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "values", values)
        if rho.ndim != 1 or values.shape != rho.shape:
            raise InvalidInputError("rho and values must be 1-d and congruent")
        if rho.size and rho[0] < 0:
            raise InvalidInputError("rho must start at a nonnegative abscissa")
        if rho.size > 1 and not np.all(np.diff(rho) > 0):
            raise InvalidInputError("rho must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("profile values must be finite")

    def __call__(self, rho):
        return np.interp(rho, self.rho, self.values)

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("rho,value\n")
            for r, v in zip(self.rho, self.values):
                f.write(f"{float(r)!r},{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path, mode_n=0):
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        data = np.atleast_2d(data)
        return cls(rho=data[:, 0], values=data[:, 1], mode_n=mode_n)


@dataclass(frozen=True)
class ProfileConstants:
    """Quadrature constants of the first-order core expansion.

    ``I0 = int U y1 d1Gamma0 dy`` and ``I1 = int U y1 d1Gamma0 Gamma0 dy``
    over the plane; ``A = -I1/I0`` and ``A_bar = A - 6``.
    """

    I0: float
    I1: float
    A: float = field(init=False)
    A_bar: float = field(init=False)

    def __post_init__(self):
        if not self.I0 < 0:
            raise InvalidInputError("I0 must be negative")
        object.__setattr__(self, "A", -self.I1 / self.I0)
        object.__setattr__(self, "A_bar", -6.0 - self.I1 / self.I0)


# ----------------------------------------------------------------------
# closed-form profiles and kernels
# ----------------------------------------------------------------------

def _norm2(y):
    y = np.asarray(y, dtype=float)
    return y[..., 0] ** 2 + y[..., 1] ** 2


def eval_U(y):
    """Vortex profile ``8/(1+|y|^2)^2``."""
    return 8.0 / (1.0 + _norm2(y)) ** 2


def eval_Gamma0(y):
    """``log(8) - 2 log(1+|y|^2)``, satisfying ``-lap Gamma0 = U``."""
    return np.log(8.0) - 2.0 * np.log1p(_norm2(y))


def kernel_Z(l, y):
    """Bounded kernel elements of the linearized Liouville operator.

    ``l = 1, 2`` are the translation modes ``d_l Gamma0``; ``l = 0`` is
    the dilation mode ``2 + grad Gamma0 . y``.
    """
    y = np.asarray(y, dtype=float)
    n2 = _norm2(y)
    if l == 0:
        return 2.0 * (1.0 - n2) / (1.0 + n2)
    if l in (1, 2):
        return -4.0 * y[..., l - 1] / (1.0 + n2)
    raise InvalidInputError(f"kernel index must be 0, 1 or 2, got {l}")


def _U_rho(rho):
    return 8.0 / (1.0 + rho ** 2) ** 2


def _Gamma0_rho(rho):
    return np.log(8.0) - 2.0 * np.log1p(rho ** 2)


def zeta1(rho):
    """Mode-1 homogeneous solution ``rho/(1+rho^2)``."""
    rho = np.asarray(rho, dtype=float)
    return rho / (1.0 + rho ** 2)


def _zeta_ode(n, rho):
    """Integrate ``L_n[zeta] = 0`` outward from a series start."""
    c2 = -2.0 / (n + 1)
    c4 = 2.0 / (n + 1)
    rho0 = min(1e-3, float(rho[0]) if rho[0] > 0 else 1e-3)
    z0 = rho0 ** n * (1 + c2 * rho0 ** 2 + c4 * rho0 ** 4)
    dz0 = (n * rho0 ** (n - 1) + (n + 2) * c2 * rho0 ** (n + 1)
           + (n + 4) * c4 * rho0 ** (n + 3))

    def odes(r, yv):
        zv, dz = yv
        return [dz, -dz / r + n ** 2 * zv / r ** 2 - _U_rho(r) * zv]

    t_eval = rho[rho >= rho0]
    sol = solve_ivp(odes, (rho0, float(rho[-1])), [z0, dz0], t_eval=t_eval,
                    method="DOP853", rtol=1e-12, atol=1e-300)
    if not sol.success:
        raise ConvergenceError(f"zeta_{n} integration failed: {sol.message}")
    out = np.empty_like(rho)
    small = rho < rho0
    out[small] = rho[small] ** n * (1 + c2 * rho[small] ** 2
                                    + c4 * rho[small] ** 4)
    out[~small] = sol.y[0]
    return out


def zeta_profile(n, rho):
    """Homogeneous solution of ``L_n`` behaving like ``rho^|n|`` at 0.

    Modes 1 and 2 have closed forms; higher modes integrate the ODE
    outward from a series start ``rho^n (1 - 2 rho^2/(n+1) + ...)``.
    """
    n = abs(int(n))
    if n == 0:
        raise InvalidInputError("mode 0 has no zeta normalization here")
    rho = np.asarray(rho, dtype=float)
    if n == 1:
        return zeta1(rho)
    if n == 2:
        return rho ** 2 * (rho ** 2 + 3.0) / (3.0 * (1.0 + rho ** 2))
    return _zeta_ode(n, rho)


# ----------------------------------------------------------------------
# finite-difference application of L_n
# ----------------------------------------------------------------------

def _fd_weights(offsets, order):
    """Finite-difference weights on integer offsets for one derivative.

    Solves the Vandermonde system sum_j w_j s_j^m = m! delta_{m,order}.
    """
    offsets = np.asarray(offsets, dtype=float)
    p = offsets.size
    V = np.vander(offsets, p, increasing=True).T
    b = np.zeros(p)
    b[order] = math.factorial(order)
    return np.linalg.solve(V, b)


def _derivatives_fd(values, h):
    """First and second derivatives on a uniform grid, 5-point stencils.

    Centered in the interior, skewed near the ends; formally 4th order
    for the first derivative everywhere and for the second derivative in
    the interior (3rd order at the skewed nodes).
    """
    n = values.size
    if n < 5:
        raise InvalidInputError("grid too coarse: need at least 5 points")
    d1 = np.empty(n)
    d2 = np.empty(n)
    # interior: centered 5-point
    d1[2:-2] = (values[:-4] - 8 * values[1:-3]
                + 8 * values[3:-1] - values[4:]) / (12 * h)
    d2[2:-2] = (-values[:-4] + 16 * values[1:-3] - 30 * values[2:-2]
                + 16 * values[3:-1] - values[4:]) / (12 * h ** 2)
    # edges: 5-point skewed stencils
    for i, off in ((0, np.arange(0, 5)), (1, np.arange(-1, 4)),
                   (n - 2, np.arange(-3, 2)), (n - 1, np.arange(-4, 1))):
        w1 = _fd_weights(off, 1)
        w2 = _fd_weights(off, 2)
        window = values[i + off[0]: i + off[-1] + 1]
        d1[i] = w1 @ window / h
        d2[i] = w2 @ window / h ** 2
    return d1, d2


def _uniform_h(rho):
    h = np.diff(rho)
    if h.size == 0:
        raise InvalidInputError("grid too coarse: need at least 5 points")
    if not np.allclose(h, h[0], rtol=1e-8, atol=0):
        raise InvalidInputError("profile grid must be uniform")
    return float(h[0])


def mode_operator_apply(n, p):
    """Apply ``L_n`` to a sampled profile by finite differences."""
    if int(n) == 0:
        raise InvalidInputError("mode 0 is not handled by this operator")
    rho = p.rho
    if rho.size < 5:
        raise InvalidInputError("grid too coarse: need at least 5 points")
    h = _uniform_h(rho)
    if rho[0] <= 0:
        raise InvalidInputError("operator grid must start at rho > 0")
    d1, d2 = _derivatives_fd(p.values, h)
    vals = (d2 + d1 / rho - n ** 2 * p.values / rho ** 2
            + _U_rho(rho) * p.values)
    return RadialProfile(rho=rho, values=vals, mode_n=int(n))


# ----------------------------------------------------------------------
# variation-of-parameters solver
# ----------------------------------------------------------------------

ORTHOGONALITY_RTOL = 1e-8


def _cumulative(y, x):
    return cumulative_simpson(y, x=x, initial=0.0)


def mode_solve(n, g, R_out):
    """Solve ``L_n[p] = g`` with ``p(R_out) = 0``.

    Nested quadratures against ``zeta_n``: the inward form for
    ``|n| >= 2`` (regular at the origin), the outward form for
    ``|n| = 1`` which requires the datum orthogonal to ``zeta_1`` in
    ``L^2(rho drho)`` and returns the decaying solution.  A defect
    within ``ORTHOGONALITY_RTOL`` of the integrand's L1 mass is
    projected out; a larger one is rejected.
    """
    n = int(n)
    if n == 0:
        raise InvalidInputError("mode 0 is unsupported; use |n| >= 1")
    rho_full = g.rho
    vals_full = np.asarray(g.values, dtype=float)
    if rho_full.size and rho_full[0] == 0.0:
        # quadratures start at the first positive node; p(0) = 0 is
        # reattached at the end
        rho = rho_full[1:]
        gv = vals_full[1:].copy()
        had_origin = True
    else:
        rho = rho_full
        gv = vals_full.copy()
        had_origin = False
    if rho.size < 5:
        raise InvalidInputError("grid too coarse: need at least 5 points")
    h = _uniform_h(rho)
    if R_out > rho[-1] + 1.5 * h:
        raise InvalidInputError(
            f"R_out={R_out} exceeds the sampled grid (max rho {rho[-1]})")
    keep = rho <= R_out + h / 2
    rho = rho[keep]
    gv = gv[keep]

    zet = zeta_profile(n, rho)

    if abs(n) == 1:
        integrand = gv * zet * rho
        d = _cumulative(integrand, rho)[-1]
        mass = _cumulative(np.abs(integrand), rho)[-1]
        defect = abs(d) / max(mass, np.finfo(float).tiny)
        if defect > ORTHOGONALITY_RTOL:
            raise OrthogonalityError(
                "mode-1 datum not orthogonal to zeta_1: "
                f"int g zeta_1 rho drho = {d:.6e} "
                f"(relative defect {defect:.3e})",
                defect=defect)
        # remove the residual kernel component exactly on this grid
        znorm = _cumulative(zet ** 2 * rho, rho)[-1]
        gv = gv - (d / znorm) * zet
        inner = _cumulative(gv * zet * rho, rho)
        tail = inner[-1] - inner          # int_r^R g zeta s ds
        f = tail / (rho * zet ** 2)
        outer = _cumulative(f, rho)
        p = zet * (outer[-1] - outer)
    else:
        inner = _cumulative(gv * zet * rho, rho)
        f = inner / (rho * zet ** 2)
        outer = _cumulative(f, rho)
        p = -zet * (outer[-1] - outer)

    if had_origin:
        rho = np.concatenate(([0.0], rho))
        p = np.concatenate(([0.0], p))
    return RadialProfile(rho=rho, values=p, mode_n=n)


# ----------------------------------------------------------------------
# quadrature constants and the mode-1 corrector
# ----------------------------------------------------------------------

def _radial_quad(f, tol):
    val, err, info = quad(f, 0.0, np.inf, epsabs=tol, epsrel=tol,
                          full_output=True)[:3]
    if err > max(10 * tol, 100 * tol * abs(val)):
        raise ConvergenceError(
            f"adaptive quadrature did not converge (estimate {val}, "
            f"error {err})", residual=err)
    return val


def compute_constants(quadrature_tol=1e-10):
    """Adaptive quadrature of I0 and I1.

    The angular integral is analytic (``int cos^2 = pi``), leaving
    one-dimensional radial integrals.  Each is evaluated at the given
    tolerance and at a 10x looser one; disagreement raises an error
    carrying both iterates.
    """
    if not quadrature_tol > 0:
        raise InvalidInputError("quadrature_tol must be positive")

    def f0(r):
        return -32.0 * np.pi * r ** 3 / (1.0 + r ** 2) ** 3

    def f1(r):
        return f0(r) * _Gamma0_rho(r)

    out = []
    for f in (f0, f1):
        tight = _radial_quad(f, quadrature_tol)
        loose = _radial_quad(f, quadrature_tol * 10)
        if abs(tight - loose) > 1e-6 * max(1.0, abs(tight)):
            raise ConvergenceError(
                "quadrature iterates disagree", iterates=(loose, tight))
        out.append(tight)
    return ProfileConstants(I0=out[0], I1=out[1])


def gamma_datum(rho, A):
    """Mode-1 forcing ``-(rho/2) U (Gamma0 + A)`` of the core corrector."""
    rho = np.asarray(rho, dtype=float)
    return -(rho / 2.0) * _U_rho(rho) * (_Gamma0_rho(rho) + A)


def grid_orthogonal_A(rho):
    """Shift constant making ``gamma_datum`` orthogonal to ``zeta_1``
    in the grid quadrature (tends to ``A`` as the grid extends)."""
    rho = np.asarray(rho, dtype=float)
    zet = zeta1(rho)
    base = gamma_datum(rho, 0.0)
    shift = -(rho / 2.0) * _U_rho(rho)
    num = _cumulative(base * zet * rho, rho)[-1]
    den = _cumulative(shift * zet * rho, rho)[-1]
    return float(-num / den)


_GAMMA_CACHE = {}


def compute_Gamma(R_out=100.0, h=2e-3):
    """Mode-1 core corrector ``Gamma(rho) = 2 p_1(rho)/rho``.

    The datum is shifted by the constant that makes the grid quadrature
    orthogonal to ``zeta_1`` exactly (the infinite-domain value of that
    constant is ``A`` from :func:`compute_constants`; the finite-domain
    shift differs by the truncated tail).  Finite at 0, decaying like a
    power of ``log rho`` over ``rho^2`` at infinity.
    """
    if R_out < 100.0:
        raise InvalidInputError("compute_Gamma requires R_out >= 100")
    key = (float(R_out), float(h))
    if key in _GAMMA_CACHE:
        return _GAMMA_CACHE[key]

    rho = np.arange(h, R_out + h / 2, h)
    zet = zeta1(rho)
    A_grid = grid_orthogonal_A(rho)
    gv = gamma_datum(rho, A_grid)
    check = _cumulative(gv * zet * rho, rho)[-1]
    mass = _cumulative(np.abs(gv * zet * rho), rho)[-1]
    if abs(check) / max(mass, np.finfo(float).tiny) > 1e-6:
        raise OrthogonalityError(
            "internal consistency: A-shifted datum still has defect "
            f"{check:.3e}", defect=check)

    p1 = mode_solve(1, RadialProfile(rho=rho, values=gv, mode_n=1), R_out)
    gamma = 2.0 * p1.values / rho
    # finite value at the origin by quadratic extrapolation
    rho_out = np.concatenate(([0.0], rho))
    gamma_out = np.concatenate(([2 * gamma[0] - gamma[1]], gamma))
    prof = RadialProfile(rho=rho_out, values=gamma_out, mode_n=0)
    _GAMMA_CACHE[key] = prof
    return prof
