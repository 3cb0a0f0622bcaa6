"""Hot numeric kernels for the semi-Lagrangian solver.

Two interchangeable implementations live here: numba ``@njit`` loops
(default) and a vectorized pure-numpy fallback.  Set the environment
variable ``RINGLEAP_NUMBA=0`` before import to force the numpy path;
``ringleap.bench`` times the two against each other.

All kernels work in fractional index coordinates: a point ``(xi, yi)``
sits at ``r = xi*hr``, ``z = z_min + yi*hz`` on a field shaped
``(nr, nz)``.  Points outside the index rectangle interpolate to zero
(inflow reads zero vorticity); stencil taps are edge-extended.

The foot velocity is *not* an interpolation of the node velocities: it
is the analytic perp-gradient of a C^1 bicubic surface fitted to the
advection stream ``F = r^2 (psi - alpha0 |log eps|)``.  The exact flow
of that surface preserves the measure ``r dr dz``, which is what keeps
the discrete vorticity mass from drifting.  Near the axis (``xi`` below
``AXIS_CUTOFF``) the regular limit ``u_r = 0``, ``u_z = 2*psit(0,z)/L``
is used instead of dividing by ``r``.
"""

import os

import numpy as np

AXIS_CUTOFF = 0.75

_env = os.environ.get("RINGLEAP_NUMBA", "").strip().lower()
_want_numba = _env not in ("0", "false", "no", "off")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _want_numba


# ----------------------------------------------------------------------
# loop-style sources (compiled with numba when available)
# ----------------------------------------------------------------------

def _bilinear_loop(F, xi, yi, out):
    nr, nz = F.shape
    for k in range(xi.size):
        x = xi[k]
        y = yi[k]
        if x < 0.0 or x > nr - 1 or y < 0.0 or y > nz - 1:
            out[k] = 0.0
            continue
        i = int(x)
        j = int(y)
        if i > nr - 2:
            i = nr - 2
        if j > nz - 2:
            j = nz - 2
        tx = x - i
        ty = y - j
        out[k] = (F[i, j] * (1 - tx) * (1 - ty)
                  + F[i + 1, j] * tx * (1 - ty)
                  + F[i, j + 1] * (1 - tx) * ty
                  + F[i + 1, j + 1] * tx * ty)


def _bicubic_clamped_loop(F, xi, yi, out):
    # Catmull-Rom surface, result clamped to the 4x4 stencil range so a
    # nonnegative field stays nonnegative and the max norm cannot grow.
    nr, nz = F.shape
    for k in range(xi.size):
        x = xi[k]
        y = yi[k]
        if x < 0.0 or x > nr - 1 or y < 0.0 or y > nz - 1:
            out[k] = 0.0
            continue
        i1 = int(np.floor(x))
        j1 = int(np.floor(y))
        if i1 > nr - 2:
            i1 = nr - 2
        if j1 > nz - 2:
            j1 = nz - 2
        tx = x - i1
        ty = y - j1
        t2 = tx * tx
        t3 = t2 * tx
        wx0 = -0.5 * t3 + t2 - 0.5 * tx
        wx1 = 1.5 * t3 - 2.5 * t2 + 1.0
        wx2 = -1.5 * t3 + 2.0 * t2 + 0.5 * tx
        wx3 = 0.5 * t3 - 0.5 * t2
        t2 = ty * ty
        t3 = t2 * ty
        wy0 = -0.5 * t3 + t2 - 0.5 * ty
        wy1 = 1.5 * t3 - 2.5 * t2 + 1.0
        wy2 = -1.5 * t3 + 2.0 * t2 + 0.5 * ty
        wy3 = 0.5 * t3 - 0.5 * t2
        acc = 0.0
        lo = np.inf
        hi = -np.inf
        for di in range(4):
            ii = i1 + di - 1
            if ii < 0:
                ii = 0
            if ii > nr - 1:
                ii = nr - 1
            if di == 0:
                wx = wx0
            elif di == 1:
                wx = wx1
            elif di == 2:
                wx = wx2
            else:
                wx = wx3
            row = 0.0
            for dj in range(4):
                jj = j1 + dj - 1
                if jj < 0:
                    jj = 0
                if jj > nz - 1:
                    jj = nz - 1
                v = F[ii, jj]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
                if dj == 0:
                    row += wy0 * v
                elif dj == 1:
                    row += wy1 * v
                elif dj == 2:
                    row += wy2 * v
                else:
                    row += wy3 * v
            acc += wx * row
        if acc < lo:
            acc = lo
        if acc > hi:
            acc = hi
        out[k] = acc


def _stream_velocity_loop(F, axis_uz, xi, yi, hr, hz, log_eps, ur_out, uz_out):
    nr, nz = F.shape
    for k in range(xi.size):
        x = xi[k]
        y = yi[k]
        if x < 0.0:
            x = 0.0
        if x > nr - 1:
            x = nr - 1.0
        if y < 0.0:
            y = 0.0
        if y > nz - 1:
            y = nz - 1.0
        j1 = int(np.floor(y))
        if j1 > nz - 2:
            j1 = nz - 2
        ty = y - j1
        if x < AXIS_CUTOFF:
            ur_out[k] = 0.0
            uz_out[k] = axis_uz[j1] * (1 - ty) + axis_uz[j1 + 1] * ty
            continue
        i1 = int(np.floor(x))
        if i1 > nr - 2:
            i1 = nr - 2
        tx = x - i1
        t2 = tx * tx
        t3 = t2 * tx
        wx0 = -0.5 * t3 + t2 - 0.5 * tx
        wx1 = 1.5 * t3 - 2.5 * t2 + 1.0
        wx2 = -1.5 * t3 + 2.0 * t2 + 0.5 * tx
        wx3 = 0.5 * t3 - 0.5 * t2
        dwx0 = -1.5 * t2 + 2.0 * tx - 0.5
        dwx1 = 4.5 * t2 - 5.0 * tx
        dwx2 = -4.5 * t2 + 4.0 * tx + 0.5
        dwx3 = 1.5 * t2 - tx
        t2 = ty * ty
        t3 = t2 * ty
        wy0 = -0.5 * t3 + t2 - 0.5 * ty
        wy1 = 1.5 * t3 - 2.5 * t2 + 1.0
        wy2 = -1.5 * t3 + 2.0 * t2 + 0.5 * ty
        wy3 = 0.5 * t3 - 0.5 * t2
        dwy0 = -1.5 * t2 + 2.0 * ty - 0.5
        dwy1 = 4.5 * t2 - 5.0 * ty
        dwy2 = -4.5 * t2 + 4.0 * ty + 0.5
        dwy3 = 1.5 * t2 - ty
        fr = 0.0
        fz = 0.0
        for di in range(4):
            ii = i1 + di - 1
            if ii < 0:
                ii = 0
            if ii > nr - 1:
                ii = nr - 1
            if di == 0:
                wx, dwx = wx0, dwx0
            elif di == 1:
                wx, dwx = wx1, dwx1
            elif di == 2:
                wx, dwx = wx2, dwx2
            else:
                wx, dwx = wx3, dwx3
            rowv = 0.0
            rowd = 0.0
            for dj in range(4):
                jj = j1 + dj - 1
                if jj < 0:
                    jj = 0
                if jj > nz - 1:
                    jj = nz - 1
                v = F[ii, jj]
                if dj == 0:
                    rowv += wy0 * v
                    rowd += dwy0 * v
                elif dj == 1:
                    rowv += wy1 * v
                    rowd += dwy1 * v
                elif dj == 2:
                    rowv += wy2 * v
                    rowd += dwy2 * v
                else:
                    rowv += wy3 * v
                    rowd += dwy3 * v
            fr += dwx * rowv
            fz += wx * rowd
        r = x * hr
        ur_out[k] = -(fz / hz) / (r * log_eps)
        uz_out[k] = (fr / hr) / (r * log_eps)


def _backtrace_loop(F, axis_uz, xi0, yi0, hr, hz, log_eps, dt, substeps,
                    xi_out, yi_out, ur_s, uz_s):
    # RK2 (midpoint) substeps backward along the frozen advecting field.
    # Returns the largest single-substep displacement in cell units.
    n = xi0.size
    for k in range(n):
        xi_out[k] = xi0[k]
        yi_out[k] = yi0[k]
    dsub = dt / substeps
    maxdisp = 0.0
    for _ in range(substeps):
        _stream_velocity_loop(F, axis_uz, xi_out, yi_out, hr, hz, log_eps,
                              ur_s, uz_s)
        for k in range(n):
            ur_s[k] = xi_out[k] - 0.5 * dsub * ur_s[k] / hr
            uz_s[k] = yi_out[k] - 0.5 * dsub * uz_s[k] / hz
        _stream_velocity_loop(F, axis_uz, ur_s, uz_s, hr, hz, log_eps,
                              ur_s, uz_s)
        for k in range(n):
            dx = dsub * ur_s[k] / hr
            dy = dsub * uz_s[k] / hz
            d = abs(dx)
            if abs(dy) > d:
                d = abs(dy)
            if d > maxdisp:
                maxdisp = d
            xi_out[k] -= dx
            yi_out[k] -= dy
    return maxdisp


# ----------------------------------------------------------------------
# vectorized numpy fallbacks
# ----------------------------------------------------------------------

def _cubic_weights(t):
    t2 = t * t
    t3 = t2 * t
    return (-0.5 * t3 + t2 - 0.5 * t,
            1.5 * t3 - 2.5 * t2 + 1.0,
            -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2)


def _cubic_dweights(t):
    t2 = t * t
    return (-1.5 * t2 + 2.0 * t - 0.5,
            4.5 * t2 - 5.0 * t,
            -4.5 * t2 + 4.0 * t + 0.5,
            1.5 * t2 - t)


def _bilinear_np(F, xi, yi, out):
    nr, nz = F.shape
    out[:] = 0.0
    m = (xi >= 0) & (xi <= nr - 1) & (yi >= 0) & (yi <= nz - 1)
    x = xi[m]
    y = yi[m]
    i = np.minimum(x.astype(np.int64), nr - 2)
    j = np.minimum(y.astype(np.int64), nz - 2)
    tx = x - i
    ty = y - j
    out[m] = (F[i, j] * (1 - tx) * (1 - ty) + F[i + 1, j] * tx * (1 - ty)
              + F[i, j + 1] * (1 - tx) * ty + F[i + 1, j + 1] * tx * ty)


def _bicubic_clamped_np(F, xi, yi, out):
    nr, nz = F.shape
    out[:] = 0.0
    m = (xi >= 0) & (xi <= nr - 1) & (yi >= 0) & (yi <= nz - 1)
    x = xi[m]
    y = yi[m]
    i1 = np.minimum(np.floor(x).astype(np.int64), nr - 2)
    j1 = np.minimum(np.floor(y).astype(np.int64), nz - 2)
    wx = _cubic_weights(x - i1)
    wy = _cubic_weights(y - j1)
    acc = np.zeros_like(x)
    lo = np.full_like(x, np.inf)
    hi = np.full_like(x, -np.inf)
    for di in range(4):
        ii = np.clip(i1 + di - 1, 0, nr - 1)
        row = np.zeros_like(x)
        for dj in range(4):
            jj = np.clip(j1 + dj - 1, 0, nz - 1)
            v = F[ii, jj]
            np.minimum(lo, v, out=lo)
            np.maximum(hi, v, out=hi)
            row += wy[dj] * v
        acc += wx[di] * row
    out[m] = np.clip(acc, lo, hi)


def _stream_velocity_np(F, axis_uz, xi, yi, hr, hz, log_eps, ur_out, uz_out):
    nr, nz = F.shape
    x = np.clip(xi, 0.0, nr - 1.0)
    y = np.clip(yi, 0.0, nz - 1.0)
    j1 = np.minimum(np.floor(y).astype(np.int64), nz - 2)
    ty = y - j1
    near_axis = x < AXIS_CUTOFF
    i1 = np.minimum(np.floor(x).astype(np.int64), nr - 2)
    tx = x - i1
    wx = _cubic_weights(tx)
    dwx = _cubic_dweights(tx)
    wy = _cubic_weights(ty)
    dwy = _cubic_dweights(ty)
    fr = np.zeros_like(x)
    fz = np.zeros_like(x)
    for di in range(4):
        ii = np.clip(i1 + di - 1, 0, nr - 1)
        rowv = np.zeros_like(x)
        rowd = np.zeros_like(x)
        for dj in range(4):
            jj = np.clip(j1 + dj - 1, 0, nz - 1)
            v = F[ii, jj]
            rowv += wy[dj] * v
            rowd += dwy[dj] * v
        fr += dwx[di] * rowv
        fz += wx[di] * rowd
    r = np.where(near_axis, 1.0, x * hr)
    ur_out[:] = np.where(near_axis, 0.0, -(fz / hz) / (r * log_eps))
    uz_axis = axis_uz[j1] * (1 - ty) + axis_uz[j1 + 1] * ty
    uz_out[:] = np.where(near_axis, uz_axis, (fr / hr) / (r * log_eps))


def _backtrace_np(F, axis_uz, xi0, yi0, hr, hz, log_eps, dt, substeps,
                  xi_out, yi_out, ur_s, uz_s):
    xi_out[:] = xi0
    yi_out[:] = yi0
    dsub = dt / substeps
    maxdisp = 0.0
    for _ in range(substeps):
        _stream_velocity_np(F, axis_uz, xi_out, yi_out, hr, hz, log_eps,
                            ur_s, uz_s)
        xm = xi_out - 0.5 * dsub * ur_s / hr
        ym = yi_out - 0.5 * dsub * uz_s / hz
        _stream_velocity_np(F, axis_uz, xm, ym, hr, hz, log_eps, ur_s, uz_s)
        dx = dsub * ur_s / hr
        dy = dsub * uz_s / hz
        step_max = max(np.abs(dx).max(), np.abs(dy).max()) if dx.size else 0.0
        maxdisp = max(maxdisp, step_max)
        xi_out -= dx
        yi_out -= dy
    return maxdisp


# ----------------------------------------------------------------------
# implementation selection
# ----------------------------------------------------------------------

numpy_impl = {
    "bilinear": _bilinear_np,
    "bicubic_clamped": _bicubic_clamped_np,
    "stream_velocity": _stream_velocity_np,
    "backtrace": _backtrace_np,
}

if HAVE_NUMBA:
    _bilinear_nb = njit(cache=True)(_bilinear_loop)
    _bicubic_clamped_nb = njit(cache=True)(_bicubic_clamped_loop)
    _stream_velocity_nb = njit(cache=True)(_stream_velocity_loop)

    @njit(cache=True)
    def _backtrace_nb(F, axis_uz, xi0, yi0, hr, hz, log_eps, dt, substeps,
                      xi_out, yi_out, ur_s, uz_s):
        n = xi0.size
        for k in range(n):
            xi_out[k] = xi0[k]
            yi_out[k] = yi0[k]
        dsub = dt / substeps
        maxdisp = 0.0
        for _ in range(substeps):
            _stream_velocity_nb(F, axis_uz, xi_out, yi_out, hr, hz, log_eps,
                                ur_s, uz_s)
            for k in range(n):
                ur_s[k] = xi_out[k] - 0.5 * dsub * ur_s[k] / hr
                uz_s[k] = yi_out[k] - 0.5 * dsub * uz_s[k] / hz
            _stream_velocity_nb(F, axis_uz, ur_s, uz_s, hr, hz, log_eps,
                                ur_s, uz_s)
            for k in range(n):
                dx = dsub * ur_s[k] / hr
                dy = dsub * uz_s[k] / hz
                d = abs(dx)
                if abs(dy) > d:
                    d = abs(dy)
                if d > maxdisp:
                    maxdisp = d
                xi_out[k] -= dx
                yi_out[k] -= dy
        return maxdisp

    numba_impl = {
        "bilinear": _bilinear_nb,
        "bicubic_clamped": _bicubic_clamped_nb,
        "stream_velocity": _stream_velocity_nb,
        "backtrace": _backtrace_nb,
    }
else:  # pragma: no cover
    numba_impl = None

_active = numba_impl if USE_NUMBA else numpy_impl


def active_impl_name():
    return "numba" if _active is numba_impl else "numpy"


def interpolate(F, xi, yi, method="monotone-bicubic"):
    """Sample field ``F`` at fractional indices; zero outside the grid."""
    out = np.empty(xi.shape)
    if method == "bilinear":
        _active["bilinear"](F, xi.ravel(), yi.ravel(), out.ravel())
    elif method == "monotone-bicubic":
        _active["bicubic_clamped"](F, xi.ravel(), yi.ravel(), out.ravel())
    else:
        raise ValueError(f"unknown interpolation method: {method!r}")
    return out


def stream_velocity(F, axis_uz, xi, yi, hr, hz, log_eps):
    """Advecting velocity at points, from the bicubic surface of F."""
    ur = np.empty(xi.shape)
    uz = np.empty(xi.shape)
    _active["stream_velocity"](F, axis_uz, xi.ravel(), yi.ravel(),
                               hr, hz, log_eps, ur.ravel(), uz.ravel())
    return ur, uz


def backtrace(F, axis_uz, xi0, yi0, hr, hz, log_eps, dt, substeps):
    """Trace characteristics backward by ``dt`` with RK2 substeps.

    Returns ``(xi, yi, max_substep_displacement_in_cells)``.
    """
    xi = np.empty(xi0.shape)
    yi = np.empty(yi0.shape)
    ur_s = np.empty(xi0.size)
    uz_s = np.empty(xi0.size)
    maxdisp = _active["backtrace"](F, axis_uz, xi0.ravel(), yi0.ravel(),
                                   hr, hz, log_eps, float(dt), int(substeps),
                                   xi.ravel(), yi.ravel(), ur_s, uz_s)
    return xi, yi, maxdisp
