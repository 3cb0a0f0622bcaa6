"""Ring tracking, translation-speed measurement, and PDE/ODE comparison.

Ring centers are tracked as centroids of the conserved density ``r W``
over disks that follow the previous centers; the weighted centroid is
the natural tracked point because ``int r W`` is constant per support
component.  ``measure_speed`` recovers the unscaled translation speed
by adding the co-moving frame speed back onto the fitted drift, and
``compare_reduced`` quantifies how closely the PDE centers follow the
reduced leapfrogging dynamics.
"""

import json
from dataclasses import dataclass

import numpy as np

from .dynamics import scaled_to_physical
from .errors import InvalidInputError, LostRingError, WindowOverlapError

__all__ = [
    "CenterSeries", "ComparisonReport",
    "ring_centroids", "measure_speed", "compare_reduced",
    "exchange_crossings", "truncate_series",
]

LOST_RING_FRACTION = 1e-8


@dataclass
class CenterSeries:
    """Tracked window centroids: times (n,), centers (n, k, 2)."""

    times: np.ndarray
    centers: np.ndarray
    window_radius: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.centers = np.asarray(self.centers, dtype=float)
        if self.centers.ndim != 3 or self.centers.shape[2] != 2:
            raise InvalidInputError("centers must be shaped (n, k, 2)")
        if self.centers.shape[0] != self.times.size:
            raise InvalidInputError("times and centers disagree in length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise InvalidInputError("times must be strictly increasing")

    @property
    def k(self):
        return self.centers.shape[1]

    def window_valid(self, core_scales):
        """Whether the window honors both validity bounds everywhere."""
        if self.window_radius < 5.0 * float(np.max(core_scales)):
            return False
        if self.k > 1:
            d = self.centers[:, :, None, :] - self.centers[:, None, :, :]
            dist = np.sqrt((d ** 2).sum(-1))
            k = self.k
            dist[:, np.arange(k), np.arange(k)] = np.inf
            if self.window_radius > 0.5 * dist.min():
                return False
        return True

    def to_csv(self, path):
        k = self.k
        cols = ["tau"]
        for j in range(1, k + 1):
            cols += [f"r{j}", f"z{j}"]
        with open(path, "w") as f:
            f.write(",".join(cols) + "\n")
            for i, t in enumerate(self.times):
                row = [repr(float(t))]
                for j in range(k):
                    row += [repr(float(self.centers[i, j, 0])),
                            repr(float(self.centers[i, j, 1]))]
                f.write(",".join(row) + "\n")


def ring_centroids(omega, prev_centers, window_radius):
    """Weighted centroids over disks around the previous centers.

    Windows must be pairwise disjoint; a window holding less than
    1e-8 of the total weighted mass has lost its ring.
    """
    prev = np.atleast_2d(np.asarray(prev_centers, dtype=float))
    k = prev.shape[0]
    if k > 1:
        d = prev[:, None, :] - prev[None, :, :]
        dist = np.sqrt((d ** 2).sum(-1))
        dist[np.diag_indices(k)] = np.inf
        if dist.min() <= 2.0 * window_radius:
            i, j = np.unravel_index(np.argmin(dist), dist.shape)
            raise WindowOverlapError(
                f"windows of rings {i} and {j} overlap "
                f"(separation {dist[i, j]:.3g}, radius {window_radius:.3g})")
    g = omega.grid
    R, Z = g.mesh()
    wgt = omega.values * R
    total = wgt.sum()
    out = np.empty_like(prev)
    for j in range(k):
        m = (R - prev[j, 0]) ** 2 + (Z - prev[j, 1]) ** 2 <= window_radius ** 2
        wj = wgt[m]
        mass = wj.sum()
        if not mass > LOST_RING_FRACTION * abs(total):
            raise LostRingError(
                f"window {j} holds {mass:.3e} of total {total:.3e}")
        out[j, 0] = (R[m] * wj).sum() / mass
        out[j, 1] = (Z[m] * wj).sum() / mass
    return out


def measure_speed(series, log_eps, alpha0):
    """Translation speed: fitted drift plus the restored frame speed.

    Least-squares slope of the ring-averaged z-centroid against
    unscaled time ``t = tau/|log eps|``, plus ``2 alpha0 |log eps|``.
    """
    if series.times.size < 10:
        raise InvalidInputError("need at least 10 samples")
    L = abs(log_eps)
    t = series.times / L
    if t[-1] - t[0] <= 0:
        raise InvalidInputError("degenerate time span")
    zbar = series.centers[:, :, 1].mean(axis=1)
    slope = np.polyfit(t, zbar, 1)[0]
    return float(slope + 2.0 * alpha0 * L)


def exchange_crossings(series, pair=(0, 1)):
    """Times at which the r-coordinates of two rings cross."""
    i, j = pair
    dr = series.centers[:, i, 0] - series.centers[:, j, 0]
    crossings = []
    for m in range(dr.size - 1):
        if dr[m] == 0.0:
            continue
        if dr[m] * dr[m + 1] < 0:
            w = dr[m] / (dr[m] - dr[m + 1])
            crossings.append((1 - w) * series.times[m]
                             + w * series.times[m + 1])
    return np.array(crossings)


def truncate_series(series, t_max):
    """Restrict a center series to ``times <= t_max``."""
    keep = series.times <= t_max
    return CenterSeries(times=series.times[keep],
                        centers=series.centers[keep],
                        window_radius=series.window_radius)


@dataclass
class ComparisonReport:
    """Closeness of PDE ring centers to the reduced dynamics."""

    sup_error: float
    exchange_count: int
    hamiltonian_drift: float
    speed_ratio: float

    def __post_init__(self):
        vals = (self.sup_error, self.hamiltonian_drift, self.speed_ratio)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise InvalidInputError("report entries must be finite and >= 0")
        if self.exchange_count < 0:
            raise InvalidInputError("exchange_count must be >= 0")

    def to_json(self, path, metadata=None):
        doc = {
            "sup_error": self.sup_error,
            "exchange_count": self.exchange_count,
            "hamiltonian_drift": self.hamiltonian_drift,
            "speed_ratio": self.speed_ratio,
        }
        if metadata:
            doc["metadata"] = metadata
        with open(path, "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")


def compare_reduced(series, traj, epsilon, alpha0=None):
    """Compare tracked PDE centers against a reduced trajectory.

    The trajectory is mapped to physical centers, linearly interpolated
    at the series sample times over the overlapping span.  The exchange
    count (k = 2) counts sign changes of ``r_1 - r_2`` in the PDE
    series.
    """
    k = series.k
    if traj.k != k:
        raise InvalidInputError(f"ring counts differ: series {k}, "
                                f"trajectory {traj.k}")
    r0 = traj.states[0].r0
    ode_centers = np.array([
        scaled_to_physical(s, epsilon).centers for s in traj.states])

    t_lo = max(series.times[0], traj.times[0])
    t_hi = min(series.times[-1], traj.times[-1])
    sel = (series.times >= t_lo) & (series.times <= t_hi)
    if not sel.any():
        raise InvalidInputError("no overlapping time samples")
    t_common = series.times[sel]

    ode_at = np.empty((t_common.size, k, 2))
    for j in range(k):
        for c in range(2):
            ode_at[:, j, c] = np.interp(t_common, traj.times,
                                        ode_centers[:, j, c])
    err = np.sqrt(((series.centers[sel] - ode_at) ** 2).sum(-1))
    sup_error = float(err.max())

    exchange_count = (len(exchange_crossings(series)) if k == 2 else 0)
    hamiltonian_drift = float(
        np.abs(traj.hamiltonian - traj.hamiltonian[0]).max())

    L = abs(np.log(epsilon))
    a0 = alpha0 if alpha0 is not None else 1.0 / r0
    try:
        c_meas = measure_speed(series, L, a0)
        speed_ratio = abs(c_meas) / (2.0 * L / r0)
    except InvalidInputError:
        speed_ratio = 0.0
    return ComparisonReport(sup_error=sup_error,
                            exchange_count=int(exchange_count),
                            hamiltonian_drift=hamiltonian_drift,
                            speed_ratio=float(speed_ratio))
