import numpy as np
import pytest

from ringleap.diagnostics import (CenterSeries, ComparisonReport,
                                  compare_reduced, exchange_crossings,
                                  measure_speed, ring_centroids,
                                  truncate_series)
from ringleap.dynamics import ScaledConfig, integrate, scaled_to_physical
from ringleap.errors import (InvalidInputError, LostRingError,
                             WindowOverlapError)
from ringleap.fields import AxiGrid, ScalarField


def gaussian_blob(grid, center, sigma=0.04, amp=100.0):
    R, Z = grid.mesh()
    d2 = (R - center[0]) ** 2 + (Z - center[1]) ** 2
    return amp * np.exp(-d2 / (2 * sigma ** 2))


# ----------------------------------------------------------------------
# centroids
# ----------------------------------------------------------------------

def test_centroid_recovers_symmetric_blob():
    g = AxiGrid.from_extents(2.0, -1.0, 1.0, 257, 257)
    P = (1.05, 0.15)
    omega = ScalarField(grid=g, values=gaussian_blob(g, P))
    out = ring_centroids(omega, np.array([[1.0, 0.1]]), 0.3)
    # rw weighting biases the centroid slightly outward in r
    assert abs(out[0, 1] - P[1]) < 2e-3
    assert abs(out[0, 0] - P[0]) < 2e-3


def test_centroid_two_blobs_independent():
    g = AxiGrid.from_extents(2.0, -1.0, 1.0, 257, 257)
    P1, P2 = (0.8, -0.4), (1.3, 0.45)
    vals = gaussian_blob(g, P1) + gaussian_blob(g, P2)
    omega = ScalarField(grid=g, values=vals)
    out = ring_centroids(omega, np.array([P1, P2]) + 0.02, 0.25)
    assert np.abs(out - np.array([P1, P2])).max() < 5e-3


def test_centroid_window_mass():
    from ringleap.dynamics import RingFamily
    from ringleap.fields import superpose
    g = AxiGrid.from_extents(2.0, -1.0, 1.0, 513, 513)
    fam = RingFamily(centers=[[1.0, 0.0]], core_scales=[0.05],
                     epsilon=0.05, r0=1.0)
    omega = superpose(fam, g)
    R, Z = g.mesh()
    m = (R - 1.0) ** 2 + Z ** 2 <= 0.5 ** 2
    mass = (omega.values * R)[m].sum() * g.hr * g.hz
    assert mass == pytest.approx(8 * np.pi, rel=0.02)


def test_centroid_overlap_error():
    g = AxiGrid.from_extents(2.0, -1.0, 1.0, 65, 65)
    omega = ScalarField(grid=g, values=gaussian_blob(g, (1.0, 0.0)))
    with pytest.raises(WindowOverlapError):
        ring_centroids(omega, np.array([[1.0, 0.0], [1.05, 0.0]]), 0.2)


def test_centroid_lost_ring_error():
    g = AxiGrid.from_extents(2.0, -1.0, 1.0, 65, 65)
    omega = ScalarField(grid=g, values=gaussian_blob(g, (1.0, 0.0)))
    with pytest.raises(LostRingError):
        ring_centroids(omega, np.array([[0.3, -0.9]]), 0.05)


# ----------------------------------------------------------------------
# speed measurement
# ----------------------------------------------------------------------

def _series_from_z(times, z_of_t, r=1.0):
    centers = np.zeros((len(times), 1, 2))
    centers[:, 0, 0] = r
    centers[:, 0, 1] = z_of_t
    return CenterSeries(times=np.asarray(times), centers=centers,
                        window_radius=0.25)


def test_measure_speed_synthetic_slope():
    L = 3.0
    tau = np.linspace(0, 1, 50)
    t = tau / L
    series = _series_from_z(tau, 3.0 * t)
    assert measure_speed(series, L, alpha0=0.0) == pytest.approx(3.0)


def test_measure_speed_frame_restoration():
    L = abs(np.log(0.02))
    tau = np.linspace(0, 1, 50)
    series = _series_from_z(tau, np.zeros_like(tau))
    assert measure_speed(series, L, alpha0=1.0) == pytest.approx(2 * L)


def test_measure_speed_invariant_under_z_shift():
    L = 3.0
    tau = np.linspace(0, 2, 64)
    s1 = _series_from_z(tau, 0.7 * tau)
    s2 = _series_from_z(tau, 0.7 * tau + 5.0)
    assert measure_speed(s1, L, 1.0) == pytest.approx(
        measure_speed(s2, L, 1.0))


def test_measure_speed_needs_samples():
    series = _series_from_z(np.linspace(0, 1, 5), np.zeros(5))
    with pytest.raises(InvalidInputError):
        measure_speed(series, 3.0, 1.0)


# ----------------------------------------------------------------------
# comparison
# ----------------------------------------------------------------------

def _synthetic_pair_series(traj, epsilon, jitter=0.0, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([scaled_to_physical(s, epsilon).centers
                        for s in traj.states])
    centers = centers + jitter * rng.standard_normal(centers.shape)
    return CenterSeries(times=traj.times, centers=centers,
                        window_radius=0.1)


def test_compare_identical_inputs():
    traj = integrate(ScaledConfig(q=[[0.3, 0], [-0.3, 0]]), 1e-2, 2.0)
    series = _synthetic_pair_series(traj, 0.05)
    rep = compare_reduced(series, traj, 0.05)
    assert rep.sup_error == 0.0
    assert rep.hamiltonian_drift < 1e-3      # rk4 at the coarse dt used here
    assert rep.exchange_count >= 2


def test_compare_error_grows_with_perturbation():
    # ODE continuity: growing initial offsets give growing sup_error
    base = integrate(ScaledConfig(q=[[0.3, 0], [-0.3, 0]]), 1e-2, 2.0)
    series = _synthetic_pair_series(base, 0.05)
    errs = []
    for delta in (1e-3, 3e-3, 1e-2, 3e-2):
        traj = integrate(ScaledConfig(q=[[0.3 + delta, 0], [-0.3, 0]]),
                         1e-2, 2.0)
        errs.append(compare_reduced(series, traj, 0.05).sup_error)
    assert all(a < b for a, b in zip(errs, errs[1:]))


def test_compare_mismatched_k():
    traj = integrate(ScaledConfig(q=[[0.3, 0], [-0.3, 0]]), 1e-2, 0.5)
    series = _series_from_z(traj.times, np.zeros_like(traj.times))
    with pytest.raises(InvalidInputError):
        compare_reduced(series, traj, 0.05)


def test_compare_relabeling_symmetry():
    traj = integrate(ScaledConfig(q=[[0.3, 0], [-0.3, 0]]), 1e-2, 1.0)
    series = _synthetic_pair_series(traj, 0.05, jitter=1e-3, seed=2)
    rep = compare_reduced(series, traj, 0.05)
    flipped = CenterSeries(times=series.times,
                           centers=series.centers[:, ::-1, :],
                           window_radius=series.window_radius)
    traj_flipped = integrate(ScaledConfig(q=[[-0.3, 0], [0.3, 0]]),
                             1e-2, 1.0)
    rep2 = compare_reduced(flipped, traj_flipped, 0.05)
    assert rep2.sup_error == pytest.approx(rep.sup_error, rel=1e-9)


def test_exchange_crossings_and_truncate():
    tau = np.linspace(0, 1, 101)
    centers = np.zeros((tau.size, 2, 2))
    centers[:, 0, 0] = 1.0 + 0.1 * np.cos(4 * np.pi * tau)
    centers[:, 1, 0] = 1.0 - 0.1 * np.cos(4 * np.pi * tau)
    series = CenterSeries(times=tau, centers=centers, window_radius=0.1)
    crossings = exchange_crossings(series)
    assert len(crossings) == 4
    first = truncate_series(series, float(crossings[1]))
    assert len(exchange_crossings(first)) == 1
    assert first.times[-1] <= crossings[1]


def test_report_invariants_and_json(tmp_path):
    with pytest.raises(InvalidInputError):
        ComparisonReport(sup_error=-1.0, exchange_count=0,
                         hamiltonian_drift=0.0, speed_ratio=1.0)
    rep = ComparisonReport(sup_error=0.1, exchange_count=3,
                           hamiltonian_drift=1e-9, speed_ratio=1.05)
    path = tmp_path / "report.json"
    rep.to_json(path, metadata={"epsilon": 0.05, "r0": 1.0,
                                "grid": [64, 64], "dt": 1e-3})
    import json
    doc = json.loads(path.read_text())
    assert doc["exchange_count"] == 3
    assert doc["metadata"]["epsilon"] == 0.05


def test_window_validity_flag():
    tau = np.linspace(0, 1, 11)
    centers = np.zeros((11, 2, 2))
    centers[:, 0, 0] = 1.2
    centers[:, 1, 0] = 0.8
    s = CenterSeries(times=tau, centers=centers, window_radius=0.1)
    assert s.window_valid(core_scales=[0.02, 0.02])
    assert not s.window_valid(core_scales=[0.05, 0.05])
    s2 = CenterSeries(times=tau, centers=centers, window_radius=0.25)
    assert not s2.window_valid(core_scales=[0.02, 0.02])
