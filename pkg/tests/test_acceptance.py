"""Acceptance suite: one test (and one printed line) per criterion.

Each criterion runs at its stated tolerance.  The two PDE scenarios
(the leapfrogging pair and the single translating ring) are shared
module-scoped runs; they are marked ``slow`` and dominate the runtime
(several minutes together).  Run with ``pytest -v -s`` to see every
verdict line.
"""

import numpy as np
import pytest

from ringleap import diagnostics, dynamics, fields, profiles, solver


def _verdict(name, passed, detail):
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return passed


# ----------------------------------------------------------------------
# criterion 1: Liouville identity
# ----------------------------------------------------------------------

def test_criterion_1_liouville_identity():
    h = 1e-2
    g = np.arange(-5.0, 5.0 + h / 2, h)
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    G = profiles.eval_Gamma0(pts)
    lap = (G[2:, 1:-1] + G[:-2, 1:-1] + G[1:-1, 2:] + G[1:-1, :-2]
           - 4 * G[1:-1, 1:-1]) / h ** 2
    U = profiles.eval_U(pts)[1:-1, 1:-1]
    inside = X[1:-1, 1:-1] ** 2 + Y[1:-1, 1:-1] ** 2 <= 25.0
    sup = float(np.abs(lap + U)[inside].max())
    ok = sup <= 1e-3
    assert _verdict("criterion 1 (Liouville identity)", ok,
                    f"sup |D_h Gamma0 + U| = {sup:.3e}, tolerance 1e-3"), sup


# ----------------------------------------------------------------------
# criterion 2: mode solver
# ----------------------------------------------------------------------

def test_criterion_2_mode_solver():
    h = 1e-3
    rho = np.arange(h, 30.0 + h / 2, h)
    z1 = profiles.zeta1(rho)
    res1 = profiles.mode_operator_apply(
        1, profiles.RadialProfile(rho=rho, values=z1, mode_n=1))
    sel = (rho >= 0.1) & (rho <= 20.0)
    r_hom = float(np.abs(res1.values[sel]).max())

    worst_rt = 0.0
    for n in (2, 3):
        arg = (rho - 1) * (2 - rho)
        g = np.where((rho > 1) & (rho < 2),
                     np.exp(-1.0 / np.maximum(arg, 1e-12)), 0.0)
        p = profiles.mode_solve(
            n, profiles.RadialProfile(rho=rho, values=g, mode_n=n), 30.0)
        res = profiles.mode_operator_apply(n, p)
        rel = float(np.abs(res.values[2:-2] - g[2:-2]).max()
                    / np.abs(g).max())
        worst_rt = max(worst_rt, rel)
    ok = r_hom < 1e-6 and worst_rt < 1e-4
    assert _verdict(
        "criterion 2 (mode solver)", ok,
        f"L1[zeta1] residual {r_hom:.2e} (tol 1e-6), "
        f"round-trip residual {worst_rt:.2e} (tol 1e-4)")


# ----------------------------------------------------------------------
# criterion 3: quadrature constants
# ----------------------------------------------------------------------

def test_criterion_3_quadrature_constants():
    c = profiles.compute_constants(1e-10)
    e0 = abs(c.I0 + 8 * np.pi) / (8 * np.pi)
    e1 = abs(c.I1 / c.I0 - 3 * (np.log(2) - 1)) / abs(3 * (np.log(2) - 1))
    ok = e0 < 1e-6 and e1 < 1e-6
    assert _verdict(
        "criterion 3 (quadrature constants)", ok,
        f"I0 rel err {e0:.2e}, I1/I0 rel err {e1:.2e}, tolerance 1e-6")


# ----------------------------------------------------------------------
# criterion 4: weighted Poisson analytic pair
# ----------------------------------------------------------------------

def test_criterion_4_poisson_analytic_pair():
    errs = {}
    for n in (128, 256, 512):
        g = fields.AxiGrid.from_extents(8.0, -8.0, 8.0, n, n)
        R, Z = g.mesh()
        s2 = R ** 2 + Z ** 2
        omega = fields.ScalarField(grid=g, values=15.0 * (1 + s2) ** -3.5)
        psi = fields.solve_delta5(omega)
        truth = (1 + s2) ** -1.5
        errs[n] = float(np.abs(psi.values - truth).max() / truth.max())
    slopes = [np.log2(errs[128] / errs[256]), np.log2(errs[256] / errs[512])]
    ok = errs[256] < 0.02 and all(1.7 <= s <= 2.3 for s in slopes)
    assert _verdict(
        "criterion 4 (analytic pair)", ok,
        f"L-inf rel err 256^2 = {errs[256]:.2e} (tol 2e-2), "
        f"slopes {slopes[0]:.2f}, {slopes[1]:.2f} (band 2 +/- 0.3)")


# ----------------------------------------------------------------------
# criterion 5: reduced-dynamics conservation and periodicity
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def reduced_orbit():
    cfg = dynamics.ScaledConfig(q=[[0.3, 0.0], [-0.3, 0.0]], r0=1.0)
    return dynamics.integrate(cfg, dt=1e-3, T=20.0, method="rk4")


def test_criterion_5a_hamiltonian_drift(reduced_orbit):
    drift = float(np.abs(reduced_orbit.hamiltonian
                         - reduced_orbit.hamiltonian[0]).max())
    ok = drift < 1e-8
    # classical RK4 at dt = 1e-3 is truncation-limited near 4.3e-8 on
    # this orbit; the stated tolerance is not reachable with the pinned
    # method and step (see the decisions ledger)
    assert _verdict("criterion 5a (H drift)", ok,
                    f"|H - H0| max = {drift:.3e}, tolerance 1e-8"), drift


def test_criterion_5b_poincare_return(reduced_orbit):
    dist, tau = dynamics.poincare_return(reduced_orbit)
    ok = dist < 1e-3
    assert _verdict("criterion 5b (Poincare return)", ok,
                    f"return distance {dist:.3e} at tau={tau:.3f}, "
                    "tolerance 1e-3")


# ----------------------------------------------------------------------
# criteria 6 and 8: the leapfrogging scenario
# ----------------------------------------------------------------------

LEAP_EPS = 0.05
LEAP_OFFSETS = ((0.25, 0.0), (-0.25, 0.0))


@pytest.fixture(scope="module")
def leapfrog_run():
    """Criterion-6 configuration: 512^2, dt = 1e-3, 2000 steps.

    Extents and frame speed are free choices: the frame is tuned so the
    vorticity support stays centered over the horizon (frame invariance
    is a tested property), which maximizes the resolution the pinned
    512^2 grid can spend on the cores.
    """
    grid = fields.AxiGrid.from_extents(2.3, -1.75, 2.75, 512, 512)
    q0 = dynamics.ScaledConfig(q=np.asarray(LEAP_OFFSETS), r0=1.0)
    rings = dynamics.scaled_to_physical(q0, LEAP_EPS)
    cfg = solver.SolverConfig(epsilon=LEAP_EPS, r0=1.0, grid=grid,
                              dt=1e-3, T=2.0, alpha0=1.8, substeps=4)
    result = solver.run(rings, cfg, window_radius=0.08)
    traj = dynamics.integrate(q0, 1e-3, 2.0, method="rk4")
    return rings, cfg, result, traj


@pytest.mark.slow
def test_criterion_6_conservation_surrogates(leapfrog_run):
    _, _, result, _ = leapfrog_run
    drift = float(np.abs(result.mass / result.mass[0] - 1.0).max())
    growth = float((result.maxnorm.max() - result.maxnorm[0])
                   / result.maxnorm[0])
    ok_mass = drift < 5e-3
    ok_max = growth < 1e-2
    # the pinned configuration merges after the first exchange; the
    # filamentation burst costs ~1.5-2% of the weighted mass at 512^2
    # (see the decisions ledger), so the 0.5% bound is expected to fail
    _verdict("criterion 6 (mass conservation)", ok_mass,
             f"max |mass/mass0 - 1| = {drift:.3e}, tolerance 5e-3")
    _verdict("criterion 6 (max-norm growth)", ok_max,
             f"growth = {growth:.3e}, tolerance 1e-2")
    assert ok_max, growth
    assert ok_mass, drift


@pytest.mark.slow
def test_criterion_8_leapfrogging_signature(leapfrog_run):
    rings, cfg, result, traj = leapfrog_run
    crossings = diagnostics.exchange_crossings(result.center_series)
    count = len(crossings)
    ok_exchange = count >= 2
    _verdict("criterion 8 (exchange count)", ok_exchange,
             f"r-coordinates crossed {count} times "
             f"(tracking to tau={result.center_series.times[-1]:.3f})")
    assert ok_exchange, count

    sep0 = float(np.linalg.norm(rings.centers[0] - rings.centers[1]))
    first_period = diagnostics.truncate_series(result.center_series,
                                               float(crossings[1]))
    rep = diagnostics.compare_reduced(first_period, traj, LEAP_EPS,
                                      alpha0=cfg.alpha0)
    ok_track = rep.sup_error <= 3.0 * sep0
    assert _verdict(
        "criterion 8 (tracking error)", ok_track,
        f"sup_error {rep.sup_error:.3f} over the first exchange period, "
        f"bound {3 * sep0:.3f}")


# ----------------------------------------------------------------------
# criterion 7: single-ring speed
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def ring_run():
    eps = 0.02
    grid = fields.AxiGrid.from_extents(1.65, -0.75, 1.25, 416, 512)
    rings = dynamics.RingFamily(centers=[[1.0, 0.0]], core_scales=[eps],
                                epsilon=eps, r0=1.0)
    cfg = solver.SolverConfig(epsilon=eps, r0=1.0, grid=grid, dt=2e-3,
                              T=0.6, substeps=4)
    return cfg, solver.run(rings, cfg)


@pytest.mark.slow
def test_criterion_7_single_ring_speed(ring_run):
    cfg, result = ring_run
    L = cfg.log_eps
    c = diagnostics.measure_speed(result.center_series, L, cfg.alpha0)
    ratio = c / (2.0 * L / cfg.r0)
    ok = 0.8 <= ratio <= 1.2
    assert _verdict(
        "criterion 7 (single-ring speed)", ok,
        f"c = {c:.3f}, predicted 2|log eps|/r0 = {2 * L:.3f}, "
        f"ratio {ratio:.3f}, band [0.8, 1.2]")
