"""JSON-configured scenario runner.

Subcommand-style invocation::

    ringleap <mode> [--config cfg.json] [--strict] [--out DIR]

Modes: ``reduced`` (center-dynamics trajectory), ``ring`` (single-ring
PDE run and speed report), ``leapfrog`` (full PDE vs reduced-dynamics
comparison pipeline), ``modes`` (Fourier-mode solver demo), making
``poisson-test`` (analytic-pair error table), and ``levelcurves``
(symmetric-pair energy landscape).  Every run writes a manifest JSON
listing its artifacts.  ``--strict`` exits nonzero when a scenario
breaches its acceptance tolerance.

All physical knobs use the scaled-dynamics conventions: ``epsilon``,
``r0``, and ``offsets`` are the initial scaled ring offsets ``q_j``.
Outputs are deterministic: identical configs give byte-identical CSVs.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import diagnostics, dynamics, fields, profiles, solver
from .errors import ConfigError, RingleapError

__all__ = ["ScenarioConfig", "validate_config", "run_scenario", "main"]

MODES = ("reduced", "ring", "leapfrog", "modes", "poisson-test",
         "levelcurves")

_DEFAULT_OFFSETS = ((0.3, 0.0), (-0.3, 0.0))


@dataclass
class ScenarioConfig:
    mode: str = "reduced"
    epsilon: float = 0.05
    r0: float = 1.0
    k: int = 2
    offsets: tuple = _DEFAULT_OFFSETS
    dt: float = 1e-3
    T: float = 20.0
    method: str = "rk4"
    interp: str = "monotone-bicubic"
    substeps: int = 4
    alpha0: float = None
    grid: dict = None
    snapshot_every: int = 0
    window_radius: float = None
    sizes: tuple = (128, 256, 512)
    R_out: float = 30.0
    box: dict = None
    out_dir: str = "out"
    seed: int = 0

    @property
    def log_eps(self):
        return abs(np.log(self.epsilon))


def _fail(msg, fieldpath):
    raise ConfigError(f"{fieldpath}: {msg}", field=fieldpath)


def validate_config(raw):
    """Parse, default, and invariant-check a JSON scenario config."""
    try:
        doc = json.loads(raw) if raw.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"config parse error at byte {e.pos}: {e.msg}",
                          offset=e.pos) from e
    if not isinstance(doc, dict):
        _fail("config must be a JSON object", "$")
    cfg = ScenarioConfig()
    known = set(cfg.__dataclass_fields__)
    for key in doc:
        if key not in known:
            _fail("unknown field", key)
    for key, val in doc.items():
        setattr(cfg, key, val)

    if cfg.mode not in MODES:
        _fail(f"must be one of {MODES}", "mode")
    if not (0 < cfg.epsilon < 1):
        _fail("must lie in (0, 1)", "epsilon")
    if not cfg.r0 > 0:
        _fail("must be positive", "r0")
    if not cfg.dt > 0:
        _fail("must be positive", "dt")
    if cfg.T < cfg.dt:
        _fail("must be at least dt", "T")
    if cfg.substeps < 1:
        _fail("must be >= 1", "substeps")
    if cfg.method not in ("rk4", "symplectic-euler"):
        _fail("must be rk4 or symplectic-euler", "method")
    if cfg.interp not in ("bilinear", "monotone-bicubic"):
        _fail("must be bilinear or monotone-bicubic", "interp")

    offsets = np.asarray(cfg.offsets, dtype=float)
    if offsets.ndim != 2 or offsets.shape[1] != 2:
        _fail("must be a list of [q1, q2] pairs", "offsets")
    if doc.get("k") is None:
        cfg.k = offsets.shape[0]
    if offsets.shape[0] != cfg.k:
        _fail(f"length {offsets.shape[0]} does not match k={cfg.k}",
              "offsets")
    if cfg.k > 1:
        d = offsets[:, None, :] - offsets[None, :, :]
        dist2 = (d ** 2).sum(-1)
        np.fill_diagonal(dist2, np.inf)
        if dist2.min() == 0.0:
            _fail("offsets must be pairwise distinct", "offsets")
    cfg.offsets = tuple(map(tuple, offsets))
    return cfg


def _default_grid(cfg):
    """Mode-appropriate grid extents when the config leaves them unset."""
    eps, r0, L = cfg.epsilon, cfg.r0, cfg.log_eps
    reach = fields.SUPPORT_TRUNCATION * eps * 1.1
    offsets = np.asarray(cfg.offsets, dtype=float)
    spread = (np.abs(offsets).max() / np.sqrt(L)) if offsets.size else 0.0
    if cfg.mode == "ring":
        drift = 1.5 / (2 * r0) / L * cfg.T        # frame-relative climb
        return dict(r_max=r0 + reach + 0.25,
                    z_min=-(reach + 0.3),
                    z_max=reach + max(drift, 0.0) + 0.4,
                    nr=384, nz=512)
    # leapfrog: room for the pair and a post-interaction upward drift
    return dict(r_max=r0 + spread + reach + 0.25,
                z_min=-(spread + reach + 0.45),
                z_max=spread + reach + 0.6 * cfg.T + 0.6,
                nr=512, nz=512)


def _build_axigrid(cfg):
    g = cfg.grid if cfg.grid is not None else _default_grid(cfg)
    for key in ("r_max", "z_min", "z_max", "nr", "nz"):
        if key not in g:
            _fail(f"missing grid field {key}", f"grid.{key}")
    return fields.AxiGrid.from_extents(g["r_max"], g["z_min"], g["z_max"],
                                       int(g["nr"]), int(g["nz"]))


class _Manifest:
    def __init__(self, cfg, out_dir):
        self.doc = {"mode": cfg.mode, "artifacts": [], "checks": {},
                    "status": "ok"}
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.doc["artifacts"].append(name)
        return p

    def check(self, name, passed, detail):
        self.doc["checks"][name] = {"passed": bool(passed), "detail": detail}
        if not passed:
            self.doc["status"] = "breach"

    def write(self):
        with open(os.path.join(self.out_dir, "manifest.json"), "w") as f:
            json.dump(self.doc, f, indent=2, sort_keys=True)
            f.write("\n")
        return self.doc


# ----------------------------------------------------------------------
# scenario bodies
# ----------------------------------------------------------------------

def _scenario_reduced(cfg, man):
    q0 = dynamics.ScaledConfig(q=np.asarray(cfg.offsets), r0=cfg.r0)
    traj = dynamics.integrate(q0, cfg.dt, cfg.T, method=cfg.method)
    traj.to_csv(man.path("trajectory.csv"))
    drift = float(np.abs(traj.hamiltonian - traj.hamiltonian[0]).max())
    man.check("hamiltonian_drift", drift < 1e-8, {"drift": drift,
                                                  "tolerance": 1e-8})
    try:
        dist, tau = dynamics.poincare_return(traj)
        man.check("poincare_return", dist < 1e-3,
                  {"distance": dist, "tau": tau, "tolerance": 1e-3})
    except RingleapError as e:
        man.check("poincare_return", False, {"error": str(e)})


def _alpha_for(cfg):
    if cfg.alpha0 is not None:
        return float(cfg.alpha0)
    if cfg.mode == "leapfrog":
        return float(fields.alpha_speed(cfg.r0, cfg.epsilon,
                                        profiles.compute_constants()))
    return 1.0 / cfg.r0


def _pde_run(cfg, rings, grid):
    scfg = solver.SolverConfig(epsilon=cfg.epsilon, r0=cfg.r0, grid=grid,
                               dt=cfg.dt, T=cfg.T, alpha0=_alpha_for(cfg),
                               interp=cfg.interp, substeps=cfg.substeps)
    result = solver.run(rings, scfg, snapshot_every=cfg.snapshot_every,
                        window_radius=cfg.window_radius)
    return scfg, result


def _write_pde_artifacts(man, result):
    result.center_series.to_csv(man.path("centers.csv"))
    result.conserved_to_csv(man.path("conserved.csv"))
    for tau, snap in result.snapshots:
        snap.to_binary(man.path(f"snapshot_{tau:.6f}.bin"))


def _scenario_ring(cfg, man):
    rings = dynamics.RingFamily(centers=[[cfg.r0, 0.0]],
                                core_scales=[cfg.epsilon],
                                epsilon=cfg.epsilon, r0=cfg.r0)
    grid = _build_axigrid(cfg)
    scfg, result = _pde_run(cfg, rings, grid)
    _write_pde_artifacts(man, result)
    c = diagnostics.measure_speed(result.center_series, cfg.log_eps,
                                  scfg.alpha0)
    c_pred = 2.0 * cfg.log_eps / cfg.r0
    report = {"c_measured": c, "c_predicted": c_pred, "ratio": c / c_pred,
              "alpha0": scfg.alpha0}
    with open(man.path("speed_report.json"), "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    man.check("speed_ratio", 0.8 <= c / c_pred <= 1.2, report)


def _scenario_leapfrog(cfg, man):
    q0 = dynamics.ScaledConfig(q=np.asarray(cfg.offsets), r0=cfg.r0)
    rings = dynamics.scaled_to_physical(q0, cfg.epsilon)
    grid = _build_axigrid(cfg)
    scfg, result = _pde_run(cfg, rings, grid)
    _write_pde_artifacts(man, result)
    traj = dynamics.integrate(q0, cfg.dt, cfg.T, method=cfg.method)
    traj.to_csv(man.path("trajectory.csv"))

    report = diagnostics.compare_reduced(result.center_series, traj,
                                         cfg.epsilon, alpha0=scfg.alpha0)
    meta = {"epsilon": cfg.epsilon, "r0": cfg.r0, "dt": cfg.dt,
            "grid": {"nr": grid.nr, "nz": grid.nz, "hr": grid.hr,
                     "hz": grid.hz, "z_min": grid.z_min},
            "alpha0": scfg.alpha0,
            "tracking_truncated_at": result.tracking_truncated_at}
    report.to_json(man.path("report.json"), metadata=meta)

    mass_drift = float(np.abs(result.mass / result.mass[0] - 1.0).max())
    max_growth = float((result.maxnorm.max() - result.maxnorm[0])
                       / result.maxnorm[0])
    man.check("mass_drift", mass_drift < 5e-3,
              {"drift": mass_drift, "tolerance": 5e-3})
    man.check("maxnorm_growth", max_growth < 1e-2,
              {"growth": max_growth, "tolerance": 1e-2})
    if q0.k == 2:
        man.check("exchange_count", report.exchange_count >= 2,
                  {"count": report.exchange_count})
        crossings = diagnostics.exchange_crossings(result.center_series)
        sep0 = float(np.linalg.norm(rings.centers[0] - rings.centers[1]))
        if len(crossings) >= 2:
            first_period = diagnostics.truncate_series(
                result.center_series, float(crossings[1]))
            rep1 = diagnostics.compare_reduced(first_period, traj,
                                               cfg.epsilon,
                                               alpha0=scfg.alpha0)
            man.check("tracking_error", rep1.sup_error <= 3.0 * sep0,
                      {"sup_error": rep1.sup_error, "bound": 3.0 * sep0})
        else:
            man.check("tracking_error", False,
                      {"error": "fewer than two exchanges observed"})


def _scenario_modes(cfg, man):
    R = cfg.R_out
    h = 1e-3
    rho = np.arange(h, R + h / 2, h)
    z1 = profiles.zeta1(rho)
    res1 = profiles.mode_operator_apply(
        1, profiles.RadialProfile(rho=rho, values=z1, mode_n=1))
    sel = (rho >= 0.1) & (rho <= 20.0)
    r1 = float(np.abs(res1.values[sel]).max())
    man.check("zeta1_residual", r1 < 1e-6, {"residual": r1,
                                            "tolerance": 1e-6})
    profiles.RadialProfile(rho=rho, values=z1, mode_n=1).to_csv(
        man.path("zeta1.csv"))

    checks = {}
    for n in (2, 3):
        g = np.where((rho > 1) & (rho < 2),
                     np.exp(-1.0 / np.maximum((rho - 1) * (2 - rho), 1e-12)),
                     0.0)
        gp = profiles.RadialProfile(rho=rho, values=g, mode_n=n)
        p = profiles.mode_solve(n, gp, R)
        res = profiles.mode_operator_apply(n, p)
        rel = float(np.abs(res.values[2:-2] - g[2:-2]).max()
                    / np.abs(g).max())
        checks[f"n={n}"] = rel
        p.to_csv(man.path(f"mode{n}_solution.csv"))
        man.check(f"mode{n}_roundtrip", rel < 1e-4,
                  {"residual": rel, "tolerance": 1e-4})
    gam = profiles.compute_Gamma()
    gam.to_csv(man.path("gamma.csv"))
    with open(man.path("residual_report.json"), "w") as f:
        json.dump({"zeta1_residual": r1, "roundtrip": checks},
                  f, indent=2, sort_keys=True)
        f.write("\n")


def _scenario_poisson(cfg, man):
    errs = {}
    for n in cfg.sizes:
        g = fields.AxiGrid.from_extents(8.0, -8.0, 8.0, int(n), int(n))
        R, Z = g.mesh()
        s2 = R ** 2 + Z ** 2
        omega = fields.ScalarField(grid=g, values=15.0 * (1 + s2) ** -3.5)
        psi = fields.solve_delta5(omega)
        truth = (1 + s2) ** -1.5
        errs[int(n)] = float(np.abs(psi.values - truth).max()
                             / np.abs(truth).max())
    with open(man.path("error_table.csv"), "w") as f:
        f.write("n,linf_rel_error\n")
        for n, e in errs.items():
            f.write(f"{n},{e!r}\n")
    sizes = sorted(errs)
    slopes = [float(np.log2(errs[a] / errs[b]))
              for a, b in zip(sizes, sizes[1:])]
    with open(man.path("convergence.json"), "w") as f:
        json.dump({"errors": {str(k): v for k, v in errs.items()},
                   "slopes": slopes}, f, indent=2, sort_keys=True)
        f.write("\n")
    if 256 in errs:
        man.check("analytic_pair_256", errs[256] < 0.02,
                  {"error": errs[256], "tolerance": 0.02})
    ok = all(1.7 <= s <= 2.3 for s in slopes) and slopes
    man.check("convergence_order", bool(ok), {"slopes": slopes,
                                              "band": [1.7, 2.3]})


def _scenario_levelcurves(cfg, man):
    box = cfg.box or {"q1_min": 0.1, "q1_max": 2.5,
                      "q2_min": -1.25, "q2_max": 1.25, "n": 201}
    n = int(box.get("n", 201))
    q1 = np.linspace(box["q1_min"], box["q1_max"], n)
    q2 = np.linspace(box["q2_min"], box["q2_max"], n)
    Q1, Q2 = np.meshgrid(q1, q2, indexing="ij")
    # H_2(q, -q) = 4 log(2|q|) - 2 (q1)^2 / r0^2
    H = 4.0 * np.log(2.0 * np.sqrt(Q1 ** 2 + Q2 ** 2)) \
        - 2.0 * Q1 ** 2 / cfg.r0 ** 2
    with open(man.path("levelcurves.csv"), "w") as f:
        f.write("q1,q2,H2\n")
        for i in range(n):
            for j in range(n):
                f.write(f"{float(Q1[i, j])!r},{float(Q2[i, j])!r},{float(H[i, j])!r}\n")
    i, j = np.unravel_index(np.argmin(H), H.shape)
    on_boundary = i in (0, n - 1) or j in (0, n - 1)
    man.check("minimum_on_boundary", bool(on_boundary),
              {"argmin": [float(Q1[i, j]), float(Q2[i, j])]})


_SCENARIOS = {
    "reduced": _scenario_reduced,
    "ring": _scenario_ring,
    "leapfrog": _scenario_leapfrog,
    "modes": _scenario_modes,
    "poisson-test": _scenario_poisson,
    "levelcurves": _scenario_levelcurves,
}


def run_scenario(cfg, strict=False):
    """Run one scenario; returns ``(exit_status, manifest_dict)``."""
    man = _Manifest(cfg, cfg.out_dir)
    man.doc["config"] = {k: getattr(cfg, k) for k in
                         ("mode", "epsilon", "r0", "k", "offsets", "dt", "T",
                          "method", "interp", "substeps", "seed")}
    _SCENARIOS[cfg.mode](cfg, man)
    doc = man.write()
    status = 0
    if strict and doc["status"] == "breach":
        status = 2
    return status, doc


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ringleap",
        description="Leapfrogging vortex-ring scenarios")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", help="path to a JSON scenario config")
    parser.add_argument("--strict", action="store_true",
                        help="exit nonzero on acceptance-tolerance breach")
    parser.add_argument("--out", help="output directory (overrides config)")
    args = parser.parse_args(argv)

    raw = "{}"
    if args.config:
        with open(args.config) as f:
            raw = f.read()
    try:
        cfg = validate_config(raw)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    cfg.mode = args.mode
    if args.out:
        cfg.out_dir = args.out
    try:
        status, doc = run_scenario(cfg, strict=args.strict)
    except RingleapError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for name, chk in doc["checks"].items():
        flag = "ok " if chk["passed"] else "FAIL"
        print(f"[{flag}] {name}: {chk['detail']}")
    print(f"artifacts in {cfg.out_dir}: {', '.join(doc['artifacts'])}")
    return status


if __name__ == "__main__":
    sys.exit(main())
