"""Config-driven experiments: single runs, the Landau convergence study and the
collisional-regime sweep. Every output file carries the config fingerprint and
contains no timestamps, so identical configs give identical bytes.
"""

import json
import math
import os
from dataclasses import dataclass, asdict, replace

import numpy as np

from .config import RunConfig, content_dict, fingerprint
from .dg_space import gauss_rule, reference_basis, sample_points
from .diagnostics import decay_rate_fit, make_record, records_to_csv, summary_json
from .errors import ConfigError, InvalidArgument, InvalidWindow
from .mesh import build_mesh_from_nodes, build_uniform_mesh
from .system import ModelParams, VPFPSystem, initial_condition_landau, phase_space_grid
from .time_integration import TimeStepperConfig, run

__all__ = [
    "build_mesh",
    "build_system",
    "stepper_config",
    "run_single",
    "ConvergenceReport",
    "cross_resolution_errors",
    "run_convergence_study",
    "run_regime_sweep",
    "write_state_csv",
]

PANEL_COLUMNS = ("norm_E", "dist_f_finf", "dist_rho_rhoinf", "dist_f_localmaxwellian")


def build_mesh(cfg: RunConfig, Nx=None):
    m = cfg.model
    Nx = m.Nx if Nx is None else Nx
    if m.mesh_jitter == 0:
        return build_uniform_mesh(m.L, Nx)
    rng = np.random.default_rng(cfg.experiment.seed)
    h = m.L / Nx
    nodes = np.arange(Nx + 1) * h
    nodes[1:-1] += rng.uniform(-m.mesh_jitter, m.mesh_jitter, Nx - 1) * h
    return build_mesh_from_nodes(nodes, m.L)


def build_system(cfg: RunConfig, mesh=None, NH=None, tau0=None):
    m = cfg.model
    mesh = build_mesh(cfg) if mesh is None else mesh
    params = ModelParams(mesh, m=m.m, NH=m.NH if NH is None else NH, T0=m.T0,
                         tau0=m.tau0 if tau0 is None else tau0, rho_inf=m.rho_inf)
    return VPFPSystem(params, cfg.poisson.method, cfg.transport.flux, cfg.poisson.ldg_flux)


def stepper_config(cfg: RunConfig, dt=None) -> TimeStepperConfig:
    t, f = cfg.time, cfg.filter
    return TimeStepperConfig(
        dt=t.dt if dt is None else dt, picard_tol=t.picard_tol,
        picard_max_iters=t.picard_max_iters, filter_enabled=f.enabled,
        filter_alpha=f.alpha, filter_order=f.order, dealias_cut=f.cut,
        filter_hard=f.hard, nonlinear=t.nonlinear, stride=cfg.diagnostics.stride)


def _write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_state_csv(path, state, fp):
    lines = [f"# fingerprint={fp}",
             f"# NH={state.NH} Nx={state.mesh.num_cells} m={state.degree} L={float(state.mesh.length)!r}",
             "# nodes=" + " ".join(repr(float(x)) for x in state.mesh.endpoints),
             "k,j,i,coefficient"]
    K, nx, nb = state.data.shape
    for k in range(K):
        for j in range(nx):
            for i in range(nb):
                lines.append(f"{k},{j},{i},{float(state.data[k, j, i])!r}")
    _write(path, "\n".join(lines) + "\n")


def _snapshot_csv(state, params, cfg, t, fp):
    e = cfg.experiment
    L = params.mesh.length
    x0 = params.mesh.endpoints[0]
    x = x0 + L * np.arange(e.snapshot_nx) / e.snapshot_nx
    vmax = e.vmax_factor * math.sqrt(params.T0)
    v = np.linspace(-vmax, vmax, e.snapshot_nv)
    f = phase_space_grid(state, params, x, v)
    lines = [f"# fingerprint={fp}", f"# t={float(t)!r} nx={e.snapshot_nx} nv={e.snapshot_nv}", "x,v,f"]
    for i, xi in enumerate(x):
        for j, vj in enumerate(v):
            lines.append(f"{float(xi)!r},{float(vj)!r},{float(f[i, j])!r}")
    return "\n".join(lines) + "\n"


def _fits(records, cfg):
    out = {}
    window = cfg.diagnostics.fit_window
    for col in ("energy_E",) + PANEL_COLUMNS:
        pairs = [(r.t, getattr(r, col)) for r in records]
        try:
            out[col] = asdict(decay_rate_fit(pairs, window))
        except InvalidWindow as exc:
            out[col] = {"error": str(exc)}
    return out


def _simulate(cfg, system, dt=None, snapshot_cb=None):
    st0 = initial_condition_landau(system.params, cfg.model.delta)
    alpha0 = cfg.diagnostics.alpha0
    snaps = list(cfg.experiment.snapshot_times)
    observers = []
    if snapshot_cb is not None and snaps:
        def obs(t, state, rec):
            if any(math.isclose(t, s, rel_tol=0, abs_tol=1e-9) for s in snaps):
                snapshot_cb(t, state)
        observers.append(obs)
    return run(st0, system, stepper_config(cfg, dt), cfg.time.t_end, observers=observers,
               record=lambda t, s, sy: make_record(t, s, sy, alpha0),
               snapshot_times=snaps)


def run_single(cfg: RunConfig, out_dir=None):
    """One run; writes ``diagnostics.csv``, ``final_state.csv``, snapshots and ``summary.json``."""
    out_dir = cfg.experiment.output_dir if out_dir is None else out_dir
    fp = fingerprint(cfg)
    system = build_system(cfg)
    params = system.params
    written = []

    def snap(t, state):
        path = os.path.join(out_dir, f"snapshot_t{t:g}.csv")
        _write(path, _snapshot_csv(state, params, cfg, t, fp))
        written.append(path)

    res = _simulate(cfg, system, snapshot_cb=snap)
    header = [f"fingerprint={fp}", f"kind=single_run tau0={params.tau0!r}"]
    _write(os.path.join(out_dir, "diagnostics.csv"), records_to_csv(res.records, header))
    write_state_csv(os.path.join(out_dir, "final_state.csv"), res.state, fp)
    fits = _fits(res.records, cfg) if len(res.records) >= 10 else {}
    summary = summary_json(res.records, fits, {"fingerprint": fp, "steps": res.steps,
                                              "config": content_dict(cfg),
                                              "snapshots": [os.path.basename(p) for p in written]})
    _write(os.path.join(out_dir, "summary.json"), summary + "\n")
    return {"records": res.records, "state": res.state, "fits": fits, "fingerprint": fp}


@dataclass
class ConvergenceReport:
    """Errors between successive levels and the orders ``log2(e_h / e_{h/2})``."""

    tau0: float
    levels: list
    dts: list
    errors: list
    orders: list
    description: str = ("e_p = (sum_k ||D_{h,k} - D_{h/2,k}||_p^2)^(1/2), both solutions "
                        "evaluated on the finer mesh; L1/L2 by Gauss quadrature, Linf by the "
                        "max over per-cell sample points; modes beyond the coarse NH enter "
                        "with the fine values alone")

    def to_dict(self):
        return asdict(self)


def _parents(coarse, fine):
    parent = coarse.locate(fine.centers)
    if np.any(fine.endpoints[:-1] < coarse.endpoints[parent] - 1e-12 * coarse.length) or \
            np.any(fine.endpoints[1:] > coarse.endpoints[parent + 1] + 1e-12 * coarse.length):
        raise InvalidArgument("meshes are not nested")
    return parent


def _values(coeffs, h, xi):
    """Point values at reference points ``xi`` per cell; ``xi`` has shape ``(Nx, nq)``."""
    m = coeffs.shape[-1] - 1
    basis = reference_basis(m, xi.reshape(-1)).reshape(xi.shape + (m + 1,))
    return np.einsum("...jb,jqb->...jq", coeffs, basis) / np.sqrt(h)[:, None]


def cross_resolution_errors(coarse, fine, npts=6):
    """``(e_1, e_2, e_inf)`` between a coarse and a nested fine :class:`HermiteState`."""
    cm, fm = coarse.mesh, fine.mesh
    parent = _parents(cm, fm)
    rule = gauss_rule(npts)
    pts = {"quad": rule.nodes, "sample": sample_points(max(fine.degree, coarse.degree))}
    acc = {}
    for name, xi in pts.items():
        xf = fm.centers[:, None] + 0.5 * fm.h[:, None] * xi[None, :]
        xi_c = (xf - cm.centers[parent][:, None]) / (0.5 * cm.h[parent][:, None])
        xi_c = np.clip(xi_c, -1.0, 1.0)
        vf = _values(fine.data, fm.h, np.broadcast_to(xi, xf.shape))
        vc = _values(coarse.data[:, parent, :], cm.h[parent], xi_c)
        diff = vf.copy()
        k = min(coarse.NH, fine.NH) + 1
        diff[:k] -= vc[:k]
        acc[name] = diff
    w = (0.5 * fm.h[:, None] * rule.weights[None, :])
    d = acc["quad"]
    e1 = np.sum(np.abs(d) * w, axis=(1, 2))
    e2 = np.sqrt(np.sum(d * d * w, axis=(1, 2)))
    einf = np.max(np.abs(acc["sample"]), axis=(1, 2))
    return tuple(float(np.sqrt(np.sum(e ** 2))) for e in (e1, e2, einf))


def _check_levels(levels):
    for (n0, k0), (n1, k1) in zip(levels, levels[1:]):
        if n1 != 2 * n0 or k1 < k0:
            raise InvalidArgument(
                f"refinement list must halve h and not decrease NH: {levels}")


def run_convergence_study(cfg: RunConfig, out_dir=None, tau0_list=None):
    """Landau convergence study; returns one :class:`ConvergenceReport` per ``tau0``."""
    c = cfg.convergence
    levels = [tuple(int(v) for v in lv) for lv in c.levels]
    _check_levels(levels)
    tau0_list = list(c.tau0_list if tau0_list is None else tau0_list)
    if not tau0_list:
        raise ConfigError("convergence.tau0_list is empty")
    out_dir = cfg.experiment.output_dir if out_dir is None else out_dir
    fp = fingerprint(cfg)
    quiet = replace(cfg, experiment=replace(cfg.experiment, snapshot_times=[]))
    reports = []
    for tau0 in tau0_list:
        mesh = build_mesh(cfg, levels[0][0])
        finals = []
        for i, ((nx, nh), dt) in enumerate(zip(levels, c.dt)):
            if i:
                mesh = mesh.refine()
            system = build_system(quiet, mesh=mesh, NH=nh, tau0=float(tau0))
            st0 = initial_condition_landau(system.params, cfg.model.delta)
            res = run(st0, system, stepper_config(quiet, dt), cfg.time.t_end,
                      record=lambda *a: None)
            finals.append(res.state)
        errors = [cross_resolution_errors(a, b, c.quadrature_points)
                  for a, b in zip(finals, finals[1:])]
        orders = [tuple(math.log2(x / y) if x > 0 and y > 0 else float("nan")
                        for x, y in zip(e0, e1)) for e0, e1 in zip(errors, errors[1:])]
        reports.append(ConvergenceReport(float(tau0), [list(v) for v in levels],
                                         [float(d) for d in c.dt], errors, orders))
    lines = [f"# fingerprint={fp}", f"# {reports[0].description}",
             "tau0,Nx,NH,dt,e_L1,e_L2,e_Linf,order_L1,order_L2,order_Linf"]
    for r in reports:
        for i, e in enumerate(r.errors):
            o = r.orders[i - 1] if i else ("", "", "")
            nx, nh = r.levels[i]
            lines.append(",".join([repr(r.tau0), str(nx), str(nh), repr(r.dts[i])]
                                  + [repr(v) for v in e] + [str(v if v == "" else repr(v)) for v in o]))
    _write(os.path.join(out_dir, "convergence.csv"), "\n".join(lines) + "\n")
    _write(os.path.join(out_dir, "convergence.json"),
           json.dumps({"fingerprint": fp, "reports": [r.to_dict() for r in reports]},
                      indent=2, sort_keys=True) + "\n")
    return reports


def run_regime_sweep(cfg: RunConfig, out_dir=None):
    """One run per ``tau0`` in ``sweep.tau0_list``; panel time series plus decay fits."""
    tau0_list = list(cfg.sweep.tau0_list)
    if not tau0_list:
        raise ConfigError("sweep.tau0_list is empty")
    out_dir = cfg.experiment.output_dir if out_dir is None else out_dir
    fp = fingerprint(cfg)
    summary = {"fingerprint": fp, "regimes": []}
    for tau0 in tau0_list:
        sub = replace(cfg, model=replace(cfg.model, tau0=float(tau0)))
        rdir = os.path.join(out_dir, f"tau0_{float(tau0):g}")
        res = run_single(sub, rdir)
        cols = ("t",) + PANEL_COLUMNS
        lines = [f"# fingerprint={fp}", f"# tau0={float(tau0)!r}", ",".join(cols)]
        for r in res["records"]:
            lines.append(",".join(repr(float(getattr(r, c))) for c in cols))
        _write(os.path.join(rdir, "panels.csv"), "\n".join(lines) + "\n")
        summary["regimes"].append({"tau0": float(tau0), "directory": os.path.basename(rdir),
                                   "fits": res["fits"]})
    _write(os.path.join(out_dir, "sweep.json"), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
