import json
import math

import numpy as np
import pytest

from hermite_dg.battery import SUITES, run_battery
from hermite_dg.config import BatterySection, parse_config
from hermite_dg.dg_space import DGField, evaluate, l2_project
from hermite_dg.errors import ConfigError, InvalidArgument
from hermite_dg.experiments import (cross_resolution_errors, run_convergence_study,
                                    run_regime_sweep)
from hermite_dg.mesh import build_uniform_mesh
from hermite_dg.system import HermiteState

from helpers import jittered_mesh
from oracles import evaluate_dense


def random_state(rng, mesh, m, NH):
    return HermiteState(mesh, m, rng.standard_normal((NH + 1, mesh.num_cells, m + 1)))


def oracle_errors(coarse, fine, npts=12):
    """Errors by dense evaluation of both states at high-order Gauss points of the fine cells."""
    xg, wg = np.polynomial.legendre.leggauss(npts)
    ef = fine.mesh.endpoints
    ec = coarse.mesh.endpoints
    e1, e2, einf = [], [], []
    dense = np.linspace(-1, 1, 41)
    for k in range(fine.NH + 1):
        l1 = l2 = mx = 0.0
        for j in range(fine.mesh.num_cells):
            a, b = ef[j], ef[j + 1]
            for pts, weights in ((0.5 * (a + b) + 0.5 * (b - a) * xg, 0.5 * (b - a) * wg),
                                 (0.5 * (a + b) + 0.5 * (b - a) * dense, None)):
                pts = np.clip(pts, a + 1e-13 * (b - a), b - 1e-13 * (b - a))
                vf = evaluate_dense(fine.data[k], ef, pts)
                vc = evaluate_dense(coarse.data[k], ec, pts) if k <= coarse.NH else 0.0
                d = vf - vc
                if weights is None:
                    mx = max(mx, np.max(np.abs(d)))
                else:
                    l1 += weights @ np.abs(d)
                    l2 += weights @ d ** 2
        e1.append(l1)
        e2.append(math.sqrt(l2))
        einf.append(mx)
    return tuple(math.sqrt(sum(np.square(e))) for e in (e1, e2, einf))


def test_cross_resolution_zero_for_injected_state(rng):
    coarse = random_state(rng, jittered_mesh(rng, 3.0, 6), 1, 3)
    fmesh = coarse.mesh.refine()
    fine = HermiteState(fmesh, 1, np.zeros((4, 12, 2)))
    # inject each coarse linear polynomial into its two children exactly
    for k in range(4):
        u = DGField(coarse.mesh, 1, coarse.data[k])
        fine.data[k] = l2_project(lambda x: evaluate(u, x), fmesh, 1).coeffs
    assert max(cross_resolution_errors(coarse, fine)) < 1e-12 * coarse.norm()


def test_cross_resolution_against_dense_oracle(rng):
    # the fine state has extra Hermite modes; they enter with fine values alone
    coarse = random_state(rng, jittered_mesh(rng, 5.0, 5), 1, 2)
    fine = random_state(rng, coarse.mesh.refine(), 1, 4)
    e1, e2, einf = cross_resolution_errors(coarse, fine)
    o1, o2, oinf = oracle_errors(coarse, fine)
    # |d| has kinks, so the 6-point Gauss L1 value is only close to the 12-point one
    assert e1 == pytest.approx(o1, rel=1e-3)
    assert e2 == pytest.approx(o2, rel=1e-12)
    # the package samples finitely many points per cell; for linears the max sits at an end
    assert einf == pytest.approx(oinf, rel=1e-12)


def test_cross_resolution_known_value():
    # coarse: D_0 = 0; fine: D_0 = 1 on [0, 2] (two cells): e_1 = 2, e_2 = sqrt 2, e_inf = 1
    coarse = HermiteState(build_uniform_mesh(2.0, 2), 0, np.zeros((2, 2, 1)))
    fmesh = coarse.mesh.refine()
    data = np.zeros((2, 4, 1))
    data[0, :, 0] = np.sqrt(fmesh.h)
    e = cross_resolution_errors(coarse, HermiteState(fmesh, 0, data))
    assert e == pytest.approx((2.0, math.sqrt(2.0), 1.0), rel=1e-14)


def test_cross_resolution_rejects_non_nested(rng):
    coarse = random_state(rng, build_uniform_mesh(1.0, 4), 1, 2)
    fine = random_state(rng, jittered_mesh(rng, 1.0, 8, 0.3), 1, 2)
    with pytest.raises(InvalidArgument, match="nested"):
        cross_resolution_errors(coarse, fine)


SMALL_CONV = """\
model: {Nx: 8, NH: 8, tau0: 10.0, delta: 0.05}
time: {t_end: 0.4}
convergence:
  levels: [[8, 8], [16, 8], [32, 8]]
  dt: [0.1, 0.05, 0.025]
  tau0_list: [10.0]
"""


def test_small_convergence_study(tmp_path):
    cfg = parse_config(SMALL_CONV, env={})
    (rep,) = run_convergence_study(cfg, out_dir=str(tmp_path))
    assert rep.tau0 == 10.0 and len(rep.errors) == 2 and len(rep.orders) == 1
    for e0, e1, o in zip(rep.errors[0], rep.errors[1], rep.orders[0]):
        assert e0 > e1 > 0
        assert o == pytest.approx(math.log2(e0 / e1))
    assert min(rep.orders[0]) > 1.0
    rows = [r for r in (tmp_path / "convergence.csv").read_text().splitlines()
            if not r.startswith("#")]
    assert rows[0].startswith("tau0,Nx,NH,dt") and len(rows) == 3
    data = json.loads((tmp_path / "convergence.json").read_text())
    assert data["reports"][0]["levels"] == [[8, 8], [16, 8], [32, 8]]


def test_convergence_study_rejects_bad_levels(tmp_path):
    cfg = parse_config(SMALL_CONV.replace("[16, 8]", "[12, 8]"), env={})
    with pytest.raises(InvalidArgument):
        run_convergence_study(cfg, out_dir=str(tmp_path))
    cfg = parse_config(SMALL_CONV.replace("[16, 8]", "[16, 4]"), env={})
    with pytest.raises(InvalidArgument):
        run_convergence_study(cfg, out_dir=str(tmp_path))
    with pytest.raises(ConfigError):
        run_convergence_study(parse_config(SMALL_CONV, env={}), str(tmp_path), tau0_list=[])
    with pytest.raises(ConfigError):
        parse_config(SMALL_CONV.replace("dt: [0.1, 0.05, 0.025]", "dt: [0.1]"), env={})


def test_regime_sweep_strong_collisions_decay(tmp_path):
    text = ("model: {Nx: 32, NH: 16, delta: 0.05}\n"
            "time: {dt: 0.1, t_end: 12.0}\ndiagnostics: {stride: 2}\n"
            "sweep: {tau0_list: [10.0]}\n")
    summary = run_regime_sweep(parse_config(text, env={}), out_dir=str(tmp_path))
    (reg,) = summary["regimes"]
    assert reg["fits"]["norm_E"]["rate"] > 0.1
    panels = (tmp_path / "tau0_10" / "panels.csv").read_text().splitlines()
    assert panels[2] == "t,norm_E,dist_f_finf,dist_rho_rhoinf,dist_f_localmaxwellian"
    assert len(panels) == 3 + 61
    assert json.loads((tmp_path / "sweep.json").read_text())["regimes"][0]["tau0"] == 10.0
    with pytest.raises(ConfigError):
        run_regime_sweep(parse_config("sweep: {tau0_list: []}\n", env={}), str(tmp_path))


def test_battery_default_seed_passes():
    results = run_battery(BatterySection(), seed=0)
    assert len(results) == len(SUITES)
    failed = [r.name for r in results if not r.passed]
    assert not failed, failed
    control = {r.name: r for r in results}["energy_law_negative_control"]
    assert control.worst > 1e-6  # mismatched fluxes really break the identity


def test_battery_zero_size_is_trivial():
    results = run_battery(BatterySection(size=0), seed=3)
    assert all(r.passed for r in results)
