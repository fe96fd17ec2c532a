import json
import math

import numpy as np
import pytest

from conftest import fast_numerics

from subgap.cli import main as cli_main
from subgap.floquet import build_floquet_basis
from subgap.generator import build_generator
from subgap.leads import RateTable
from subgap.model import JunctionParams
from subgap.observables import (CurrentRecord, lead_current_raw,
                                pair_current_raw, parity_populations,
                                solve_point)
from subgap.solver import PeriodicState
from subgap.sweep import (SweepSpec, apply_param, central_differences,
                          conductance_map, format_csv_row, run_sweep)


def make_state(basis, rho):
    t_grid = np.linspace(0.0, basis.period, 64, endpoint=False)
    state = PeriodicState(drive_freq=basis.drive_freq, period=basis.period,
                          harmonics={0: np.asarray(rho, dtype=complex)},
                          t_grid=t_grid, grid_states=None)
    state.grid_states = state.at(t_grid)
    return state


@pytest.fixture(scope="module")
def bare_basis():
    p = JunctionParams(bias=3.0)
    return p, build_floquet_basis(p, k_max=4, n_grid=256, n_steps=1000)


def test_currents_vanish_without_coupling():
    p = JunctionParams(gamma_L=0.0, gamma_R=0.0, g_L=0.2, g_R=0.2, bias=1.5)
    basis = build_floquet_basis(p, k_max=6, n_grid=512, n_steps=2000)
    gen = build_generator(basis, RateTable(p))
    state = make_state(basis, np.diag([0.25] * 4))
    assert lead_current_raw(gen, state, "L") == 0.0
    assert lead_current_raw(gen, state, "R") == 0.0


def test_pair_current_vanishes_without_drive(bare_basis):
    p, basis = bare_basis
    state = make_state(basis, np.diag([0.25] * 4))
    assert pair_current_raw(state, basis, "L") == 0.0


def test_dephasing_carries_no_particle_current():
    p = JunctionParams(g_L=0.5, g_R=0.5, bias=1.5, gamma_deph=1.0)
    rec = solve_point(p, fast_numerics())
    assert abs(rec.I_incoh) < 1e-9


def test_loss_flux_closes_continuity():
    p = JunctionParams(g_L=0.5, g_R=0.5, bias=2.0, gamma_loss=0.01)
    rec = solve_point(p, fast_numerics())
    assert rec.I_incoh > 0.0
    assert abs(rec.residual) < 1e-6


def test_parity_populations_trivial_states(bare_basis):
    p, basis = bare_basis
    even, odd = parity_populations(make_state(basis, np.diag([1.0, 0, 0, 0])), basis)
    assert even == pytest.approx(1.0, abs=1e-10)
    assert odd == pytest.approx(0.0, abs=1e-10)
    even, odd = parity_populations(make_state(basis, np.diag([0.25] * 4)), basis)
    assert even == pytest.approx(0.5, abs=1e-10)
    assert odd == pytest.approx(0.5, abs=1e-10)


def test_populations_sum_to_one():
    p = JunctionParams(g_L=0.5, g_R=0.5, bias=1.5)
    rec = solve_point(p, fast_numerics())
    assert rec.pop_even + rec.pop_odd == pytest.approx(1.0, abs=1e-8)


def test_record_csv_layout():
    p = JunctionParams(bias=5.0)
    rec = solve_point(p, fast_numerics(k_max=6, n_grid=512, n_steps=2000))
    row = format_csv_row(rec)
    cells = row.split(",")
    assert len(cells) == len(CurrentRecord.COLUMNS)
    assert CurrentRecord.COLUMNS.index("solver") == 18
    assert cells[18] == "fourier" and cells[19] == "ok"
    # 12 significant digits
    i_s_r = cells[CurrentRecord.COLUMNS.index("I_s_R")]
    assert float(i_s_r) == pytest.approx(rec.I_s_R, rel=1e-11)


def test_solver_both_returns_two_records():
    p = JunctionParams(bias=5.0)
    recs = solve_point(p, fast_numerics(k_max=6, n_grid=512, n_steps=2000),
                       solver="both", t_final=600.0)
    assert [r.solver for r in recs] == ["fourier", "evolve"]
    assert recs[0].I_s_R == pytest.approx(recs[1].I_s_R, abs=1e-4)


def test_apply_param_variants():
    p = JunctionParams(bias=1.0)
    assert apply_param(p, "g", 0.4).g_L == 0.4
    assert apply_param(p, "g", 0.4).g_R == 0.4
    assert apply_param(p, "gamma_loss", 0.02).gamma_loss == 0.02
    assert apply_param(p, "V", 2.5).bias == 2.5
    with pytest.raises(ValueError):
        apply_param(p, "junk", 1.0)


def test_sweep_spec_validation():
    p = JunctionParams()
    with pytest.raises(ValueError):
        SweepSpec(param="bias", start=1.0, stop=1.0, count=5, base=p)
    with pytest.raises(ValueError):
        SweepSpec(param="bias", start=1.0, stop=2.0, count=1, base=p)
    with pytest.raises(ValueError):
        SweepSpec(param="bias", start=1.0, stop=2.0, count=3, base=p, solver="magic")


def test_sweep_continues_past_failures(tmp_path):
    # bias=0 in the middle of the grid cannot define a period: that row must
    # carry an error status while the rest of the sweep completes
    p = JunctionParams(g_L=0.1, g_R=0.1)
    out = tmp_path / "sweep.csv"
    spec = SweepSpec(param="bias", start=-1.0, stop=1.0, count=3, base=p,
                     numerics=fast_numerics(k_max=6, n_grid=512, n_steps=1000),
                     out=str(out))
    records = run_sweep(spec)
    assert len(records) == 3
    assert records[0].status == "ok"
    assert records[1].status.startswith("error:")
    assert math.isnan(records[1].I_s_R)
    assert records[2].status == "ok"
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].split(",") == list(CurrentRecord.COLUMNS)
    assert len(lines) == 4


def test_sweep_parallel_matches_serial(tmp_path):
    p = JunctionParams(g_L=0.3, g_R=0.3)
    num = fast_numerics(k_max=8, n_grid=512, n_steps=2000)
    ser = run_sweep(SweepSpec(param="bias", start=1.0, stop=2.0, count=3,
                              base=p, numerics=num))
    par = run_sweep(SweepSpec(param="bias", start=1.0, stop=2.0, count=3,
                              base=p, numerics=num, jobs=2))
    for a, b in zip(ser, par):
        assert a.I_s_R == pytest.approx(b.I_s_R, abs=1e-12)


def test_sweep_json_format(tmp_path):
    p = JunctionParams(g_L=0.2, g_R=0.2)
    out = tmp_path / "sweep.json"
    run_sweep(SweepSpec(param="bias", start=1.4, stop=1.6, count=2, base=p,
                        numerics=fast_numerics(k_max=6, n_grid=512, n_steps=2000),
                        out=str(out), fmt="json"))
    data = json.loads(out.read_text())
    assert len(data) == 2
    assert set(data[0]) == set(CurrentRecord.COLUMNS)


def test_central_differences_linear():
    x = np.linspace(0.0, 2.0, 21)
    a = 3.7
    d = central_differences(a * x, x)
    assert np.abs(d - a).max() < 1e-12


def test_conductance_ridge_shifts_with_dot_energy():
    # the drive produces subgap conductance ridges whose position moves with
    # the dot energy; only at the particle-hole-symmetric point omega = -U/2
    # does the first onset sit at the closed-form position 2(|omega|+Delta)/3
    num = fast_numerics(k_max=12)
    vs = np.linspace(1.05, 1.45, 11)
    positions = {}
    for om in (-1.0, -0.7):
        base = JunctionParams(g_L=0.5, g_R=0.5, omega=om)
        cur = [solve_point(base.with_bias(float(v)), num).I_s_R for v in vs]
        didv = central_differences(np.array(cur), vs)
        assert didv.max() > 1.0, f"no subgap ridge found at omega={om}"
        positions[om] = float(vs[int(np.argmax(didv))])
    assert abs(positions[-1.0] - 4.0 / 3.0) <= (vs[1] - vs[0])
    assert abs(positions[-1.0] - positions[-0.7]) > 0.05


def test_conductance_map_subgap_flat(tmp_path):
    # g=0: conductance vanishes inside the gap diamond
    p = JunctionParams()
    out = tmp_path / "map.csv"
    rows = conductance_map(np.linspace(0.5, 2.0, 4), np.array([-1.0, -0.5]), p,
                           numerics=fast_numerics(k_max=4, n_grid=256, n_steps=1000),
                           out=str(out))
    assert len(rows) == 8
    didv = [abs(r["dIdV"]) for r in rows]
    assert max(didv) < 0.05
    header = out.read_text().splitlines()[1]
    assert header == "V,omega,I_s_R,dIdV,status"


def test_cli_iv_and_point(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("g_L = 0.3\ng_R = 0.3\nbias = 1.5\nk_max = 6\n"
                   "n_grid = 512\nn_steps = 2000\n")
    out = tmp_path / "iv.csv"
    rc = cli_main(["iv", "--config", str(cfg), "--sweep", "bias:1.4:1.6:2",
                   "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[3].split(",") == list(CurrentRecord.COLUMNS)

    rc = cli_main(["point", "--config", str(cfg), "--bias", "1.5"])
    assert rc == 0
    captured = capsys.readouterr().out
    assert "quasienergy" in captured and "harmonic" in captured


def test_cli_map(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("k_max = 4\nn_grid = 256\nn_steps = 500\n")
    out = tmp_path / "map.csv"
    rc = cli_main(["map", "--config", str(cfg), "--v-grid", "0.5:1.5:3",
                   "--omega-grid=-1:-1:1", "--out", str(out)])
    assert rc == 0
    assert len(out.read_text().splitlines()) == 5
