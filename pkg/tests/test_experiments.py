import json

import numpy as np
import pytest

from icoent.cli import build_parser, exit_code_for_exception, main
from icoent.errors import BracketingError, DomainError, MonotonicityError, NumericalError
from icoent.experiments import (
    FIELD_SWEEP_HEADER,
    FRH_HEADER,
    QUENCH_HEADER,
    SEPARATION_HEADER,
    TEMP_SWEEP_HEADER,
    RunConfig,
    run_fermi_verify,
    run_field_sweep,
    run_frh,
    run_quench,
    run_separation,
    run_temp_sweep,
)

CHEAP = dict(restarts=2, max_iter=250, witness_restarts=3, witness_max_iter=200)


def first_line(path):
    return path.read_text().splitlines()[0]


def test_temp_sweep_contract(tmp_path, store):
    cfg = RunConfig(out_dir=tmp_path, seed=0, h=3.0, t_min=0.5, t_max=40.0, t_points=4, **CHEAP)
    res = run_temp_sweep(cfg, store)
    assert first_line(res.csv_path) == ",".join(TEMP_SWEEP_HEADER)
    assert len(res.rows) == 4
    assert set(res.thresholds) == {"T2", "T3", "T_E", "T_W", "T3_star"}
    meta = json.loads(res.metadata_path.read_text())
    assert meta["config"]["seed"] == 0
    assert meta["basis_convention"] == "site1-msb;bit0=spin-up"
    assert meta["log_base"] == "e"
    assert "timings" in meta
    payload = json.loads(res.thresholds_path.read_text())
    assert abs(payload["T2"] - res.thresholds["T2"]) == 0.0


def test_temp_sweep_determinism(tmp_path, store):
    cfg_a = RunConfig(out_dir=tmp_path / "a", seed=7, h=3.0, t_min=1.0, t_max=30.0, t_points=3, **CHEAP)
    cfg_b = RunConfig(out_dir=tmp_path / "b", seed=7, h=3.0, t_min=1.0, t_max=30.0, t_points=3, **CHEAP)
    res_a = run_temp_sweep(cfg_a, store)
    res_b = run_temp_sweep(cfg_b, store)
    assert res_a.csv_path.read_bytes() == res_b.csv_path.read_bytes()
    assert res_a.thresholds_path.read_bytes() == res_b.thresholds_path.read_bytes()


def test_quench_contract(tmp_path, store):
    cfg = RunConfig(out_dir=tmp_path, seed=0, h=3.0, time_max=0.2, time_step=0.1, **CHEAP)
    res = run_quench(cfg, store)
    assert first_line(res.csv_path) == ",".join(QUENCH_HEADER)
    assert len(res.rows) == 3
    t0_row = res.rows[0]
    assert t0_row[1] == 0.0  # product initial state carries no pair negativity
    assert t0_row[3] == 0.0


def test_quench_rejects_bad_pattern(tmp_path, store):
    with pytest.raises(DomainError):
        run_quench(RunConfig(out_dir=tmp_path, pattern="01", **CHEAP), store)


def test_quench_configured_subsystems(tmp_path, store):
    cfg = RunConfig(
        out_dir=tmp_path, seed=0, h=3.0, time_max=0.1, time_step=0.1,
        pair="2+7", face="2+7+11", **CHEAP,
    )
    res = run_quench(cfg, store)
    assert len(res.rows) == 2
    with pytest.raises(DomainError):
        run_quench(RunConfig(out_dir=tmp_path, pair="1+1", **CHEAP), store)
    with pytest.raises(DomainError):
        run_quench(RunConfig(out_dir=tmp_path, face="0+2+3", **CHEAP), store)
    with pytest.raises(DomainError):
        run_quench(RunConfig(out_dir=tmp_path, pair="a+b", **CHEAP), store)


def test_separation_contract(tmp_path, store):
    cfg = RunConfig(out_dir=tmp_path, seed=0, h=3.0, **CHEAP)
    res = run_separation(cfg, store)
    assert first_line(res.csv_path) == ",".join(SEPARATION_HEADER)
    kinds = [(row[0], row[1]) for row in res.rows]
    assert kinds == [("pair", 1), ("pair", 2), ("triangle", 1), ("triangle", 2)]
    sites = [row[2] for row in res.rows]
    assert sites == ["1+2", "1+6", "1+2+3", "1+6+10"]
    # adjacent pair entangled, distance-2 pair exactly PPT-dead
    assert res.rows[0][3] > 0
    assert res.rows[1][3] == 0.0
    # distance drops by orders of magnitude from the face to the stretched triangle
    assert res.rows[3][4] < 1e-2 * res.rows[2][4]


def test_frh_contract(tmp_path, store):
    cfg = RunConfig(out_dir=tmp_path, seed=0, h=3.0)
    res = run_frh(cfg, store)
    assert first_line(res.csv_path) == ",".join(FRH_HEADER)
    assert len(res.rows) == 4096
    lam = np.array([[r[2], r[3], r[4]] for r in res.rows])
    assert lam.min() > 0


def test_store_diagonalizes_once_per_field_value(tmp_path, store):
    before = store.diagonalizations
    run_frh(RunConfig(out_dir=tmp_path / "a", h=3.0), store)
    run_quench(
        RunConfig(out_dir=tmp_path / "b", h=3.0, time_max=0.1, time_step=0.1, **CHEAP), store
    )
    assert store.diagonalizations == before  # h=3 spectrum reused across drivers


def test_field_sweep_contract(tmp_path, store):
    cfg = RunConfig(out_dir=tmp_path, seed=0, h_min=3.0, h_max=3.0, h_step=0.05, **CHEAP)
    res = run_field_sweep(cfg, store)
    assert first_line(res.csv_path) == ",".join(FIELD_SWEEP_HEADER)
    assert len(res.rows) == 1
    assert res.h2_star is None  # entangled at every grid point: onset below range
    meta = json.loads(res.metadata_path.read_text())
    assert meta["timings"]["diagonalizations"] >= 1


def test_fermi_verify_contract(tmp_path):
    cfg = RunConfig(out_dir=tmp_path / "m3", seed=0, m=3, n_seeds=4)
    res = run_fermi_verify(cfg)
    assert res.passed
    report = json.loads(res.report_path.read_text())
    assert report["m"] == 3 and report["n_seeds"] == 4
    assert report["analytic"]["within_tolerance"]
    cfg_b = RunConfig(out_dir=tmp_path / "again", seed=0, m=3, n_seeds=4)
    res_b = run_fermi_verify(cfg_b)
    assert res.report_path.read_bytes() == res_b.report_path.read_bytes()


def test_run_config_validation():
    with pytest.raises(DomainError):
        RunConfig(h=-1.0)
    with pytest.raises(DomainError):
        RunConfig(h_min=2.0, h_max=1.0)
    with pytest.raises(DomainError):
        RunConfig(t_min=0.0)
    with pytest.raises(DomainError):
        RunConfig(t_points=1)
    with pytest.raises(DomainError):
        RunConfig(time_step=0.0)
    with pytest.raises(DomainError):
        RunConfig(m=5)
    with pytest.raises(DomainError):
        RunConfig(n_seeds=0)
    grid = RunConfig(h_min=0.4, h_max=0.8, h_step=0.05).field_grid()
    assert len(grid) == 9
    assert np.all(np.diff(grid) > 0)


def test_exit_code_mapping():
    assert exit_code_for_exception(DomainError("x")) == 1
    assert exit_code_for_exception(MonotonicityError("x")) == 2
    assert exit_code_for_exception(BracketingError("x")) == 2
    assert exit_code_for_exception(NumericalError("x")) == 2
    assert exit_code_for_exception(np.linalg.LinAlgError("x")) == 2
    with pytest.raises(RuntimeError):
        exit_code_for_exception(RuntimeError("unmapped"))


def test_cli_parser_and_exit_codes(tmp_path):
    parser = build_parser()
    args = parser.parse_args(["quench", "--pattern", "000000000001", "--seed", "3"])
    assert args.pattern == "000000000001"
    assert main(["no-such-command"]) == 1
    assert main(["quench", "--bogus-flag"]) == 1
    # config error (bad pattern) detected before any heavy work
    assert main(["quench", "--pattern", "01", "--out", str(tmp_path)]) == 1


def test_cli_fermi_verify_end_to_end(tmp_path):
    out = tmp_path / "run"
    code = main(["fermi-verify", "--out", str(out), "--seed", "5", "--m", "4", "--n-seeds", "3"])
    assert code == 0
    report = json.loads((out / "fermi_verify.json").read_text())
    assert report["passed"] and report["m"] == 4
    assert (out / "metadata.json").exists()


def test_cli_config_file_merging(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("m = 3\nn_seeds = 2\nseed = 9  # comment\n")
    out = tmp_path / "out"
    code = main(["fermi-verify", "--config", str(cfg_file), "--out", str(out), "--n-seeds", "3"])
    assert code == 0
    report = json.loads((out / "fermi_verify.json").read_text())
    assert report["n_seeds"] == 3  # flag overrides file
    assert report["seed"] == 9  # file supplies the seed
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense line\n")
    assert main(["fermi-verify", "--config", str(bad), "--out", str(out)]) == 1
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("zzz = 1\n")
    assert main(["fermi-verify", "--config", str(unknown), "--out", str(out)]) == 1
