import csv
import json

import pytest

from mqed import cli, io
from mqed.errors import UnrecognizedHeader
from mqed.model import DrudeHalfSpace, LorentzianBath, Vacuum


def _vacuum_pair(d=1.0, **extra):
    cfg = {
        "schema_version": 1,
        "emitters": [
            {"position": [0, 0, 0], "omega": 2.0, "dipole": [0, 0, 5]},
            {"position": [d, 0, 0], "omega": 2.0, "dipole": [0, 0, 5]},
        ],
        "environment": {"kind": "vacuum"},
        "method": "maqd",
        "t_max": 200.0,
        "dt": 1.0,
    }
    cfg.update(extra)
    return cfg


def _write(tmp_path, data, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_simulate_writes_csv_and_manifest(tmp_path, capsys):
    cfg = _write(tmp_path, _vacuum_pair())
    out = tmp_path / "out"
    assert cli.main(["simulate", cfg, "--out", str(out)]) == 0
    path = out / "run_maqd_norwa.csv"
    rows = _rows(path)
    assert rows[0] == ["t", "Re_C_0", "Im_C_0", "Re_C_1", "Im_C_1", "P_0", "P_1", "P_total"]
    assert len(rows) == 202
    man = json.loads((out / "run_maqd_norwa.manifest.json").read_text())
    for key in ("code_version", "config", "config_hash", "tolerances", "timings_s", "outputs"):
        assert key in man
    assert man["config"]["n_omega"] is not None
    assert str(path) in capsys.readouterr().out


def test_manifest_config_reproduces_run(tmp_path):
    cfg = _write(tmp_path, _vacuum_pair())
    assert cli.main(["simulate", cfg, "--out", str(tmp_path / "a"), "--rwa"]) == 0
    man = json.loads((tmp_path / "a" / "run_maqd_rwa.manifest.json").read_text())
    again = _write(tmp_path, man["config"], "run.json")
    assert cli.main(["simulate", again, "--out", str(tmp_path / "b")]) == 0
    first = (tmp_path / "a" / "run_maqd_rwa.csv").read_bytes()
    assert (tmp_path / "b" / "run_maqd_rwa.csv").read_bytes() == first


def test_malformed_json_reports_position(tmp_path, capsys):
    cfg = _write(tmp_path, '{\n  "schema_version": 1,\n  "emitters": [,]\n}')
    out = tmp_path / "out"
    assert cli.main(["simulate", cfg, "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "run.json:3:" in err and "malformed JSON" in err
    assert not out.exists()


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = _write(tmp_path, _vacuum_pair(colour="blue"))
    assert cli.main(["simulate", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "colour" in capsys.readouterr().err


def test_validation_failure_leaves_no_output(tmp_path, capsys):
    cfg = _write(tmp_path, _vacuum_pair(d=0.0))
    out = tmp_path / "out"
    assert cli.main(["simulate", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert "mqed:" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, capsys):
    # 1 nm apart the exchange is far too fast for a 1e4 step
    cfg = _write(tmp_path, _vacuum_pair(method="fqd", t_max=1e5, dt=1e4))
    out = tmp_path / "out"
    assert cli.main(["simulate", cfg, "--out", str(out)]) == 3
    assert "StepRejected" in capsys.readouterr().err
    assert not out.exists()


def test_config_or_preset_required(tmp_path):
    assert cli.main(["simulate", "--out", str(tmp_path)]) == 2
    cfg = _write(tmp_path, _vacuum_pair())
    assert cli.main(["simulate", cfg, "--preset", "fig3-strong", "--out", str(tmp_path)]) == 2
    assert cli.main(["simulate", cfg, "--tol", "-1", "--out", str(tmp_path)]) == 2


def test_weakcoupling_near_field_ratio(tmp_path):
    cfg = _write(tmp_path, _vacuum_pair(d=1.0))
    assert cli.main(["weakcoupling", cfg, "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "run_weak.csv")
    assert rows[0] == cli.WEAK_HEADER
    kinds = [r[0] for r in rows[1:]]
    assert kinds == ["emitter", "emitter", "pair", "pair"]
    for r in rows[3:]:
        assert float(r[-1]) == pytest.approx(2.0, rel=1e-4)
    assert float(rows[1][4]) == 0.0     # no scattering shift in vacuum


def test_greens_columns(tmp_path):
    cfg = _write(tmp_path, _vacuum_pair(d=5.0))
    assert cli.main(["greens", cfg, "--n", "5", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "run_greens_01.csv")
    assert len(rows[0]) == 1 + 18 + 1
    assert rows[0][:3] == ["omega", "Re_G_xx", "Im_G_xx"]
    assert len(rows) == 6
    assert float(rows[1][0]) == 0.1 and float(rows[-1][0]) == 4.0
    # coincident points need the scattering part
    assert cli.main(["greens", cfg, "--pair", "0", "0", "--part", "total", "--out", str(tmp_path)]) == 2


def test_sweep_keeps_order_and_rejects_empty(tmp_path):
    cfg = _write(tmp_path, _vacuum_pair())
    assert cli.main(["sweep", cfg, "--axis", "d", "--values", "3,1,2", "--what", "weak",
                     "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "run_sweep_d_weak.csv")
    assert [float(r[1]) for r in rows[1:] if r[2] == "emitter" and r[3] == "0"] == [3.0, 1.0, 2.0]
    man = json.loads((tmp_path / "run_sweep_d_weak.manifest.json").read_text())
    assert man["values"] == [3.0, 1.0, 2.0] and len(man["sub_configs"]) == 3
    assert cli.main(["sweep", cfg, "--axis", "d", "--range", "1", "2", "0", "--out", str(tmp_path)]) == 2
    # a vacuum config has no height to sweep
    assert cli.main(["sweep", cfg, "--axis", "h", "--values", "1", "--out", str(tmp_path)]) == 2


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = _write(tmp_path, _vacuum_pair())
    args = ["sweep", cfg, "--axis", "detuning", "--values", "0,0.001"]
    assert cli.main(args + ["--out", str(tmp_path / "s")]) == 0
    assert cli.main(args + ["--jobs", "2", "--out", str(tmp_path / "p")]) == 0
    name = "run_sweep_detuning_trajectory.csv"
    assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_plotscript_panels(tmp_path):
    cfg = _write(tmp_path, _vacuum_pair())
    cli.main(["simulate", cfg, "--out", str(tmp_path)])
    single = _vacuum_pair()
    single["emitters"] = single["emitters"][:1]
    cli.main(["simulate", _write(tmp_path, single, "one.json"), "--out", str(tmp_path)])
    assert cli.main(["plotscript", str(tmp_path / "run_maqd_norwa.csv"), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "run_maqd_norwa_plot.py").read_text()
    assert "['donor', 'acceptor', 'total']" in text
    compile(text, "plot.py", "exec")
    src = cli.plot_script([tmp_path / "one_maqd_norwa.csv"])
    assert "PANELS = ['P_0']" in src
    with pytest.raises(UnrecognizedHeader):
        cli.plot_script([tmp_path / "run_maqd_norwa.csv", tmp_path / "one_maqd_norwa.csv"])


def test_plotscript_rejects_truncated_header(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,Re_C_0,Im_C_0,P_0\n0,1,0,1\n")
    assert cli.main(["plotscript", str(bad), "--out", str(tmp_path)]) == 2
    assert "UnrecognizedHeader" in capsys.readouterr().err
    with pytest.raises(UnrecognizedHeader):
        cli.trajectory_columns("t,Re_C_0,Im_C_0,Re_C_1,Im_C_1,P_0,P_1")
    assert cli.trajectory_columns("t,Re_C_0,Im_C_0,P_0,P_total\n") == 1


def test_log_level_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MQED_LOG", "nonsense")
    cfg = _write(tmp_path, _vacuum_pair())
    assert cli.main(["weakcoupling", cfg, "--out", str(tmp_path)]) == 0
    monkeypatch.setenv("MQED_LOG", "debug")
    assert cli.main(["weakcoupling", cfg, "--out", str(tmp_path)]) == 0


def test_presets():
    weak = io.preset("fig3-weak")
    assert weak.emitters[0].position == (0.0, 0.0, 10.0)
    assert weak.emitters[1].position == (4.0, 0.0, 10.0)
    assert weak.t_max == 5000.0
    strong = io.preset("fig3-strong", dt=0.02)
    assert strong.emitters[1].position == (1.0, 0.0, 1.0) and strong.dt == 0.02
    assert isinstance(strong.environment, DrudeHalfSpace)
    assert strong.environment.omega_p == 5.0 and strong.emitters[0].omega == 3.525
    with pytest.raises(io.ConfigFormatError):
        io.preset("nope")


@pytest.mark.parametrize("env", [Vacuum(), DrudeHalfSpace(5.0, 0.1), LorentzianBath(3.5, 0.1, 0.01, 1, 6)])
def test_config_round_trip(env):
    cfg = io.pair_over_surface(2.0, 3.0, env=env, initial=(0.6, 0.8j), rwa=True, t_max=10.0)
    back = io.config_from_dict(json.loads(json.dumps(io.config_to_dict(cfg))))
    assert back == cfg
    assert io.config_hash(back) == io.config_hash(cfg)


def test_drude_reading_and_bad_schema():
    d = _vacuum_pair()
    d["environment"] = {"kind": "drude", "reading": "spp"}
    assert isinstance(io.config_from_dict(d).environment, DrudeHalfSpace)
    d["environment"] = {"kind": "drude", "reading": "spp", "gamma": 0.2}
    with pytest.raises(io.ConfigFormatError):
        io.config_from_dict(d)
    with pytest.raises(io.ConfigFormatError, match="schema_version"):
        io.config_from_dict(_vacuum_pair(schema_version=2))
    with pytest.raises(io.ConfigFormatError, match="rwa"):
        io.config_from_dict(_vacuum_pair(rwa="yes"))


def test_hash_ignores_int_float_spelling():
    a = io.pair_over_surface(2, 3, env=Vacuum(), t_max=10, dt=1)
    b = io.pair_over_surface(2.0, 3.0, env=Vacuum(), t_max=10.0, dt=1.0)
    assert io.config_hash(a) == io.config_hash(b)
