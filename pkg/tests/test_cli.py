import csv
import io
import json

import pytest

from chanres import cli
from chanres.channels import CellState, Outcome
from chanres.core import NetworkConfig


def write_cfg(tmp_path, cfg: NetworkConfig, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg.to_dict()))
    return str(path)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def quick_cfg(small_cfg):
    return small_cfg.with_(sim_duration=200.0)


def test_run_reference_config(tmp_path):
    out = tmp_path / "run.csv"
    cfg = NetworkConfig(sim_duration=400.0, warmup=100.0)
    assert cli.main(["run", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert tuple(rows[0]) == cli.RUN_HEADER
    assert len(rows) >= 2


def test_run_is_byte_identical(tmp_path, quick_cfg):
    path = write_cfg(tmp_path, quick_cfg.with_(controller="la", stride=2))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["run", "--config", path, "--seed", "5", "--out", str(a)]) == 0
    assert cli.main(["run", "--config", path, "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_run_rejects_invalid_config(tmp_path, capsys):
    path = write_cfg(tmp_path, NetworkConfig(channels_per_cell=0))
    assert cli.main(["run", "--config", path]) == 2
    assert "channels_per_cell ≥ 1" in capsys.readouterr().err


def test_missing_config_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert cli.main(["run", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_malformed_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"channels": 4}')
    assert cli.main(["run", "--config", str(path)]) == 2


def test_csv_number_format():
    assert cli.fmt(1 / 3) == "0.333333"
    assert cli.fmt(123456789.0) == "1.23457e+08"
    assert cli.fmt(None) == ""
    assert cli.fmt(7) == "7"


def test_sweep_row_counts(tmp_path, quick_cfg):
    out = tmp_path / "sweep.csv"
    path = write_cfg(tmp_path, quick_cfg.with_(sim_duration=80.0))
    rc = cli.main(["sweep", "--config", path, "--variable", "load_multiplier", "--values", "0.5,1.0,1.5,2.0",
                   "--replications", "5", "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert tuple(rows[0]) == cli.SWEEP_HEADER
    body = rows[1:]
    assert sum(r[2] != "aggregate" for r in body) == 20
    assert sum(r[2] == "aggregate" for r in body) == 4


def test_velocity_sweep(tmp_path, quick_cfg):
    out = tmp_path / "vel.csv"
    path = write_cfg(tmp_path, quick_cfg.with_(handoff_mode="mobility", sim_duration=80.0))
    rc = cli.main(["sweep", "--config", path, "--variable", "velocity", "--values", "5,10,20,40",
                   "--replications", "2", "--out", str(out)])
    assert rc == 0
    agg = [r for r in read_rows(out)[1:] if r[2] == "aggregate"]
    assert [float(r[1]) for r in agg] == [5, 10, 20, 40]


def test_sweep_values_must_increase(tmp_path, quick_cfg):
    path = write_cfg(tmp_path, quick_cfg)
    assert cli.main(["sweep", "--config", path, "--values", "2,1", "--out", str(tmp_path / "x.csv")]) == 2


def test_sweep_is_byte_identical(tmp_path, quick_cfg):
    path = write_cfg(tmp_path, quick_cfg.with_(sim_duration=60.0))
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        cli.main(["sweep", "--config", path, "--values", "1,2", "--replications", "2", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_validate_zero_duration(tmp_path):
    cfg = NetworkConfig(reservation=(15, 15, 15, 15), sim_duration=100.0, warmup=100.0)
    assert cli.main(["validate", "--config", write_cfg(tmp_path, cfg)]) == 2


def test_validate_too_few_samples(tmp_path, capsys):
    cfg = NetworkConfig(reservation=(15, 15, 15, 15), sim_duration=150.0, warmup=100.0)
    assert cli.main(["validate", "--config", write_cfg(tmp_path, cfg), "--replications", "2"]) == 2
    assert "insufficient samples" in capsys.readouterr().err


def test_validate_detects_broken_admission(monkeypatch, capsys):
    def leaky(self, cls, call_id=-1, now=0.0):
        # off-by-one: a full dedicated pool still takes one more call
        k = int(cls)
        if self.busy[k] <= self.rv[k]:
            self.busy[k] += 1
            return Outcome.DEDICATED
        return Outcome.REFUSED

    monkeypatch.setattr(CellState, "try_admit", leaky)
    assert cli.main(["validate"]) == 1
    assert "tolerance exceeded" in capsys.readouterr().err


def test_optimize_toy(tmp_path, capsys):
    cfg = NetworkConfig(num_cells=1, channels_per_cell=4, arrival_rates=(1, 1, 0, 0), mean_call_duration=1.0,
                        stride=1, signaling_delay=0.0)
    out = tmp_path / "opt.json"
    assert cli.main(["optimize", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["reservation"] == {"noc": 2, "roc": 2, "nhc": 0, "rhc": 0}
    assert res["cost"] == pytest.approx(0.4)


def test_optimize_reference_beats_equal_split(tmp_path):
    from chanres.analytic import disjoint_cost

    cfg = NetworkConfig()
    out = tmp_path / "opt.json"
    assert cli.main(["optimize", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["cost"] <= disjoint_cost((15, 15, 15, 15), cfg.offered_loads(), cfg.cost_weights, 0.1)


def test_optimize_rejects_queues(tmp_path):
    cfg = NetworkConfig(queue_capacity=(0, 0, 2, 2))
    assert cli.main(["optimize", "--config", write_cfg(tmp_path, cfg)]) == 2


TOY = NetworkConfig(num_cells=1, channels_per_cell=4, arrival_rates=(1, 1, 0, 0), mean_call_duration=1.0,
                    stride=1, signaling_delay=0.0, controller="la", control_period=5.0, episode_windows=2,
                    warmup=1.0, sim_duration=2.0)


def test_train_needs_episodes(tmp_path):
    assert cli.main(["train", "--config", write_cfg(tmp_path, TOY), "--episodes", "0"]) == 2


def test_train_refuses_static(tmp_path):
    path = write_cfg(tmp_path, TOY.with_(controller="static"))
    assert cli.main(["train", "--config", path, "--episodes", "3"]) == 2


@pytest.mark.parametrize("kind", ["la", "neural"])
def test_train_resumes_episode_counter(tmp_path, kind):
    path = write_cfg(tmp_path, TOY.with_(controller=kind))
    state = tmp_path / "state.json"
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["train", "--config", path, "--episodes", "4", "--out", str(a), "--state", str(state)]) == 0
    assert json.loads(state.read_text())["episode"] == 4
    assert cli.main(["train", "--config", path, "--episodes", "3", "--out", str(b), "--state", str(state)]) == 0
    assert [int(r[0]) for r in read_rows(b)[1:]] == [5, 6, 7]
    assert json.loads(state.read_text())["episode"] == 7


def test_train_state_kind_mismatch(tmp_path):
    state = tmp_path / "state.json"
    cli.main(["train", "--config", write_cfg(tmp_path, TOY), "--episodes", "1", "--out", str(tmp_path / "a.csv"),
              "--state", str(state)])
    path = write_cfg(tmp_path, TOY.with_(controller="neural"), "nn.json")
    assert cli.main(["train", "--config", path, "--episodes", "1", "--state", str(state)]) == 2


def test_figures(tmp_path, quick_cfg):
    path = write_cfg(tmp_path, quick_cfg.with_(sim_duration=60.0))
    outdir = tmp_path / "figs"
    assert cli.main(["figures", "--config", path, "--replications", "2", "--out", str(outdir)]) == 0
    for name, header in cli.FIG_HEADERS.items():
        rows = read_rows(outdir / name)
        assert tuple(rows[0]) == header
        assert len(rows) == 5


def test_unknown_command():
    assert cli.main(["frobnicate"]) == 2
