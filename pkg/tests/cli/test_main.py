from datetime import datetime
import json

import pytest

from conftest import write_dataset_csv
from lazyvi.cli.main import main
from lazyvi.core.exceptions import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, EXIT_OK
from lazyvi.services.simulation_service import gen_linear_corr


def write_config(tmp_path, document):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


SMALL_RUN = {
    "experiment": "linear_corr",
    "n": 100,
    "n1": 70,
    "rhos": [0.0],
    "methods": ["dropout"],
    "network": {"hidden_widths": [4]},
    "train": {"epochs": 10},
}


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    code = main(["run", str(write_config(tmp_path, SMALL_RUN)), "--output-dir", str(out)])
    assert code == EXIT_OK
    for name in ("results.csv", "results.json", "timings.csv", "coverage.csv", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "ok"
    assert "dropout" in manifest["seconds_by_method"]
    started = datetime.fromisoformat(manifest["started_at"].replace("Z", "+00:00"))
    finished = datetime.fromisoformat(manifest["finished_at"].replace("Z", "+00:00"))
    assert started.tzinfo is not None and finished >= started


def test_overrides(tmp_path):
    out = tmp_path / "out"
    args = ["run", str(write_config(tmp_path, SMALL_RUN)), "--n", "80", "--n1", "60", "--seeds", "3", "4"]
    assert main(args + ["--output-dir", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seeds"] == [3, 4]


def test_missing_required_field(tmp_path, capsys):
    document = {k: v for k, v in SMALL_RUN.items() if k != "n1"}
    code = main(["run", str(write_config(tmp_path, document)), "--output-dir", str(tmp_path)])
    assert code == EXIT_CONFIG_ERROR
    assert "n1" in capsys.readouterr().out


def test_unreadable_config(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == EXIT_CONFIG_ERROR


def test_invalid_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["run", str(path)]) == EXIT_CONFIG_ERROR


def test_divergence_exits_numerical(tmp_path):
    document = dict(
        SMALL_RUN,
        network={"hidden_widths": []},
        train={"optimizer": "momentum", "learning_rate": 1e3, "epochs": 500},
    )
    out = tmp_path / "out"
    code = main(["run", str(write_config(tmp_path, document)), "--output-dir", str(out)])
    assert code == EXIT_NUMERICAL_ERROR
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "failed"
    assert "non-finite" in manifest["error"]


def test_csv_command(tmp_path):
    data_path = write_dataset_csv(gen_linear_corr(60, 0.2, rng=0), tmp_path / "d.csv")
    out = tmp_path / "out"
    code = main(
        [
            "csv",
            "--data",
            str(data_path),
            "--response",
            "y",
            "--method",
            "dropout",
            "lazy",
            "--hidden",
            "4",
            "--epochs",
            "10",
            "--lambda",
            "1.0",
            "--save-model",
            "--output-dir",
            str(out),
        ]
    )
    assert code == EXIT_OK
    assert (out / "estimates.csv").exists()
    assert (out / "models" / "full_seed0.json").exists()


def test_csv_parse_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,y\n1,2,3\n4,x,6\n", encoding="utf-8")
    code = main(["csv", "--data", str(path), "--response", "y", "--output-dir", str(tmp_path / "o")])
    assert code == EXIT_CONFIG_ERROR


def test_trace_check_command(tmp_path):
    out = tmp_path / "out"
    code = main(
        ["trace-check", "--n1", "60", "--width", "8", "--sizes", "20", "40", "--output-dir", str(out)]
    )
    assert code == EXIT_OK
    assert "trace_fit" in json.loads((out / "results.json").read_text(encoding="utf-8"))["summary"]


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "1.0.0" in capsys.readouterr().out


def test_shapley_command(tmp_path):
    out = tmp_path / "out"
    args = ["shapley", "--n", "60", "--n1", "40", "--p", "3", "--width", "4", "--permutations", "5"]
    assert main(args + ["--method", "lazy", "--output-dir", str(out)]) == EXIT_OK
    assert len((out / "results.csv").read_text(encoding="utf-8").splitlines()) == 1 + 3
    table = (out / "shapley_lazy_seed0.csv").read_text(encoding="utf-8").splitlines()
    assert table[0] == "feature,psi,se" and len(table) == 1 + 3
    assert (out / "shapley_lazy_seed0.json").exists()


def test_roar_command(tmp_path):
    out = tmp_path / "out"
    args = ["roar", "--n", "60", "--n1", "40", "--p", "4", "--hidden", "4", "--proportions", "0", "0.5"]
    assert main(args + ["--lambda", "1.0", "--output-dir", str(out)]) == EXIT_OK
    assert (out / "timings.csv").exists()
    curve = (out / "roar_seed0.csv").read_text(encoding="utf-8").splitlines()
    assert curve[0] == "t,method,mse,seconds"
    assert len(curve) == 1 + 2 * 3
