import os

import pytest

from main import MODEL_FILE, main
from models.checkpoint import save_checkpoint
from signals.data_io import CSV_COLUMNS
from utils.artifacts import read_json
from utils.exceptions import InvalidConfigError, MissingInputError
from utils.settings_manager import RunManifest, SettingsManager, load_settings


def _write(path, text):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return str(path)


def test_settings_file_is_typed_and_ignores_comments(tmp_path):
    path = _write(tmp_path / "run.cfg", "# 기본값\ntask = seizure\nmax-deg = 0.02  # 허용 저하량\nepochs=50\n\n")
    settings = SettingsManager(path).get_settings()
    assert settings == {"task": "seizure", "max_deg": 0.02, "epochs": 50}
    assert load_settings(None) == {}


def test_settings_errors(tmp_path):
    with pytest.raises(InvalidConfigError):
        load_settings(_write(tmp_path / "a.cfg", "colour = red\n"))
    with pytest.raises(InvalidConfigError):
        load_settings(_write(tmp_path / "b.cfg", "epochs\n"))
    with pytest.raises(InvalidConfigError):
        load_settings(_write(tmp_path / "c.cfg", "epochs = many\n"))
    with pytest.raises(MissingInputError):
        load_settings(str(tmp_path / "missing.cfg"))


def test_manifest_records_relative_sorted_outputs(tmp_path):
    manifest = RunManifest(command="explain", seed=3, config={"epochs": 5})
    manifest.outputs.extend([str(tmp_path / "z.json"), str(tmp_path / "components" / "a.json")])
    payload = read_json(manifest.write(str(tmp_path)))
    assert payload["outputs"] == [os.path.join("components", "a.json"), "z.json"]
    assert payload["command"] == "explain" and payload["seed"] == 3
    assert "_t0" not in payload
    assert payload["wall_clock_seconds"] >= 0.0


@pytest.mark.parametrize("argv", [
    ["train", "--data", "d", "--out", "o", "--method", "lime"],
    ["evaluate", "--data", "d", "--model", "m", "--explanations", "e", "--out", "o", "--fidelity-k", "a,b"],
    ["generate", "--out", "o", "--jobs", "0"],
])
def test_usage_errors_exit_with_code_two(tmp_path, argv):
    argv = [str(tmp_path / a) if a in ("d", "m", "e", "o") else a for a in argv]
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == 2


def test_unknown_config_key_is_usage_error(tmp_path):
    path = _write(tmp_path / "bad.cfg", "colour = red\n")
    with pytest.raises(SystemExit) as excinfo:
        main(["--config", path, "generate", "--out", str(tmp_path / "out")])
    assert excinfo.value.code == 2


def test_missing_data_directory_is_runtime_error(tmp_path):
    code = main(["train", "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path / "model")])
    assert code == 1


def test_generate_writes_data_and_manifest(tmp_path):
    out = tmp_path / "data"
    code = main(["generate", "--task", "state", "--n-subjects", "3", "--windows-per-class", "2",
                 "--seed", "5", "--out", str(out)])
    assert code == 0
    for name in ("train.csv", "eval.csv", "ground_truth.json", "manifest.json"):
        assert (out / name).exists()
    manifest = read_json(str(out / "manifest.json"))
    assert manifest["command"] == "generate"
    assert manifest["outputs"] == ["eval.csv", "ground_truth.json", "train.csv"]
    assert manifest["config"]["n_subjects"] == 3


def test_config_file_supplies_flag_defaults(tmp_path):
    path = _write(tmp_path / "run.cfg", "n_subjects = 3\nwindows_per_class = 1\nformat = json\n")
    out = tmp_path / "data"
    assert main(["--config", path, "generate", "--out", str(out)]) == 0
    assert (out / "train.json").exists()
    manifest = read_json(str(out / "manifest.json"))
    assert manifest["config"]["windows_per_class"] == 1
    assert path in manifest["inputs"]


def test_explain_on_empty_eval_set_writes_empty_list(tmp_path, tiny_model):
    data, model_dir, out = tmp_path / "data", tmp_path / "model", tmp_path / "explain"
    data.mkdir()
    _write(data / "eval.csv", ",".join(CSV_COLUMNS) + "\n")
    save_checkpoint(tiny_model, str(model_dir / MODEL_FILE),
                    {"baselines": {"ACC": 1.0, "HR": 72.0, "EDA": 2.1, "TEMP": 33.1}})

    code = main(["explain", "--data", str(data), "--model", str(model_dir), "--method", "iic",
                 "--out", str(out)])
    assert code == 0
    assert read_json(str(out / "explanations_iic.json")) == []
    assert not (out / "failures_iic.json").exists()


@pytest.mark.slow
def test_full_pipeline(tmp_path):
    data, model, explain, evaluation, report = (str(tmp_path / n) for n in ("data", "model", "explain", "eval", "report"))
    assert main(["generate", "--task", "state", "--n-subjects", "4", "--windows-per-class", "3", "--out", data]) == 0
    assert main(["train", "--data", data, "--method", "all", "--arch", "fcn", "--epochs", "3",
                 "--restarts", "1", "--hidden-size", "8", "--out", model]) == 0
    for method in ("iic", "lcbm", "fcshap"):
        assert main(["explain", "--data", data, "--model", model, "--method", method,
                     "--epochs", "5", "--out", explain]) == 0
    assert main(["evaluate", "--data", data, "--model", model, "--explanations", explain,
                 "--fidelity-k", "1,2", "--out", evaluation]) == 0
    assert main(["report", "--explanations", explain, "--evaluation", evaluation, "--task", "state",
                 "--out", report]) == 0

    training = read_json(os.path.join(model, "training.json"))
    assert set(training["classification"]) == {"iic", "lcbm", "fcshap"}
    metrics = open(os.path.join(evaluation, "metrics.csv"), encoding="utf-8").read().splitlines()
    assert metrics[0] == "metric,param,value"
    assert any(line.startswith("iic.fidelity,1") for line in metrics)
    assert any(line.startswith("fcshap.sufficiency,") for line in metrics)
    for name in ("report.html", "report.json", "global_iic.csv", "global_lcbm.csv", "global_fcshap.csv"):
        assert os.path.exists(os.path.join(report, name))


def test_evaluate_skips_windows_whose_explanation_failed(tmp_path, tiny_model, baselines, eval_dataset):
    import numpy as np

    from decomposition.decomposer import decompose
    from explainers.explanation import Explanation, save_explanations
    from signals.data_io import save_dataset

    data, model_dir, explain, out = (tmp_path / n for n in ("data", "model", "explain", "eval"))
    save_dataset(eval_dataset, str(data / "eval.csv"))
    save_checkpoint(tiny_model, str(model_dir / MODEL_FILE), {"baselines": baselines.to_dict()})
    names = decompose(eval_dataset.windows[0], baselines).names
    explanations = [
        Explanation(w.window_id, "iic", names, np.linspace(1.0, 0.0, len(names)), np.ones(len(names), bool), 0)
        for w in eval_dataset.windows[1:]
    ]
    save_explanations(explanations, str(explain / "explanations_iic.json"))

    code = main(["evaluate", "--data", str(data), "--model", str(model_dir), "--explanations", str(explain),
                 "--method", "iic", "--fidelity-k", "1", "--jobs", "2", "--out", str(out)])
    assert code == 0
    reports = read_json(str(out / "evaluation.json"))["flip_reports"]["iic"]
    assert [r["criterion"] for r in reports] == ["fidelity", "sufficiency", "random"]
    assert all(r["n_skipped"] == 1 for r in reports)
    assert reports[0]["n_evaluated"] == len(eval_dataset) - 1


@pytest.mark.parametrize("command", ["train", "report"])
def test_jobs_flag_only_on_parallel_commands(tmp_path, command):
    argv = {"train": ["train", "--data", "d"], "report": ["report", "--explanations", "e"]}[command]
    with pytest.raises(SystemExit) as excinfo:
        main(argv + ["--out", str(tmp_path / "o"), "--jobs", "2"])
    assert excinfo.value.code == 2


def test_component_dumps_are_listed_in_explain_manifest(tmp_path, tiny_model, baselines, eval_dataset):
    from signals.data_io import save_dataset

    data, model_dir, out = tmp_path / "data", tmp_path / "model", tmp_path / "explain"
    save_dataset(eval_dataset.subset([0, 1]), str(data / "eval.csv"))
    save_checkpoint(tiny_model, str(model_dir / MODEL_FILE), {"baselines": baselines.to_dict()})

    code = main(["explain", "--data", str(data), "--model", str(model_dir), "--method", "iic",
                 "--epochs", "1", "--dump-components", "--out", str(out)])
    assert code == 0
    manifest = read_json(str(out / "manifest.json"))
    dumped = sorted(os.path.join("components", f"{w.window_id}.json") for w in eval_dataset.windows[:2])
    assert [p for p in manifest["outputs"] if p.startswith("components")] == dumped
    assert "explanations_iic.json" in manifest["outputs"]
    assert manifest["config"]["components_dir"] == "components"
    assert not (out / "components" / "manifest.json").exists()
    assert read_json(str(out / dumped[0]))["window_id"] == eval_dataset.windows[0].window_id
