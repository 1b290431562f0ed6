from pathlib import Path

import pytest

import main
from utils import serialization

FIXTURE_CONFIG = str(Path(__file__).resolve().parent.parent / "configs" / "fixture.json")


def _artifacts(directory: Path):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.name != "varhorse.log"}


@pytest.mark.slow
def test_fixture_convergence_run(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main.main(["run", "--config", FIXTURE_CONFIG, "--out", str(first), "--seed", "0"]) == 0

    summary = serialization.read_json(first / "summary.json")
    stages = summary["stages"]
    assert summary["passed"]
    assert [s["stage"] for s in stages] == [1, 2, 3, 4]
    assert stages[0]["return_times"] == [2, 3]
    for stage in stages:
        assert stage["error"] is None
        assert stage["n_branches"] >= 2
        assert stage["d_n"] < 3 * stage["rho"]
    assert stages[-1]["d_n"] < stages[0]["d_n"]

    names = set(_artifacts(first))
    for n in range(1, 5):
        assert {f"branches_stage{n}.json", f"refinement_stage{n}.csv", f"measures_stage{n}.csv"} <= names
    assert (first / "varhorse.log").exists()

    assert main.main(["run", "--config", FIXTURE_CONFIG, "--out", str(second), "--seed", "0"]) == 0
    assert _artifacts(first) == _artifacts(second)

    table = main.ExperimentRunner.report(str(tmp_path), first=2, last=3)
    assert table["stage"].tolist() == [2, 3, 2, 3]
