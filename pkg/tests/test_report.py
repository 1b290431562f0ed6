import pandas as pd

from models import MeasureRow
from utils import report, serialization


def _summary(stages):
    return {"stages": stages, "passed": all(s["passed"] for s in stages)}


def _stage(index, d_n, passed=True):
    return {"stage": index, "rho": 0.1 / 2 ** (index - 1), "s": 4, "n_branches": 2,
            "return_times": [2, 3], "measures": 23, "d_n": d_n, "threshold": 0.3, "passed": passed,
            "error": None}


def test_empty_directory(tmp_path):
    table = report.report_table(tmp_path)
    assert table.empty
    assert list(table.columns) == report.REPORT_COLUMNS
    assert report.report_table(tmp_path / "missing").empty


def test_parse_summaries():
    rows = report.parse_summaries([
        {"run": "a", "stages": [_stage(1, 0.03), _stage(2, 0.01)]},
        {"run": "b", "stages": _stage(1, 0.2, passed=False)},
        {"run": "c"},
    ])
    assert [(r["run"], r["stage"]) for r in rows] == [("a", 1), ("a", 2), ("b", 1)]
    assert rows[0]["return_times"] == "2 3"
    assert rows[2]["passed"] is False


def test_filter_by_stage():
    rows = report.parse_summaries([{"stages": [_stage(i, 0.1) for i in range(1, 5)]}])
    assert [r["stage"] for r in report.filter_by_stage(rows, 2, 3)] == [2, 3]
    assert report.filter_by_stage(rows, 5, 9) == []


def test_limit_dataframe():
    df = pd.DataFrame({"word": list("abcd"), "distance": [0.1, 0.4, 0.2, 0.3]})
    assert report.limit_dataframe(df, "distance", 2)["word"].tolist() == ["b", "d"]
    assert len(report.limit_dataframe(df, "distance", 10)) == 4


def test_report_table_collects_runs(tmp_path):
    serialization.write_json(tmp_path / "fixture" / "summary.json", _summary([_stage(1, 0.03), _stage(2, 0.01)]))
    serialization.write_json(tmp_path / "cat" / "summary.json", _summary([_stage(1, 0.5)]))
    table = report.report_table(tmp_path)
    assert table["run"].tolist() == ["cat", "fixture", "fixture"]
    assert report.report_table(tmp_path, first=2)["d_n"].tolist() == [0.01]


def test_worst_measures(tmp_path):
    rows = [MeasureRow(w, 5, d, 0.0, True) for w, d in (("1", 0.01), ("12", 0.05), ("2", 0.02))]
    serialization.write_measures_csv(tmp_path / "measures_stage1.csv", rows)
    worst = report.worst_measures(tmp_path, top_n=2)
    assert worst["word"].tolist() == ["12", "2"]
    assert set(worst["source"]) == {"measures_stage1.csv"}
    assert report.worst_measures(tmp_path / "missing").empty
