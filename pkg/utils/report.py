from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd

from .serialization import read_csv, read_json

REPORT_COLUMNS = ["run", "stage", "rho", "s", "n_branches", "return_times", "measures", "d_n",
                  "threshold", "passed", "error"]


def parse_summaries(entries: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Flatten experiment summaries into one row per stage"""
    rows = []
    for entry in entries:
        run = entry.get("run", "")
        stages = entry.get("stages") or []
        if isinstance(stages, dict):
            stages = [stages]
        for stage in stages:
            if not isinstance(stage, dict):
                continue
            times = stage.get("return_times") or []
            rows.append({
                "run": run,
                "stage": stage.get("stage"),
                "rho": stage.get("rho"),
                "s": stage.get("s"),
                "n_branches": stage.get("n_branches"),
                # keep the table flat for CSV export
                "return_times": " ".join(str(m) for m in times),
                "measures": stage.get("measures"),
                "d_n": stage.get("d_n"),
                "threshold": stage.get("threshold"),
                "passed": stage.get("passed"),
                "error": stage.get("error"),
            })
    return rows


def filter_by_stage(rows: Sequence[Dict[str, Any]], first: int, last: int) -> List[Dict[str, Any]]:
    """Keep stage rows with first <= stage <= last"""
    return [row for row in rows if row.get("stage") is not None and first <= int(row["stage"]) <= last]


def limit_dataframe(df: pd.DataFrame, value_column: str, top_n: int = 25) -> pd.DataFrame:
    """Limit dataframe to the top N rows by value"""
    if len(df) > top_n:
        return df.nlargest(top_n, value_column)
    return df


def collect_summaries(directory: Union[str, Path]) -> List[Dict[str, Any]]:
    """summary.json documents under ``directory``, in path order."""
    root = Path(directory)
    if not root.is_dir():
        return []
    entries = []
    for path in sorted(root.rglob("summary.json")):
        doc = read_json(path)
        doc.setdefault("run", str(path.parent.relative_to(root)) or ".")
        entries.append(doc)
    return entries


def report_table(directory: Union[str, Path], first: int = 1, last: int = 10 ** 9) -> pd.DataFrame:
    rows = filter_by_stage(parse_summaries(collect_summaries(directory)), first, last)
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def worst_measures(directory: Union[str, Path], top_n: int = 25) -> pd.DataFrame:
    """The measures farthest from the reference across every sweep CSV."""
    if not Path(directory).is_dir():
        return pd.DataFrame(columns=["word", "period", "distance", "slack", "passed", "source"])
    frames = [read_csv(p).assign(source=p.name) for p in sorted(Path(directory).rglob("measures_stage*.csv"))]
    frames = [f for f in frames if not f.empty]
    if not frames:
        return pd.DataFrame(columns=["word", "period", "distance", "slack", "passed", "source"])
    return limit_dataframe(pd.concat(frames, ignore_index=True), "distance", top_n)
