"""Side-by-side comparison of results.json files."""

import logging
from collections import Counter
from pathlib import Path

import pandas as pd

from core.errors import DataIOError, InvalidInputError
from schema.schema import ResultRecord

logger = logging.getLogger(__name__)

METRICS = ("avg_log_lik", "rmse", "coverage95")
COVERAGE_TARGET = 0.95
BEST_MARK = "*"


def load_results(paths: list[Path | str]) -> list[ResultRecord]:
    records = []
    for path in map(Path, paths):
        if not path.is_file():
            raise DataIOError(f"results file {path} does not exist")
        records.append(ResultRecord.model_validate_json(path.read_text(encoding="utf-8")))
    return records


def _column_names(records: list[ResultRecord], datasets: list[str]) -> list[str]:
    """One column per method in input order; a repeated method gets a #k suffix."""
    methods = [str(r.method) for r in records if r.dataset == datasets[0]]
    seen: Counter[str] = Counter()
    names = []
    for method in methods:
        seen[method] += 1
        names.append(method if seen[method] == 1 else f"{method}#{seen[method]}")
    return names


def _score(metric: str, mean: float) -> float:
    """Higher is better."""
    if metric == "rmse":
        return -mean
    if metric == "coverage95":
        return -abs(mean - COVERAGE_TARGET)
    return mean


def compare(records: list[ResultRecord], digits: int = 2) -> pd.DataFrame:
    """Rows (metric, dataset), one column per method, cells 'mean±std', best flagged with '*'.

    Ties on the best mean flag every tied column.
    """
    if len(records) < 2:
        raise InvalidInputError(f"need at least two results to compare, got {len(records)}")
    datasets = list(dict.fromkeys(r.dataset for r in records))
    by_dataset = {d: [r for r in records if r.dataset == d] for d in datasets}
    if len({len(v) for v in by_dataset.values()}) != 1:
        raise InvalidInputError(f"datasets do not have the same methods: {sorted(datasets)}")
    columns = _column_names(records, datasets)
    if len(columns) < 2:
        raise InvalidInputError(f"results cover different datasets: {datasets}")
    for dataset, rows in by_dataset.items():
        if [str(r.method) for r in rows] != [c.split("#")[0] for c in columns]:
            raise InvalidInputError(f"dataset {dataset} does not have the methods {columns}")

    table = []
    for metric in METRICS:
        for dataset in datasets:
            stats = [r.aggregate[metric] for r in by_dataset[dataset]]
            best = max(_score(metric, mean) for mean, _ in stats)
            row = {"metric": metric, "dataset": dataset}
            for column, (mean, std) in zip(columns, stats):
                flag = BEST_MARK if _score(metric, mean) == best else ""
                row[column] = f"{mean:.{digits}f}±{std:.{digits}f}{flag}"
            table.append(row)
    return pd.DataFrame(table, columns=["metric", "dataset", *columns])


def write_comparison(table: pd.DataFrame, path: Path) -> None:
    table.to_csv(path, index=False, encoding="utf-8")
    logger.info(f"wrote comparison of {len(table.columns) - 2} methods to {path}")


def render(table: pd.DataFrame) -> str:
    """Aligned plain-text rendering of the comparison table."""
    return table.to_string(index=False)
