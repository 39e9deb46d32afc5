"""
Benchmark workflow: replicated simulate -> estimate -> oracle -> score sweeps.

Outputs (long format, plot-ready):
    scores.csv     one row per (setting, estimator, seed, metric, tau)
    aggregate.csv  mean / std / count over seeds, recomputable from scores.csv
    timings.csv    wall time per stage (volatile, not part of reproducibility)
    failures.json  stage-attributed errors of failed replications
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List

import pandas as pd

from core.orchestrator import BenchmarkOrchestrator, ReplicationResult
from workflows.base_workflow import BaseWorkflow

SCORE_COLUMNS = ["setting", "estimator", "backbone", "n", "seed", "metric", "tau", "value"]
GROUP_COLUMNS = ["setting", "estimator", "backbone", "n", "metric", "tau"]
TIMING_COLUMNS = ["setting", "n", "seed", "estimator", "stage", "seconds"]


def aggregate_scores(scores: pd.DataFrame) -> pd.DataFrame:
    """Mean and sample standard deviation of every metric over seeds."""
    if scores.empty:
        return pd.DataFrame(columns=GROUP_COLUMNS + ["mean", "std", "count"])
    grouped = scores.groupby(GROUP_COLUMNS, dropna=False, sort=True)["value"]
    return grouped.agg(["mean", "std", "count"]).reset_index()


@dataclass
class BenchmarkSummary:
    run_dir: Path
    replications: int
    failed: int
    scores: pd.DataFrame
    aggregate: pd.DataFrame

    @property
    def partial_failure(self) -> bool:
        return self.failed > 0


class BenchmarkWorkflow(BaseWorkflow):

    command = "benchmark"

    def execute(self) -> BenchmarkSummary:
        store = self.open_store()
        results: List[ReplicationResult] = BenchmarkOrchestrator(self.config, self.monitor).run()

        scores = pd.DataFrame([row for r in results for row in r.scores], columns=SCORE_COLUMNS)
        scores["tau"] = pd.to_numeric(scores["tau"])
        aggregate = aggregate_scores(scores)
        timings = pd.DataFrame([row for r in results for row in r.timings], columns=TIMING_COLUMNS)
        failures = [failure for r in results for failure in r.failures]

        store.write_frame("scores.csv", scores)
        store.write_frame("aggregate.csv", aggregate)
        store.write_frame("timings.csv", timings)
        store.write_json("failures.json", failures)

        failed = sum(1 for r in results if not r.succeeded)
        store.write_manifest(self.raw_config, {
            "replications": len(results),
            "failed_replications": failed,
        })
        self._log_summary(aggregate)
        if failed:
            self.logger.warning(f"[BENCH] {failed}/{len(results)} replications had failures; see failures.json")
        return BenchmarkSummary(
            run_dir=store.root, replications=len(results), failed=failed, scores=scores, aggregate=aggregate
        )

    def _log_summary(self, aggregate: pd.DataFrame) -> None:
        for row in aggregate.to_dict("records"):
            tau = "" if pd.isna(row["tau"]) else f" tau={row['tau']:g}"
            self.logger.info(
                f"[BENCH] {row['setting']} {row['estimator']} {row['metric']}{tau}: "
                f"mean={row['mean']:.5f} std={row['std']:.5f} (n={row['count']})"
            )
