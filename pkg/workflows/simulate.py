"""
Simulate workflow: observational datasets for every configured setting and
replication, plus a manifest recording their seeds.
"""

import re
from pathlib import Path

from core.exceptions import ConfigurationError
from services.simulation_service import gen_observational
from workflows.base_workflow import BaseWorkflow


def setting_slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_")


class SimulateWorkflow(BaseWorkflow):

    command = "simulate"

    def execute(self) -> Path:
        if self.config.csv_path:
            raise ConfigurationError("simulate needs a synthetic setting, not a csv_path.")
        store = self.open_store()

        datasets = []
        for setting in self.config.benchmark_settings():
            for replication, seed in enumerate(self.config.seeds()):
                with self.monitor.stage("simulate", setting=setting.name):
                    dataset = gen_observational(setting, self.config.n, seed)
                name = f"{setting_slug(setting.name)}_rep{replication:03d}.csv"
                store.write_dataset(name, dataset)
                datasets.append({
                    "file": name,
                    "setting": setting.model_dump(mode="json"),
                    "replication": replication,
                    "seed": seed,
                    "n": dataset.n,
                    "columns": dataset.column_roles.columns,
                })
                self.logger.info(f"[Workflow] {name}: n={dataset.n}, seed={seed}")

        store.write_manifest(self.raw_config, {"datasets": datasets})
        return store.root
