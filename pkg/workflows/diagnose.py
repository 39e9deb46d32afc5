"""
Diagnose workflow: fit Stage U1 and check the plug-in control variable.
"""

from core.cf_pipeline import cross_fit_controls, stage_u1
from core.exceptions import StageError, TabCFError
from models.reports import DiagnosticReport
from utils.stats_analysis import StatisticalAnalyzer
from workflows.base_workflow import BaseWorkflow


class DiagnoseWorkflow(BaseWorkflow):
    """PIT uniformity, V̂ ⫫ Z, the relevance hint and (optionally) Y ⫫ Z | X, V̂, W."""

    command = "diagnose"

    def execute(self) -> DiagnosticReport:
        config = self.config
        settings = config.diagnostics
        store = self.open_store()
        dataset = self.load_dataset(config.seed)

        with self.monitor.stage("U1"):
            try:
                if config.cross_fit_folds:
                    controls = cross_fit_controls(dataset, config.cross_fit_folds, config.stage_one_backbone, config.seed)
                else:
                    _, controls = stage_u1(dataset, config.stage_one_backbone)
            except TabCFError as e:
                raise StageError("U1", e) from e

        analyzer = StatisticalAnalyzer(settings.permutations, settings.max_points)
        with self.monitor.stage("diagnose"):
            report = analyzer.control_diagnostics(
                dataset,
                controls,
                seed=config.seed,
                conditional=settings.conditional,
                bins=settings.bins,
                min_stratum=settings.min_stratum,
            )

        store.write_json("diagnostics.json", report.model_dump(mode="json"))
        store.write_manifest(self.raw_config, {"n": dataset.n, "controls": controls.label})
        return report
