"""
Unit tests for configuration layering, run-config validation and validators.
"""

import os

import pytest

from config.settings import build_run_config, load_config, merge
from core.exceptions import ConfigurationError, OutputError, RoleError
from models.enums import BackboneKind, EstimatorKind, TreatmentModel
from utils.validators import Validators
from tests.fixtures.mock_data import MOCK_ROLES, MOCK_RUN_FILE

ENV_KEYS = (
    "TABCF_WORKERS",
    "TABCF_OUTPUT_DIR",
    "TABCF_LOG_LEVEL",
    "APPLICATIONINSIGHTS_CONNECTION_STRING",
    "APPLICATION_INSIGHTS_CONNECTION_STRING",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def run_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(MOCK_RUN_FILE)
    return path


class TestMerge:

    def test_nested_override(self):
        base = {"grid": {"n_x": 200, "n_y": 512}, "seed": 0}
        merged = merge(base, {"grid": {"n_x": 10}})

        assert merged == {"grid": {"n_x": 10, "n_y": 512}, "seed": 0}
        assert base["grid"]["n_x"] == 200

    def test_none_does_not_override(self):
        assert merge({"seed": 3}, {"seed": None}) == {"seed": 3}


class TestLoadConfig:
    """Layering: defaults <- run file <- environment <- CLI."""

    def test_defaults(self):
        config = build_run_config(load_config())

        assert config.setting.treatment == TreatmentModel.T1
        assert config.n == 4000
        assert config.grid.n_x == 200 and config.grid.n_y == 512
        assert config.grid.joint_x == 13
        assert config.taus == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        assert config.backbone.kind == BackboneKind.GAUSSIAN_LINEAR
        assert config.estimators == [EstimatorKind.TABCF]
        assert config.diagnostics.permutations == 199

    def test_run_file_overrides_defaults(self, run_file):
        config = build_run_config(load_config(run_file))

        assert config.setting.treatment == TreatmentModel.LINEAR_SANITY
        assert config.n == 400
        assert config.grid.n_x == 20
        assert config.oracle.mc_draws == 500

    def test_cli_beats_environment(self, run_file, monkeypatch):
        monkeypatch.setenv("TABCF_WORKERS", "3")
        monkeypatch.setenv("TABCF_OUTPUT_DIR", "/tmp/from-env")

        raw = load_config(run_file, {"workers": 5})
        config = build_run_config(raw)

        assert config.workers == 5
        assert config.output_dir == "/tmp/from-env"

    def test_bad_worker_count(self, monkeypatch):
        monkeypatch.setenv("TABCF_WORKERS", "many")
        with pytest.raises(ConfigurationError):
            load_config()

    def test_log_level_from_environment(self, monkeypatch):
        monkeypatch.setenv("TABCF_LOG_LEVEL", "DEBUG")
        assert load_config()["logging"]["level"] == "DEBUG"

    def test_missing_run_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.yaml")

    def test_non_mapping_run_file(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigurationError):
            load_config(path)

    def test_json_run_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{"n": 321, "seed": 9}')

        config = build_run_config(load_config(path))
        assert config.n == 321 and config.seed == 9

    def test_csv_run_file_drops_default_setting(self, tmp_path):
        path = tmp_path / "csv.yaml"
        path.write_text(
            "csv_path: data.csv\n"
            "roles:\n  instrument: z\n  treatment: x\n  outcomes: [y]\n  covariates: [w1]\n"
        )
        config = build_run_config(load_config(path))

        assert config.setting is None
        assert config.roles.covariates == MOCK_ROLES["covariates"]


class TestBuildRunConfig:

    def test_unknown_treatment_lists_valid_names(self):
        raw = load_config(overrides={"setting": {"treatment": "T9"}})

        with pytest.raises(ConfigurationError) as exc:
            build_run_config(raw)
        assert "linear-sanity" in str(exc.value)

    def test_unknown_backbone(self):
        with pytest.raises(ConfigurationError):
            build_run_config(load_config(overrides={"backbone": {"kind": "forest"}}))

    def test_tau_outside_unit_interval(self):
        with pytest.raises(ConfigurationError):
            build_run_config(load_config(overrides={"taus": [0.5, 1.0]}))

    def test_inverted_trim_quantiles(self):
        raw = load_config(overrides={"grid": {"lower_quantile": 0.9, "upper_quantile": 0.1}})
        with pytest.raises(ConfigurationError):
            build_run_config(raw)

    def test_single_fold_rejected(self):
        with pytest.raises(ConfigurationError):
            build_run_config(load_config(overrides={"cross_fit_folds": 1}))

    def test_csv_without_roles(self):
        raw = load_config(overrides={"csv_path": "data.csv"})
        raw["setting"] = None

        with pytest.raises(RoleError):
            build_run_config(raw)

    def test_runtime_keys_are_stripped(self):
        config = build_run_config(load_config())
        assert not hasattr(config, "logging")

    def test_benchmark_settings_include_sweep(self):
        raw = load_config(overrides={"sweep": [{"treatment": "T2", "outcome": "O3"}]})
        settings = build_run_config(raw).benchmark_settings()

        assert [s.name for s in settings] == ["T1xO2", "T2xO3"]

    def test_seeds_per_replication(self):
        config = build_run_config(load_config(overrides={"seed": 10, "replications": 3}))
        assert config.seeds() == [10, 11, 12]


class TestValidators:

    def test_validate_taus(self):
        assert Validators.validate_taus([0.1, 0.5]) == (True, None)
        assert not Validators.validate_taus([])[0]
        assert not Validators.validate_taus([0.5, 0.5])[0]
        assert not Validators.validate_taus([0.0])[0]

    def test_validate_columns(self):
        ok, message = Validators.validate_columns(["z", "x", "q"], ["z", "x", "y"])
        assert not ok
        assert "q" in message

    def test_validate_choice(self):
        assert Validators.validate_choice("T1", TreatmentModel, "treatment") == (True, None)
        ok, message = Validators.validate_choice("T7", TreatmentModel, "treatment")
        assert not ok and "weak-T2" in message

    def test_output_dir_under_new_folders(self, tmp_path):
        assert Validators.validate_output_dir(str(tmp_path / "a" / "b"))[0]

    def test_output_dir_is_a_file(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert not Validators.validate_output_dir(str(blocker / "run"))[0]

    @pytest.mark.skipif(os.name == "nt" or os.geteuid() == 0, reason="permission bits are not enforced")
    def test_output_dir_not_writable(self, tmp_path):
        locked = tmp_path / "locked"
        locked.mkdir()
        locked.chmod(0o500)
        try:
            assert not Validators.validate_output_dir(str(locked / "run"))[0]
        finally:
            locked.chmod(0o700)

    def test_require_raises_given_error(self):
        with pytest.raises(OutputError):
            Validators.require((False, "nope"), OutputError)
        Validators.require((True, None))
