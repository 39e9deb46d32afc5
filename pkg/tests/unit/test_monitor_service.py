"""
Unit tests for stage timing and telemetry setup.
"""

import logging

import pytest

from services.monitor_service import MonitorService, configure_telemetry


class TestMonitorService:

    def test_stage_records_time(self):
        monitor = MonitorService({"command": "fit"})
        with monitor.stage("U1"):
            pass
        with monitor.stage("U1"):
            pass

        assert list(monitor.timings) == ["U1"]
        assert monitor.timings["U1"] >= 0.0

    def test_stage_reraises_and_still_times(self):
        monitor = MonitorService()
        with pytest.raises(RuntimeError):
            with monitor.stage("U2"):
                raise RuntimeError("boom")

        assert "U2" in monitor.timings

    def test_replication_logging(self, caplog):
        monitor = MonitorService({"command": "benchmark"})
        with caplog.at_level(logging.INFO, logger="services.monitor_service"):
            monitor.log_replication(0, 7, True)
            monitor.log_replication(1, 8, False, "[U1] DegenerateTargetError: constant")

        assert "seed 7" in caplog.text
        assert "DegenerateTargetError" in caplog.text


class TestConfigureTelemetry:

    def test_disabled_without_connection_string(self):
        assert configure_telemetry(None) is False
        assert configure_telemetry("") is False
