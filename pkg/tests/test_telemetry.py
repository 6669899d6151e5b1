"""Tests for src/telemetry.py."""

import src.telemetry as telemetry


class TestTelemetry:
    """Test telemetry setup."""

    def test_noop_mode_initializes_once(self, monkeypatch):
        monkeypatch.setattr(telemetry, "_initialized", False)
        telemetry.setup_telemetry("")
        assert telemetry._initialized is True
        telemetry.setup_telemetry("console")
        assert telemetry._initialized is True

    def test_tracer_records_spans(self):
        tracer = telemetry.get_tracer()
        with tracer.start_as_current_span("qqlab.test") as span:
            span.set_attribute("qqlab.n", 16)
        assert telemetry.get_tracer() is tracer
