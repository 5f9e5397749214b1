"""Tests for run-description parsing, serialization and the lzs command line."""

import math

import pytest
from click.testing import CliRunner

from lzstudio.errors import ConfigError, ParameterValidationError
from lzstudio.main import main
from lzstudio.models.config import AxisSpec
from lzstudio.models.config_manager import parse_config, serialize_config, serialize_config_inline
from lzstudio.services.run_service import RunService, apply_overrides
from lzstudio.utils.output_utils import metadata_path, read_metadata, read_table

BASELINE = """\
drive:
  f_dc: {start: 3.5, stop: 4.5, num: 5, units: f_omega}
  f_ac: 0.003
baths:
  - tag: flux
couplings:
  - tag: flux
    kind: z
run:
  mode: finite_time
  times: [1000, inf]
"""


def tiny_config(output, mode="isolated"):
    return f"""\
device:
  model: tls
  tls: {{delta: 3.33e-4, i_p: 0.721, lambda_f: 4.53}}
drive:
  omega0: 0.003
  f_dc: {{values: [3.5, 4.0], units: f_omega}}
  f_ac: 0.003
baths:
  - tag: flux
    gamma: 0.001
couplings:
  - tag: flux
    kind: z
run:
  mode: {mode}
  output: "{output}"
  threads: 2
  n_periods: 20
solver:
  n_steps: 1024
  n_grid: 256
  p_plus_samples: 16
logging:
  level: WARNING
  file: null
"""


class TestParseConfig:
    def test_baseline_defaults(self):
        config = parse_config(BASELINE)
        assert config.drive.omega0 == 0.003
        assert config.drive.f_dc == AxisSpec(start=3.5, stop=4.5, num=5, units="f_omega")
        assert config.baths[0].temperature == 0.0014
        assert config.couplings[0].strength is None
        assert config.run.times == (1000.0, math.inf)
        assert config.device.tls is None
        assert "drive.omega0" in config.defaults_applied
        assert "baths[0].gamma" in config.defaults_applied
        assert "run.times" not in config.defaults_applied

    def test_axis_resolution(self):
        axis = parse_config(BASELINE).drive.f_dc
        assert axis.resolve(2.0) == pytest.approx((7.0, 7.5, 8.0, 8.5, 9.0))

    def test_empty_document_lists_everything_missing(self):
        with pytest.raises(ConfigError) as info:
            parse_config("")
        messages = [issue.message for issue in info.value.issues]
        for section in ("drive", "baths", "couplings", "run"):
            assert f"missing required section '{section}'" in messages
        assert "missing required key drive.f_dc" in messages
        assert "missing required key run.mode" in messages

    def test_negative_gamma_reports_position(self):
        text = BASELINE.replace("  - tag: flux\ncouplings", "  - tag: flux\n    gamma: -0.001\ncouplings")
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        issue = info.value.issues[0]
        assert issue.message == "gamma must be >= 0, got -0.001"
        assert issue.line == 6

    def test_unknown_key_reports_position(self):
        text = BASELINE + "  colour: blue\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        issue = info.value.issues[0]
        assert "unknown key 'colour'" in issue.message
        assert (issue.line, issue.column) == (12, 3)

    def test_undeclared_bath_tag(self):
        text = BASELINE.replace("    kind: z", "    kind: z\n  - tag: charge\n    kind: y")
        with pytest.raises(ConfigError, match="undeclared bath"):
            parse_config(text)

    def test_all_issues_collected(self):
        text = BASELINE.replace("num: 5", "num: 0").replace("mode: finite_time", "mode: sideways")
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert len(info.value.issues) == 2

    def test_command_line_mode_replaces_configured(self):
        assert parse_config(BASELINE, mode="timescales").run.mode == "timescales"

    def test_yaml_syntax_error(self):
        with pytest.raises(ConfigError, match="YAML syntax error"):
            parse_config("drive: [unclosed\n")


class TestSerialization:
    def test_block_round_trip(self):
        config = parse_config(BASELINE)
        assert parse_config(serialize_config(config)) == config

    def test_inline_round_trip(self, tmp_path):
        config = parse_config(tiny_config(tmp_path / "out.csv"))
        inline = serialize_config_inline(config)
        assert "\n" not in inline
        assert parse_config(inline) == config

    def test_overrides(self, tmp_path):
        config = parse_config(tiny_config(tmp_path / "out.csv"))
        changed = apply_overrides(config, output="elsewhere.csv", threads=1)
        assert (changed.run.output, changed.run.threads) == ("elsewhere.csv", 1)
        assert apply_overrides(config) is config


class TestRunService:
    def test_failed_cells_mark_run_partial(self, tmp_path):
        output = tmp_path / "silent.csv"
        text = tiny_config(output, mode="steady_state").replace("gamma: 0.001", "gamma: 0.0")
        config = parse_config(text)
        RunService(config).run()
        entries = read_metadata(metadata_path(str(output)))
        assert entries["status"] == "partial"
        frame = read_table(output)
        assert set(frame["flag"]) == {"error:NonUniqueSteadyStateError"}

    def test_mode_validation_failure_is_recorded(self, tmp_path):
        output = tmp_path / "multi.csv"
        text = tiny_config(output, mode="rwa_compare").replace("model: tls", "model: multilevel") \
            .replace("kind: z", "kind: flux")
        config = parse_config(text)
        with pytest.raises(ParameterValidationError):
            RunService(config).run()
        entries = read_metadata(metadata_path(str(output)))
        assert entries["status"] == "failed"
        assert entries["error"].startswith("ParameterValidationError")

    @pytest.mark.parametrize("mode", ["isolated", "finite_time"])
    def test_magnus_order_is_recorded(self, tmp_path, mode):
        output = tmp_path / "magnus.csv"
        text = tiny_config(output, mode=mode).replace("  p_plus_samples: 16\n", "  p_plus_samples: 16\n  magnus_order: 2\n")
        RunService(parse_config(text)).run()
        entries = read_metadata(metadata_path(str(output)))
        assert entries["magnus_order"] == "2"


class TestCommandLine:
    def test_isolated_run_writes_values_and_metadata(self, tmp_path):
        output = tmp_path / "isolated.csv"
        config_path = tmp_path / "run.yaml"
        config_path.write_text(tiny_config(output))

        result = CliRunner().invoke(main, ["isolated", "--config", str(config_path)])
        assert result.exit_code == 0, result.output
        frame = read_table(output)
        assert list(frame.columns) == ["f_dc", "f_ac", "p_plus_avg"]
        assert len(frame) == 2
        entries = read_metadata(metadata_path(str(output)))
        assert entries["status"] == "complete"
        assert entries["mode"] == "isolated"
        assert "config" in entries

    def test_rerun_from_metadata_reproduces_values(self, tmp_path):
        output = tmp_path / "isolated.csv"
        config_path = tmp_path / "run.yaml"
        config_path.write_text(tiny_config(output))
        runner = CliRunner()
        assert runner.invoke(main, ["isolated", "--config", str(config_path)]).exit_code == 0
        first = output.read_bytes()

        meta = metadata_path(str(output))
        result = runner.invoke(main, ["isolated", "--config", str(meta), "--threads", "1"])
        assert result.exit_code == 0, result.output
        assert output.read_bytes() == first

    def test_output_override(self, tmp_path):
        config_path = tmp_path / "run.yaml"
        config_path.write_text(tiny_config(tmp_path / "ignored.csv"))
        target = tmp_path / "nested" / "values.csv"
        result = CliRunner().invoke(main, ["isolated", "--config", str(config_path), "--output", str(target)])
        assert result.exit_code == 0, result.output
        assert target.exists()
        assert not (tmp_path / "ignored.csv").exists()

    def test_flag_takes_no_value(self, tmp_path):
        config_path = tmp_path / "run.yaml"
        config_path.write_text(tiny_config(tmp_path / "out.csv"))
        result = CliRunner().invoke(main, ["isolated", "--config", str(config_path), "--seedless=1"])
        assert result.exit_code == 2

    def test_invalid_configuration(self, tmp_path):
        config_path = tmp_path / "run.yaml"
        config_path.write_text(tiny_config(tmp_path / "out.csv").replace("gamma: 0.001", "gamma: -0.001"))
        result = CliRunner().invoke(main, ["isolated", "--config", str(config_path)])
        assert result.exit_code == 2
        assert "gamma must be >= 0, got -0.001" in result.output

    def test_missing_configuration_file(self, tmp_path):
        result = CliRunner().invoke(main, ["isolated", "--config", str(tmp_path / "absent.yaml")])
        assert result.exit_code == 2

    def test_unknown_mode(self):
        result = CliRunner().invoke(main, ["wander"])
        assert result.exit_code == 2


class TestRunnerRegistry:
    def test_modes_and_stats(self, tmp_path):
        from lzstudio.services.runners import runner_registry

        assert set(runner_registry.list_modes()) == {"finite_time", "steady_state", "timescales", "rwa_compare", "isolated"}
        with pytest.raises(ParameterValidationError):
            runner_registry.get_runner("wander")

        before = runner_registry.get_runner("isolated").get_stats()["total_runs"]
        RunService(parse_config(tiny_config(tmp_path / "stats.csv"))).run()
        stats = runner_registry.get_all_stats()["isolated"]
        assert stats["total_runs"] == before + 1
        assert stats["rows_written"] >= 2
        assert stats["mode"] == "isolated"
