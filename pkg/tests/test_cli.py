import io
import json

import pytest

from perpsim.appendix import appendix_scenarios, config_text, reference_rows, write_reference
from perpsim.cli import NUMERIC_EXIT, main
from perpsim.log import configure, get_logger
from perpsim.parser import parse_config

WALK = "model=normal\nmu0=1\nsigma=1\n"


@pytest.fixture(autouse=True)
def _reset_logging():
    yield
    configure(False)


class TestRun:
    def test_writes_csv_and_metadata(self, write_config, tmp_path):
        path = write_config(WALK + "estimator=si\ndeltas=0.1,0.01\nreps=40\nseed=2\n---\n" + WALK + "estimator=crude\ndelta=0.3\nreps=40\n")
        out = tmp_path / "rows.csv"
        assert main(["run", "--config", str(path), "--out", str(out), "--no-timing"]) == 0

        lines = out.read_text().splitlines()
        assert len(lines) == 4
        assert all(line.endswith(",NA") for line in lines[1:])
        assert len(json.loads((tmp_path / "rows.csv.meta.json").read_text())) == 3

    def test_stdout(self, write_config, capsys):
        path = write_config(WALK + "estimator=crude\ndelta=0.3\nreps=20\n")
        assert main(["run", "--config", str(path)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("scenario,model,estimator,delta,reps")
        assert len(out) == 2

    def test_bad_config(self, write_config):
        assert main(["run", "--config", str(write_config("delta=2\nreps=1\n"))]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "missing.conf")]) == 2

    def test_lyapunov_refusal(self, write_config):
        path = write_config(WALK + "estimator=sd\ndelta=0.7\nreps=10\n")
        assert main(["run", "--config", str(path)]) == 3

    def test_positive_drift(self, write_config):
        path = write_config("model=custom\nkernel=1\nincrements=normal:1:1\nrewards=const:1\nestimator=si\ndelta=0.1\nreps=10\n")
        assert main(["run", "--config", str(path)]) == NUMERIC_EXIT

    def test_unwritable_output(self, write_config, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        path = write_config(WALK + "estimator=crude\ndelta=0.3\nreps=5\n")
        assert main(["run", "--config", str(path), "--out", str(blocker / "rows.csv")]) == NUMERIC_EXIT


class TestOtherCommands:
    def test_theta_star(self, write_config, capsys):
        path = write_config(WALK + "delta=0.1\nreps=1\n")
        assert main(["theta-star", "--config", str(path)]) == 0
        out = capsys.readouterr().out
        values = dict(line.split(" = ", 1) for line in out.splitlines() if " = " in line)
        assert float(values["theta_star"]) == pytest.approx(2.0, abs=1e-8)
        assert float(values["mu"]) == pytest.approx(1.0, abs=1e-5)
        assert abs(float(values["psi(theta_star)"])) < 1e-8
        assert "K_theta_star =" in out

    def test_verify_lyapunov_needs_samples(self, write_config):
        path = write_config(WALK + "estimator=sd\ndelta=0.001\nforce_sd=true\nreps=1\n")
        assert main(["verify-lyapunov", "--config", str(path), "--n", "1000"]) == 2

    def test_slope_needs_deltas(self, write_config):
        path = write_config(WALK + "delta=0.01\nreps=10\n")
        assert main(["slope", "--config", str(path)]) == 2

    def test_reps_and_budget_exclusive(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["reproduce-appendix", "--out", str(tmp_path), "--reps", "1", "--budget-ms", "1"])


class TestAppendix:
    def test_grid(self):
        scenarios = appendix_scenarios(reps=10)
        assert len(scenarios) == 75
        assert len({sc.label for sc in scenarios}) == 75
        assert all(sc.force_sd for sc in scenarios if sc.estimator == "sd")
        assert {sc.step_cap for sc in scenarios if sc.estimator == "crude"} == {1_000, 100_000}

    def test_config_round_trip(self):
        scenarios = appendix_scenarios(budget_ms=500, seed=4)
        assert parse_config(config_text(scenarios)) == scenarios

    def test_reference(self, tmp_path):
        rows = reference_rows()
        assert len(rows) == 75
        assert rows[0] == ("arch1_1_0.75_crude_0.1", "arch1", "crude", 0.1, 6.65e-2, 3.75)

        lines = write_reference(tmp_path / "ref.csv").read_text().splitlines()
        assert len(lines) == 76
        assert lines[-1] == "two_state_sd_0.002,two_state,sd,0.002,2.35e-05,44.4"
        assert "two_state_crude_0.005,two_state,crude,0.005,0.0,NA" in lines


def test_log_format():
    stream = io.StringIO()
    configure(False, stream=stream)
    log = get_logger("cli_test")
    log.info("hidden")
    log.warning("shown %d", 1)
    assert stream.getvalue() == "[warning] shown 1\n"
