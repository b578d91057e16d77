"""
Integration tests for the command-line entry point
Runs main() end to end and reads the emitted reports
"""

import json

import pytest

from src.main import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, EXIT_USAGE, main
from src.verify.report import CheckReport

NU_ONE_RHO = "0.7071067811865476"


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    """Keep any nicd_lab.json in the working directory out of the run"""
    monkeypatch.chdir(tmp_path)


def run_json(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


@pytest.mark.integration
class TestEvalCommand:
    """Integration tests for eval"""

    def test_path_gaps(self, capsys):
        """Test a dictator on a gapped path matches its product form"""
        code, report = run_json(capsys, ["eval", "--path-gaps", "1,2", "--rho", "0.5", "--n", "2"])
        assert code == EXIT_OK
        assert report["success"] == pytest.approx(0.75 * 0.625)
        assert report["bound"] == pytest.approx(report["success"])
        assert report["protocol"] == {"0": "dict:1", "1": "dict:1", "3": "dict:1"}

    def test_instance_file(self, capsys, instance_file):
        """Test an instance file with its protocol"""
        code, report = run_json(capsys, ["eval", "--input", str(instance_file), "--brute-force"])
        assert code == EXIT_OK
        assert report["success"] == pytest.approx(0.75)
        assert report["brute_force"] == pytest.approx(0.75)
        assert "path dictator value" in report["note"]

    def test_protocol_override(self, capsys, instance_file):
        """Test --protocol replaces the file protocol"""
        code, report = run_json(capsys, ["eval", "--input", str(instance_file), "--protocol", "parity:1,2"])
        assert code == EXIT_OK
        assert report["success"] == pytest.approx(0.5 + 0.5 * 0.25)

    def test_monotonize(self, capsys, instance_file):
        """Test the monotone-shifted protocol is reported"""
        code, report = run_json(capsys, ["eval", "--input", str(instance_file), "--protocol", "-dict:2",
                                         "--monotonize"])
        assert code == EXIT_OK
        assert report["monotone"]["success"] >= report["success"] - 1e-12

    def test_csv(self, capsys, instance_file):
        """Test the CSV header and one row"""
        code = main(["eval", "--input", str(instance_file), "--format", "csv"])
        lines = capsys.readouterr().out.strip().splitlines()
        assert code == EXIT_OK
        assert lines[0] == "instance,protocol,success,bound,note"
        assert len(lines) == 2
        assert ",0.75," in lines[1]

    def test_output_file(self, capsys, instance_file, tmp_path):
        """Test --output writes the report to a file"""
        target = tmp_path / 'report.json'
        assert main(["eval", "--input", str(instance_file), "--output", str(target)]) == EXIT_OK
        assert capsys.readouterr().out == ""
        assert json.loads(target.read_text())["success"] == pytest.approx(0.75)

    def test_settings_format(self, capsys, instance_file, tmp_path):
        """Test the settings file picks the output format"""
        settings = tmp_path / 'lab.json'
        settings.write_text(json.dumps({"output_format": "csv"}))
        assert main(["eval", "--input", str(instance_file), "--settings", str(settings)]) == EXIT_OK
        assert capsys.readouterr().out.startswith("instance,protocol")

    def test_unbalanced_rejected(self, capsys, instance_file):
        """Test an unbalanced protocol is an error without the flag"""
        assert main(["eval", "--input", str(instance_file), "--protocol", "tt:1110"]) == EXIT_ERROR
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "UnbalancedFunction"

    def test_unbalanced_allowed(self, capsys, instance_file):
        """Test the flag lets an unbalanced protocol through and notes it"""
        code, report = run_json(capsys, ["eval", "--input", str(instance_file), "--protocol", "tt:1110",
                                         "--allow-unbalanced"])
        assert code == EXIT_OK
        assert "unbalanced override" in report["note"]


@pytest.mark.integration
class TestSearchCommands:
    """Integration tests for search and counterexample"""

    def test_path_search(self, capsys):
        """Test the best simple protocol on a two-edge path"""
        code, report = run_json(capsys, ["search", "--path", "2", "--rho", "0.5", "--n", "2"])
        assert code == EXIT_OK
        assert report["success"] == pytest.approx(0.5625)
        assert report["nondictator_ratio"]["ratio"] < 1.0

    def test_star_search(self, capsys):
        """Test a star search with the exhaustive pass"""
        code, report = run_json(capsys, ["search", "--star", "2", "--rho", "0.5", "--n", "2", "--exhaustive"])
        assert code == EXIT_OK
        assert report["exhaustive"]["value"] == pytest.approx(report["success"])

    def test_named_family(self, capsys):
        """Test a named family"""
        code, report = run_json(capsys, ["search", "--path", "1", "--rho", "0.5", "--n", "3",
                                         "--named", "maj:3,dict:2"])
        assert code == EXIT_OK
        assert report["family"] == "named"
        assert report["best_function"] == "dict:2"

    def test_missing_rho(self, capsys):
        """Test a generated instance needs rho and n"""
        assert main(["search", "--path", "2"]) == EXIT_ERROR
        assert "PreconditionError" in capsys.readouterr().err

    def test_counterexample_small_grid(self, capsys):
        """Test the scan report on a small grid"""
        code, report = run_json(capsys, ["counterexample", "--k1-max", "2", "--k2-max", "2",
                                         "--family", "monotone"])
        assert code == EXIT_OK
        assert report["k1_range"] == [0, 2]
        assert report["hit_count"] == len(report["hits"])

    def test_counterexample_needs_four_bits(self, capsys):
        """Test n < 4 is refused"""
        assert main(["counterexample", "--n", "3"]) == EXIT_ERROR


@pytest.mark.integration
class TestAnalyticCommands:
    """Integration tests for star-asym, markov-bound and walk"""

    def test_star_asym(self, capsys):
        """Test the three-leaf limit at nu=1"""
        code, report = run_json(capsys, ["star-asym", "--rho", NU_ONE_RHO, "--k", "3"])
        assert code == EXIT_OK
        assert report["nu"] == pytest.approx(1.0)
        assert report["rows"][0]["limit_prob"] == pytest.approx(0.5, rel=1e-8)
        assert report["slope"] is None

    def test_star_asym_grid_csv(self, capsys):
        """Test a geometric grid in CSV with a fitted slope"""
        code = main(["star-asym", "--rho", NU_ONE_RHO, "--k-grid", "100:10000:12", "--format", "csv"])
        lines = capsys.readouterr().out.strip().splitlines()
        assert code == EXIT_OK
        assert lines[0] == "k,rho,nu,limit_prob,lower_estimate,slope"
        assert len(lines) == 13

    def test_star_asym_rho_range(self, capsys):
        """Test rho=1 is refused"""
        assert main(["star-asym", "--rho", "1.0", "--k", "3"]) == EXIT_ERROR

    def test_markov_bound(self, capsys, chain_file):
        """Test the two-state chain meets the bound"""
        code, report = run_json(capsys, ["markov-bound", "--chain", str(chain_file), "--set", "0", "--k", "1"])
        assert code == EXIT_OK
        assert report["stay"]["exact"] == pytest.approx(0.375)
        assert report["stay"]["bound"] == pytest.approx(0.375)
        assert report["projection"]["norm"] == pytest.approx(0.75)
        assert report["equality"]["holds"]

    def test_markov_bound_per_step_sets(self, capsys, chain_file):
        """Test one set per time step"""
        code, report = run_json(capsys, ["markov-bound", "--chain", str(chain_file),
                                         "--set", "0", "--set", "0,1", "--set", "0"])
        assert code == EXIT_OK
        assert report["stay"]["steps"] == 2

    def test_markov_single_set_needs_k(self, capsys, chain_file):
        """Test a single set without --k"""
        assert main(["markov-bound", "--chain", str(chain_file), "--set", "0"]) == EXIT_ERROR

    def test_walk(self, capsys):
        """Test the walk exponent and the exact opposed-ball probability"""
        code, report = run_json(capsys, ["walk", "--sigma", "0.25", "--tau", "0.5", "--n", "8", "--exact"])
        assert code == EXIT_OK
        assert report["exponent"] > 4.0
        assert 0.0 <= report["exact_opposed_balls"] <= 0.25

    def test_walk_bad_tau(self, capsys):
        """Test tau=0 is a domain error with a JSON message"""
        assert main(["walk", "--sigma", "0.5", "--tau", "0", "--n", "4"]) == EXIT_ERROR
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error["error"] == "DomainError"


@pytest.mark.integration
class TestVerifyCommand:
    """Integration tests for verify and the exit codes"""

    def test_single_check(self, capsys):
        """Test one check passes"""
        code, report = run_json(capsys, ["verify", "check_forward_bb", "--trials", "50"])
        assert code == EXIT_OK
        assert report["name"] == "check_forward_bb"
        assert report["trials"] == 50
        assert report["passed"]

    def test_failing_check(self, capsys, mocker):
        """Test a failing check exits with 1"""
        failing = CheckReport("check_forward_bb", 1, -0.5, {"case": 1}, False)
        mocker.patch("src.cli.commands.run_check", return_value=failing)
        code, report = run_json(capsys, ["verify", "check_forward_bb"])
        assert code == EXIT_CHECK_FAILED
        assert not report["passed"]

    def test_tolerance_forwarded(self, capsys, mocker):
        """Test --tolerance reaches the check"""
        passing = CheckReport("check_easytosee", 1, 0.0, None, True)
        spy = mocker.patch("src.cli.commands.run_check", return_value=passing)
        main(["verify", "check_easytosee", "--tolerance", "1e-6", "--seed", "9"])
        capsys.readouterr()
        _, kwargs = spy.call_args
        assert kwargs["tolerance"] == pytest.approx(1e-6)
        assert kwargs["seed"] == 9

    def test_unknown_check(self, capsys):
        """Test an unknown check name is a usage error"""
        assert main(["verify", "check_nothing"]) == EXIT_USAGE

    def test_help(self, capsys):
        """Test --help exits cleanly"""
        assert main(["--help"]) == EXIT_OK
        assert "nicd-lab" in capsys.readouterr().out

    def test_star_asym_help_names_corrected_slope(self, capsys):
        """Test the star-asym help points the decay band at corrected_slope"""
        assert main(["star-asym", "--help"]) == EXIT_OK
        assert "corrected_slope" in capsys.readouterr().out

    def test_missing_command(self, capsys):
        """Test no command is a usage error"""
        assert main([]) == EXIT_USAGE

    def test_bad_seed(self, capsys):
        """Test a negative seed is refused"""
        assert main(["verify", "check_easytosee", "--seed", "-1"]) == EXIT_ERROR
