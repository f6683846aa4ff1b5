"""Command line behavior: argument handling, report output, exit codes,
event-log and figure side outputs."""

import json
from pathlib import Path

import pytest

from braceletnet.attacks import ScanSpec, run_port_scan
from braceletnet.cli import main
from braceletnet.gateway import default_gateway

FIXTURES = Path(__file__).parent.parent / "src" / "braceletnet" / "fixtures"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestScanCommand:
    def test_default_scan_matches_library_call(self, capsys):
        code, out, err = run_cli(capsys, "scan", "--detect-services")
        assert code == 0 and err == ""
        direct = run_port_scan(default_gateway(), ScanSpec(detect_services=True))
        assert out == direct.to_text()

    def test_single_port_shorthand(self, capsys):
        code, out, _ = run_cli(capsys, "scan", "--ports", "22", "--detect-services")
        assert code == 0
        assert "range=22-22" in out and "open|22|sshd|SSH-2.0-sim" in out

    def test_bad_port_range_is_a_clean_error(self, capsys):
        code, out, err = run_cli(capsys, "scan", "--ports", "晦-10")
        assert code == 2 and out == "" and err.startswith("error:")

    def test_inverted_port_range_is_a_clean_error(self, capsys):
        code, _, err = run_cli(capsys, "scan", "--ports", "50-10")
        assert code == 2 and "error:" in err

    def test_json_report(self, capsys):
        code, out, _ = run_cli(capsys, "scan", "--ports", "1-60",
                               "--detect-services", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["open"] == [[22, "sshd", "SSH-2.0-sim"]]
        assert payload["range"] == [1, 60]
        assert len(payload["closed"]) + len(payload["filtered"]) == 59

    def test_source_override_lands_in_header(self, capsys):
        code, out, _ = run_cli(capsys, "scan", "--ports", "1-10",
                               "--source", "198.51.100.77")
        assert code == 0 and "source=198.51.100.77" in out

    def test_config_selects_the_defended_host(self, capsys):
        code, out, _ = run_cli(capsys, "scan", "--ports", "20-25",
                               "--config", str(FIXTURES / "trusted_ip.conf"))
        assert code == 0 and "filtered|22" in out

    def test_unknown_speed_rejected_by_argparse(self, capsys):
        with pytest.raises(SystemExit):
            main(["scan", "--speed", "T9"])

    def test_missing_config_file_is_a_clean_error(self, capsys):
        code, _, err = run_cli(capsys, "scan", "--config", "/nope/missing.conf")
        assert code == 2 and "error:" in err


class TestBruteCommand:
    def base_args(self, *extra):
        return ["brute",
                "--users", str(FIXTURES / "users.txt"),
                "--passwords", str(FIXTURES / "passwords.txt"),
                *extra]

    def test_baseline_finds_the_credential(self, capsys):
        code, out, _ = run_cli(capsys, *self.base_args(
            "--config", str(FIXTURES / "open.conf"), "--stop-first"))
        assert code == 0
        assert "found|admin|Sup3rS3cret!9|attempt=20" in out
        assert "summary|attempts=20|delivered=20|blocked=0|refused=0|found=1" in out

    def test_default_config_bans_the_sweep(self, capsys):
        code, out, _ = run_cli(capsys, *self.base_args())
        assert code == 0
        assert "banned|jail=sshd|ip=203.0.113.66|at_attempt=5" in out
        assert "found=0" in out

    def test_json_summary(self, capsys):
        code, out, _ = run_cli(capsys, *self.base_args("--json"))
        payload = json.loads(out)
        assert code == 0
        assert payload["banned_at"] == 5
        assert payload["summary"] == {
            "attempts": 64, "delivered": 5, "blocked": 59, "refused": 0, "found": 0}

    def test_verbose_attempt_lines(self, capsys):
        code, out, _ = run_cli(capsys, *self.base_args(
            "--config", str(FIXTURES / "open.conf"), "--stop-first", "--verbose"))
        assert code == 0
        assert out.count("attempt|") == 20

    def test_missing_wordlist_is_a_clean_error(self, capsys):
        code, _, err = run_cli(capsys, "brute", "--users", "/nope.txt",
                               "--passwords", "/nope.txt")
        assert code == 2 and "error:" in err

    def test_empty_wordlist_is_a_clean_error(self, capsys, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("\n")
        code, _, err = run_cli(capsys, "brute", "--users", str(empty),
                               "--passwords", str(FIXTURES / "passwords.txt"))
        assert code == 2 and "wordlist is empty" in err


class TestScenarioCommand:
    def test_scenario_report_on_stdout(self, capsys):
        code, out, _ = run_cli(
            capsys, "scenario", str(FIXTURES / "scenarios" / "scan_t4_default.scn"))
        assert code == 0
        assert out.startswith("step|1|scan\n")
        assert "summary|open=1|closed=49|filtered=950" in out

    def test_empty_script_prints_nothing(self, capsys, tmp_path):
        script = tmp_path / "empty.scn"
        script.write_text("# nothing here\n")
        code, out, _ = run_cli(capsys, "scenario", str(script))
        assert code == 0 and out == ""

    def test_missing_script_is_a_clean_error(self, capsys):
        code, _, err = run_cli(capsys, "scenario", "/nope/missing.scn")
        assert code == 2 and "error:" in err

    def test_script_error_reports_line(self, capsys, tmp_path):
        script = tmp_path / "bad.scn"
        script.write_text("warp|speed=9\n")
        code, _, err = run_cli(capsys, "scenario", str(script))
        assert code == 2 and "line 1" in err


class TestSideOutputs:
    def test_log_file_captures_gateway_events(self, capsys, tmp_path):
        log = tmp_path / "events.log"
        code, _, _ = run_cli(capsys, "scan", "--ports", "1-60", "--log", str(log))
        assert code == 0
        lines = log.read_text().splitlines()
        assert lines[0] == "0|gateway|init|rules=1 jails=1 services=2 devices=1"
        assert any("|detector|block|" in l for l in lines)

    def test_figures_written_for_scan(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "scan", "--ports", "1-60",
                             "--figures", str(tmp_path / "figs"))
        assert code == 0
        names = sorted(p.name for p in (tmp_path / "figs").iterdir())
        assert names == ["gateway_events.png", "scan_ports.png"]
        assert all((tmp_path / "figs" / n).stat().st_size > 1000 for n in names)

    def test_figures_written_for_brute(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "brute",
            "--users", str(FIXTURES / "users.txt"),
            "--passwords", str(FIXTURES / "passwords.txt"),
            "--figures", str(tmp_path / "figs"))
        assert code == 0
        names = sorted(p.name for p in (tmp_path / "figs").iterdir())
        assert names == ["brute_attempts.png", "gateway_events.png"]

    def test_scenario_with_telemetry_renders_vitals_figure(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "scenario",
            str(FIXTURES / "scenarios" / "attack_and_defend.scn"),
            "--figures", str(tmp_path / "figs"))
        assert code == 0
        names = {p.name for p in (tmp_path / "figs").iterdir()}
        assert names == {"gateway_events.png", "vitals_series.png"}

    def test_figures_never_change_stdout(self, capsys, tmp_path):
        _, plain, _ = run_cli(capsys, "scan", "--ports", "1-60")
        _, with_figs, _ = run_cli(capsys, "scan", "--ports", "1-60",
                                  "--figures", str(tmp_path / "figs"))
        assert plain == with_figs

    def test_log_matches_between_runs(self, capsys, tmp_path):
        first, second = tmp_path / "a.log", tmp_path / "b.log"
        run_cli(capsys, "scan", "--ports", "1-80", "--log", str(first))
        run_cli(capsys, "scan", "--ports", "1-80", "--log", str(second))
        assert first.read_bytes() == second.read_bytes()
