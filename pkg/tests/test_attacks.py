"""Attack harness tests: scan verdict mapping, credential sweep outcomes
against each defensive configuration, and scenario script execution."""

import random
from pathlib import Path

import pytest

from braceletnet.attacks import (
    ATTEMPT_INTERVAL_MS,
    AttackError,
    BruteSpec,
    PortState,
    ScanSpec,
    ScenarioError,
    SPEED_DELAYS,
    compress_ports,
    run_brute_force,
    run_port_scan,
    run_scenario,
    run_scenario_file,
)
from braceletnet.gateway import default_gateway, from_config_file, load_config
from braceletnet.scandet import SpeedClass

FIXTURES = Path(__file__).parent.parent / "src" / "braceletnet" / "fixtures"
SCENARIOS = FIXTURES / "scenarios"

USERS = tuple((FIXTURES / "users.txt").read_text().split())
PASSWORDS = tuple((FIXTURES / "passwords.txt").read_text().splitlines())

# The only valid pair, located from the wordlists themselves so the test
# breaks loudly if the fixtures drift.
VALID_USER, VALID_PASSWORD = "admin", "Sup3rS3cret!9"
VALID_POSITION = USERS.index(VALID_USER) * len(PASSWORDS) + PASSWORDS.index(VALID_PASSWORD) + 1


def spec(**kw):
    kw.setdefault("users", USERS)
    kw.setdefault("passwords", PASSWORDS)
    return BruteSpec(**kw)


class TestCompressPorts:
    def test_empty(self):
        assert compress_ports([]) == "-"

    def test_singleton(self):
        assert compress_ports([443]) == "443"

    def test_mixed_runs(self):
        assert compress_ports([1, 2, 3, 7, 9, 10]) == "1-3,7,9-10"

    def test_all_contiguous(self):
        assert compress_ports(list(range(51, 1001))) == "51-1000"

    def test_random_round_trip(self):
        rng = random.Random(20260826)
        for _ in range(50):
            ports = sorted(rng.sample(range(1, 400), rng.randrange(1, 60)))
            text = compress_ports(ports)
            back = []
            for chunk in text.split(","):
                if "-" in chunk:
                    a, b = chunk.split("-")
                    back.extend(range(int(a), int(b) + 1))
                else:
                    back.append(int(chunk))
            assert back == ports


class TestScan:
    def test_default_config_shape(self):
        report = run_port_scan(default_gateway(), ScanSpec(detect_services=True))
        assert report.lines == [
            "portscan|target=192.168.25.2|range=1-1000|speed=T4|source=203.0.113.66",
            "open|22|sshd|SSH-2.0-sim",
            "closed|1-21,23-50",
            "filtered|51-1000",
            "summary|open=1|closed=49|filtered=950",
        ]

    def test_without_service_detection_no_banner(self):
        report = run_port_scan(default_gateway(), ScanSpec(port_lo=20, port_hi=30))
        assert "open|22" in report.lines
        assert not any(l.startswith("open|22|") for l in report.lines)

    def test_detection_ladder_fires_at_expected_probes(self):
        gw = default_gateway()
        run_port_scan(gw, ScanSpec(detect_services=True))
        detects = [l for l in gw.logs if "|detector|detect|" in l]
        levels = [l.split("dl=")[1].split(" ")[0] for l in detects]
        ports = [l.split("ports=")[1].split(" ")[0] for l in detects]
        assert levels == ["1", "2", "3", "4", "5"]
        assert ports == ["5", "15", "50", "250", "1000"]

    def test_block_rule_lands_at_head_once(self):
        gw = default_gateway()
        run_port_scan(gw, ScanSpec())
        head = gw.filter.rules[0]
        assert str(head.match.src) == "203.0.113.66/32"
        assert sum(1 for r in gw.filter.rules
                   if r.match.src is not None and str(r.match.src) == "203.0.113.66/32") == 1

    @pytest.mark.parametrize("speed", list(SpeedClass))
    def test_detector_reports_the_speed_the_scan_was_launched_at(self, speed):
        gw = default_gateway()
        run_port_scan(gw, ScanSpec(port_lo=1, port_hi=30, speed=speed))
        detects = [l for l in gw.logs if "|detector|detect|" in l]
        assert detects, "a 30-port scan crosses the first threshold at any speed"
        assert all(f"speed={speed.value}" in l for l in detects)

    def test_slow_scan_stays_below_the_block_level(self):
        gw = default_gateway()
        report = run_port_scan(gw, ScanSpec(port_lo=1, port_hi=120, speed=SpeedClass.T1))
        # With 15 s between probes only five land inside any one window, so
        # the level never climbs and nothing gets filtered.
        assert not any(s is PortState.FILTERED for s in report.states.values())
        assert not any("|detector|block|" in l for l in gw.logs)

    def test_fast_scan_is_cut_off_at_the_block_level(self):
        gw = default_gateway()
        report = run_port_scan(gw, ScanSpec(port_lo=1, port_hi=120, speed=SpeedClass.T5))
        filtered = [p for p, s in report.states.items() if s is PortState.FILTERED]
        assert filtered == list(range(51, 121))

    def test_rejected_ports_read_as_closed(self):
        gw = load_config(
            "[filter]\npolicy|INPUT=ACCEPT|FORWARD=DROP|OUTPUT=ACCEPT\n"
            "INPUT|*|*|tcp|100-110|*|REJECT|refuse this band\n")
        report = run_port_scan(gw, ScanSpec(port_lo=95, port_hi=115))
        assert all(report.states[p] is PortState.CLOSED for p in range(100, 111))

    def test_trusted_ip_config_filters_ssh_for_strangers(self):
        gw = from_config_file(FIXTURES / "trusted_ip.conf")
        report = run_port_scan(gw, ScanSpec(port_lo=20, port_hi=25))
        assert report.states[22] is PortState.FILTERED

    def test_trusted_source_sees_ssh_open(self):
        gw = from_config_file(FIXTURES / "trusted_ip.conf")
        report = run_port_scan(gw, ScanSpec(port_lo=20, port_hi=25, source="198.51.100.10",
                                            detect_services=True))
        assert report.states[22] is PortState.OPEN

    def test_bad_port_range_rejected(self):
        with pytest.raises(AttackError):
            ScanSpec(port_lo=10, port_hi=5)
        with pytest.raises(AttackError):
            ScanSpec(port_lo=0, port_hi=5)


class TestBruteForce:
    def test_baseline_finds_credential_at_computed_position(self):
        gw = from_config_file(FIXTURES / "open.conf")
        report = run_brute_force(gw, spec(stop_first=True))
        assert report.found == [(VALID_USER, VALID_PASSWORD, VALID_POSITION)]
        assert VALID_POSITION == 20
        assert report.attempts == 20 and report.delivered == 20
        assert f"found|admin|Sup3rS3cret!9|attempt=20" in report.lines

    def test_full_sweep_reports_all_attempts(self):
        gw = from_config_file(FIXTURES / "open.conf")
        report = run_brute_force(gw, spec(stop_first=False))
        assert report.attempts == len(USERS) * len(PASSWORDS) == 64
        assert report.found == [(VALID_USER, VALID_PASSWORD, VALID_POSITION)]

    def test_auth_jail_bans_at_maxretry_and_hides_the_credential(self):
        gw = default_gateway()
        report = run_brute_force(gw, spec(stop_first=False))
        assert report.banned_at == 5
        assert report.found == []
        assert report.delivered == 5 and report.blocked == 59
        assert "banned|jail=sshd|ip=203.0.113.66|at_attempt=5" in report.lines

    def test_trusted_ip_blocks_every_attempt(self):
        gw = from_config_file(FIXTURES / "trusted_ip.conf")
        report = run_brute_force(gw, spec(stop_first=False))
        assert report.blocked == 64 and report.delivered == 0 and not report.found

    def test_moved_port_refuses_every_attempt(self):
        gw = from_config_file(FIXTURES / "port22222.conf")
        report = run_brute_force(gw, spec(stop_first=False))
        assert report.refused == 64 and not report.found
        assert "service=-" in report.lines[0]

    def test_key_only_auth_defeats_the_full_sweep(self):
        gw = from_config_file(FIXTURES / "keyauth.conf")
        report = run_brute_force(gw, spec(stop_first=False))
        assert report.delivered == 64 and report.found == [] and report.banned_at is None

    def test_trusted_source_reaches_sshd_but_the_jail_still_guards(self):
        gw = from_config_file(FIXTURES / "trusted_ip.conf")
        report = run_brute_force(gw, spec(stop_first=False, source="198.51.100.10"))
        assert report.delivered == 5 and report.banned_at == 5

    def test_trusted_source_with_the_right_credential_logs_in(self):
        gw = from_config_file(FIXTURES / "trusted_ip.conf")
        report = run_brute_force(gw, BruteSpec(
            users=(VALID_USER,), passwords=(VALID_PASSWORD,), source="198.51.100.10"))
        assert report.found == [(VALID_USER, VALID_PASSWORD, 1)]

    def test_tasks_never_change_what_is_found(self):
        rng = random.Random(7)
        for _ in range(8):
            users = tuple(f"u{i}" for i in range(rng.randrange(1, 6)))
            passwords = tuple(f"p{i}" for i in range(rng.randrange(1, 9)))
            victim_user = rng.choice(users)
            victim_password = rng.choice(passwords)
            config = (
                "[services]\n22=sshd:SSH-2.0-sim\n"
                f"[auth]\nmode=password\ncredentials={victim_user}:{victim_password}\n"
            )
            baseline = run_brute_force(
                load_config(config), BruteSpec(users=users, passwords=passwords, stop_first=True))
            for tasks in (2, 3, 8):
                other = run_brute_force(
                    load_config(config),
                    BruteSpec(users=users, passwords=passwords, stop_first=True, tasks=tasks))
                assert other.found == baseline.found
                assert other.attempts == baseline.attempts

    def test_tasks_compress_the_timeline(self):
        gw = from_config_file(FIXTURES / "open.conf")
        run_brute_force(gw, spec(stop_first=False, tasks=4))
        # 64 attempts over 16 slots: last slot starts 15 intervals in.
        assert gw.clock.now == 1000 + 15 * ATTEMPT_INTERVAL_MS

    def test_verbose_lines_cover_each_attempt(self):
        gw = from_config_file(FIXTURES / "open.conf")
        report = run_brute_force(gw, spec(stop_first=True, verbose=True))
        attempts = [l for l in report.lines if l.startswith("attempt|")]
        assert len(attempts) == 20
        assert attempts[-1] == "attempt|20|admin|Sup3rS3cret!9|OK"
        assert attempts[0] == "attempt|1|root|123456|FAIL"

    def test_verbose_shows_blocked_attempts(self):
        gw = default_gateway()
        report = run_brute_force(gw, spec(stop_first=False, verbose=True))
        statuses = [l.split("|")[4] for l in report.lines if l.startswith("attempt|")]
        assert statuses[:5] == ["FAIL"] * 5
        assert set(statuses[5:]) == {"BLOCKED"}

    def test_success_line_clears_the_jail_window(self):
        # Valid pair early in the sweep: its OK line resets the counter, so
        # a ban needs five fresh failures after it.
        config = (
            "[services]\n22=sshd:SSH-2.0-sim\n"
            "[jail]\nservice=sshd\nmaxretry=5\n"
            "[auth]\nmode=password\ncredentials=root:123456\n"
        )
        gw = load_config(config)
        report = run_brute_force(gw, BruteSpec(users=("root",), passwords=PASSWORDS[:8],
                                               stop_first=False))
        assert report.found[0][2] == 1
        # Five failures after the reset means the ban lands at attempt 6;
        # without the success it would land at attempt 5.
        assert report.banned_at == 6

    def test_empty_wordlists_rejected(self):
        with pytest.raises(AttackError):
            BruteSpec(users=(), passwords=("x",))
        with pytest.raises(AttackError):
            BruteSpec(users=("x",), passwords=())
        with pytest.raises(AttackError):
            BruteSpec(users=("x",), passwords=("y",), tasks=0)


class TestScenario:
    def test_empty_script_leaves_gateway_untouched(self):
        outcome = run_scenario("", gateway=default_gateway())
        assert outcome.report == ""
        assert outcome.gateway.logs == [
            "0|gateway|init|rules=1 jails=1 services=2 devices=1"]

    def test_comments_and_blanks_are_skipped(self):
        outcome = run_scenario("# nothing\n\n   \n", gateway=default_gateway())
        assert outcome.report == ""

    def test_unknown_operation_names_line(self):
        with pytest.raises(ScenarioError, match="line 2"):
            run_scenario("# ok\nflood|target=x\n", gateway=default_gateway())

    def test_missing_required_key(self):
        with pytest.raises(ScenarioError, match="ports"):
            run_scenario("scan|target=192.168.25.2\n", gateway=default_gateway())

    def test_missing_wordlist_file(self):
        with pytest.raises(ScenarioError, match="wordlist not found"):
            run_scenario("brute|users=nope.txt|passwords=nope.txt\n",
                         gateway=default_gateway(), base_dir="/tmp")

    def test_packet_step_reports_decision(self):
        outcome = run_scenario(
            "packet|1000|public|tcp|198.51.100.9:40000|192.168.25.2:80|S|\n",
            gateway=default_gateway())
        assert outcome.report == "step|1|packet\npacket|accepted|rule=-\n"

    def test_packet_in_the_past_is_a_script_error(self):
        script = (
            "packet|5000|public|tcp|198.51.100.9:40000|192.168.25.2:80|S|\n"
            "packet|4000|public|tcp|198.51.100.9:40000|192.168.25.2:80|S|\n"
        )
        with pytest.raises(ScenarioError, match="line 2"):
            run_scenario(script, gateway=default_gateway())

    def test_advance_moves_the_cursor(self):
        outcome = run_scenario("advance|ms=5000\n", gateway=default_gateway())
        assert outcome.report == "step|1|advance\nadvance|now=6000\n"

    def test_telemetry_roundtrip_and_alert(self):
        script = (
            "telemetry|device=6272636c74303031|sys=120|dia=80|pulse=68\n"
            "telemetry|device=6272636c74303031|sys=165|dia=115|pulse=98\n"
        )
        outcome = run_scenario(script, gateway=default_gateway())
        assert "telemetry|stored|id=0" in outcome.report
        assert "telemetry|stored|id=1|alert=Critical|recipients=4" in outcome.report
        assert len(outcome.gateway.outbox) == 1

    def test_telemetry_tamper_is_refused(self):
        script = "telemetry|device=6272636c74303031|sys=120|dia=80|pulse=68|tamper=40\n"
        outcome = run_scenario(script, gateway=default_gateway())
        assert "telemetry|rejected|reason=undecryptable" in outcome.report

    def test_telemetry_wrong_key_is_refused(self):
        script = ("telemetry|device=6272636c74303031|key=ffffffffffffffffffffffffffffffff"
                  "|sys=120|dia=80|pulse=70\n")
        outcome = run_scenario(script, gateway=default_gateway())
        assert "telemetry|rejected|reason=undecryptable" in outcome.report

    def test_telemetry_unknown_device_without_key_is_script_error(self):
        with pytest.raises(ScenarioError, match="not configured"):
            run_scenario("telemetry|device=ffffffffffffffff|sys=120|dia=80|pulse=70\n",
                         gateway=default_gateway())

    def test_vpn_steps(self):
        script = "vpn|fp=bracelet-ana|valid=true\nvpn|fp=stranger|valid=false\n"
        outcome = run_scenario(script, gateway=default_gateway())
        assert "vpn|assigned|10.8.0.2" in outcome.report
        assert "vpn|rejected" in outcome.report

    def test_envelope_seal_open_and_failure_modes(self):
        outcome = run_scenario_file(SCENARIOS / "envelope_demo.scn")
        lines = outcome.report.splitlines()
        assert any(l.startswith("envelope|sealed|bytes=") for l in lines)
        assert "envelope|channel2|passphrase_delivered=true" in lines
        assert "envelope|opened|text=patient ana requires weekly review" in lines
        assert "envelope|open_failed|error=EnvelopeDecryptError" in lines
        assert "envelope|open_failed|error=EnvelopeTagError" in lines

    def test_envelope_open_before_seal_is_script_error(self):
        with pytest.raises(ScenarioError, match="no sealed envelope"):
            run_scenario("envelope|open|sign_key=k\n", gateway=default_gateway())

    def test_attack_and_defend_scenario_story(self):
        outcome = run_scenario_file(SCENARIOS / "attack_and_defend.scn")
        report = outcome.report
        assert "open|22|sshd|SSH-2.0-sim" in report
        assert "filtered|51-1000" in report
        assert "banned|jail=sshd|ip=198.51.100.7|at_attempt=5" in report
        assert "telemetry|stored|id=1|alert=Critical|recipients=4" in report
        assert "vpn|assigned|10.8.0.2" in report
        assert "envelope|opened|text=weekly vitals summary for ana" in report
        # The scan block outlived the whole scenario; the ban rule sits above it.
        assert report.rstrip().endswith("packet|dropped|rule=1")

    def test_scenario_report_is_deterministic(self):
        first = run_scenario_file(SCENARIOS / "attack_and_defend.scn")
        second = run_scenario_file(SCENARIOS / "attack_and_defend.scn")
        assert first.report == second.report
        assert first.gateway.log_text() == second.gateway.log_text()

    def test_scan_scenario_matches_direct_call(self):
        outcome = run_scenario_file(SCENARIOS / "scan_t4_default.scn")
        direct = run_port_scan(default_gateway(), ScanSpec(detect_services=True))
        assert outcome.report.splitlines()[1:] == direct.lines

    def test_brute_scenarios_load_wordlists_relative_to_script(self):
        outcome = run_scenario_file(SCENARIOS / "brute_basic.scn",
                                    gateway=from_config_file(FIXTURES / "open.conf"))
        assert f"found|admin|Sup3rS3cret!9|attempt=20" in outcome.report

    def test_duplicate_keys_rejected(self):
        with pytest.raises(ScenarioError, match="duplicate key"):
            run_scenario("scan|ports=1-10|ports=1-20\n", gateway=default_gateway())

    def test_bad_boolean_rejected(self):
        with pytest.raises(ScenarioError, match="true or false"):
            run_scenario("scan|ports=1-10|detect_services=yes\n", gateway=default_gateway())
