"""Brute-force guard: log grammar, windows, bans, expiry, persistence."""

from __future__ import annotations

import random

import pytest

from braceletnet.bruteguard import (
    AuthLogLine,
    BanFileError,
    BruteGuard,
    GuardError,
    Jail,
    JailConfig,
    LogParseError,
    Outcome,
    TimeRegressionError,
    format_log_line,
    parse_log_line,
    to_filter_rule,
)
from braceletnet.filtering import Chain, Decision, RuleTable, TargetKind
from braceletnet.net import Endpoint, Interface, Ipv4Address, PacketEvent, Protocol, TcpFlag

from oracles import ref_ban_stream

IP = "10.9.9.9"


def fail(t, ip=IP, service="sshd", user="root"):
    return AuthLogLine(t, service, Ipv4Address.parse(ip), user, Outcome.FAILURE)


def ok(t, ip=IP, service="sshd", user="alice"):
    return AuthLogLine(t, service, Ipv4Address.parse(ip), user, Outcome.SUCCESS)


class TestLogGrammar:
    def test_parse_failure_line(self):
        rec = parse_log_line("1000|sshd|10.9.9.9|root|FAIL")
        assert rec == fail(1000)

    def test_parse_success_line(self):
        rec = parse_log_line("1000|sshd|10.9.9.9|alice|OK")
        assert rec.outcome is Outcome.SUCCESS

    def test_round_trip(self):
        line = "123456|sshd|203.0.113.66|admin|FAIL"
        assert format_log_line(parse_log_line(line)) == line

    @pytest.mark.parametrize("line,column", [
        ("garbage", "fields"),
        ("x|sshd|10.9.9.9|root|FAIL", "time"),
        ("1000||10.9.9.9|root|FAIL", "service"),
        ("1000|sshd|not.an.ip|root|FAIL", "ip"),
        ("1000|sshd|10.9.9.9||FAIL", "user"),
        ("1000|sshd|10.9.9.9|root|MAYBE", "outcome"),
    ])
    def test_errors_name_the_column(self, line, column):
        with pytest.raises(LogParseError, match=column):
            parse_log_line(line)


class TestJailWindow:
    def make_jail(self, **overrides):
        return Jail(JailConfig(service="sshd", **overrides))

    def test_ban_on_fifth_failure(self):
        jail = self.make_jail()
        entries = [jail.ingest(fail(1000 * i)) for i in range(5)]
        assert entries[:4] == [None] * 4
        ban = entries[4]
        assert ban is not None
        assert ban.banned_at == 4000
        assert ban.jail == "sshd"
        assert ban.expires is None

    def test_four_failures_never_ban(self):
        jail = self.make_jail()
        for i in range(4):
            assert jail.ingest(fail(1000 * i)) is None
        assert not jail.is_banned(Ipv4Address.parse(IP), 10**9)

    def test_slow_failures_never_ban(self):
        # failures 601 s apart with a 600 s window: at most one in-window
        jail = self.make_jail()
        for i in range(20):
            assert jail.ingest(fail(601_000 * i)) is None

    def test_boundary_failure_still_counts(self):
        # a failure exactly findtime before the fifth stays inside the window
        jail = self.make_jail()
        times = [0, 100, 200, 300, 600_000]
        entries = [jail.ingest(fail(t)) for t in times]
        assert entries[-1] is not None

    def test_one_past_boundary_does_not(self):
        jail = self.make_jail()
        for t in [0, 100, 200, 300, 600_001]:
            last = jail.ingest(fail(t))
        assert last is None  # the t=0 failure aged out

    def test_success_clears_window(self):
        jail = self.make_jail()
        for i in range(4):
            jail.ingest(fail(i * 100))
        jail.ingest(ok(500))
        # four more failures only make 4 in the fresh window
        for i in range(4):
            assert jail.ingest(fail(600 + i * 100)) is None

    def test_no_lines_no_ban(self):
        jail = self.make_jail()
        assert jail.bans == []

    def test_other_service_ignored(self):
        jail = self.make_jail()
        for i in range(10):
            assert jail.ingest(fail(i * 10, service="ftpd")) is None

    def test_sources_independent(self):
        jail = self.make_jail()
        for i in range(4):
            jail.ingest(fail(i * 10, ip="10.9.9.1"))
            jail.ingest(fail(i * 10 + 5, ip="10.9.9.2"))
        ban = jail.ingest(fail(100, ip="10.9.9.1"))
        assert ban is not None and str(ban.ip) == "10.9.9.1"
        assert not jail.is_banned(Ipv4Address.parse("10.9.9.2"), 200)

    def test_banned_source_never_double_banned(self):
        jail = self.make_jail()
        for i in range(5):
            jail.ingest(fail(i * 10))
        # keep failing after the ban: no second entry
        for i in range(5, 30):
            assert jail.ingest(fail(i * 10)) is None
        assert len(jail.bans) == 1

    def test_time_regression_rejected(self):
        jail = self.make_jail()
        jail.ingest(fail(1000))
        with pytest.raises(TimeRegressionError):
            jail.ingest(fail(999))
        # independent sources have independent clocks
        jail.ingest(fail(500, ip="10.9.9.2"))


class TestBanExpiry:
    def test_permanent_ban_everlasting(self):
        jail = Jail(JailConfig(service="sshd"))
        for i in range(5):
            jail.ingest(fail(i))
        assert jail.is_banned(Ipv4Address.parse(IP), 10**12)

    def test_timed_ban_expires(self):
        jail = Jail(JailConfig(service="sshd", bantime_ms=3_600_000))
        for i in range(5):
            jail.ingest(fail(i * 100))
        ip = Ipv4Address.parse(IP)
        banned_at = 400
        assert jail.is_banned(ip, banned_at + 3_599_999)
        assert not jail.is_banned(ip, banned_at + 3_600_000)  # exclusive edge
        assert not jail.is_banned(ip, banned_at + 3_601_000)

    def test_never_seen_ip(self):
        jail = Jail(JailConfig(service="sshd"))
        assert not jail.is_banned(Ipv4Address.parse("192.0.2.1"), 0)

    def test_reban_after_expiry(self):
        jail = Jail(JailConfig(service="sshd", bantime_ms=1_000))
        for i in range(5):
            jail.ingest(fail(i * 10))
        # ban expires at 1040; five new failures create a second ban entry
        for i in range(5):
            ban = jail.ingest(fail(2_000 + i * 10))
        assert ban is not None and ban.banned_at == 2_040


class TestPersistence:
    def build_guard_with_bans(self):
        guard = BruteGuard([JailConfig(service="sshd"), JailConfig(service="api", bantime_ms=60_000)])
        for i in range(5):
            guard.ingest(fail(i * 10))
        for i in range(5):
            guard.ingest(fail(1_000 + i * 10, ip="198.51.100.7"))
        for i in range(5):
            guard.ingest(fail(2_000 + i * 10, ip="203.0.113.5", service="api"))
        return guard

    def test_three_bans_round_trip(self):
        guard = self.build_guard_with_bans()
        data = guard.persist()
        restored = BruteGuard.restore(data, [JailConfig(service="sshd"),
                                             JailConfig(service="api", bantime_ms=60_000)])
        assert restored.all_bans() == guard.all_bans()
        assert restored.persist() == data

    def test_empty_round_trip(self):
        guard = BruteGuard([JailConfig(service="sshd")])
        restored = BruteGuard.restore(guard.persist(), [JailConfig(service="sshd")])
        assert restored.all_bans() == []

    def test_header_checked(self):
        with pytest.raises(BanFileError):
            BruteGuard.restore(b"banfile v2\n")
        with pytest.raises(BanFileError):
            BruteGuard.restore(b"")

    def test_truncated_file_rejected(self):
        data = self.build_guard_with_bans().persist()
        # cut mid-line: the last record loses columns
        truncated = data[: data.rindex(b"|")]
        with pytest.raises(BanFileError):
            BruteGuard.restore(truncated)

    @pytest.mark.parametrize("line", [
        "not-an-ip|100|sshd|r|NEVER",
        "10.9.9.9|x|sshd|r|NEVER",
        "10.9.9.9|100||r|NEVER",
        "10.9.9.9|100|sshd|r|soon",
        "10.9.9.9|100|sshd|r",
    ])
    def test_corrupt_records_rejected(self, line):
        with pytest.raises(BanFileError):
            BruteGuard.restore(f"banfile v1\n{line}\n".encode())

    def test_restored_ban_still_enforced(self):
        guard = self.build_guard_with_bans()
        restored = BruteGuard.restore(guard.persist(), [JailConfig(service="sshd")])
        assert restored.is_banned(Ipv4Address.parse(IP), 10**9)

    def test_restore_keeps_unknown_jail_bans(self):
        guard = self.build_guard_with_bans()
        restored = BruteGuard.restore(guard.persist())  # no configs supplied
        assert len(restored.all_bans()) == 3


class TestFilterIntegration:
    def make_ban(self):
        jail = Jail(JailConfig(service="sshd"))
        for i in range(5):
            ban = jail.ingest(fail(i * 10))
        return ban

    def packet(self, src, t=10_000):
        return PacketEvent(
            time=t,
            src=Endpoint(Ipv4Address.parse(src), 40000),
            dst=Endpoint(Ipv4Address.parse("192.168.25.100"), 22),
            proto=Protocol.TCP,
            iface=Interface.PUBLIC,
            tcp_flags=frozenset({TcpFlag.SYN}),
        )

    def test_rule_shape(self):
        rule = to_filter_rule(self.make_ban())
        assert rule.chain is Chain.INPUT
        assert str(rule.match.src) == "10.9.9.9/32"
        assert rule.target.kind is TargetKind.DROP
        assert "sshd" in rule.comment and "failures" in rule.comment

    def test_banned_source_dropped(self):
        table = RuleTable()
        table.insert_rule(0, to_filter_rule(self.make_ban()))
        assert table.evaluate(Chain.INPUT, self.packet(IP)).decision is Decision.DROPPED
        assert table.evaluate(Chain.INPUT, self.packet("10.9.9.8")).decision is Decision.ACCEPTED

    def test_two_bans_order_irrelevant(self):
        jail = Jail(JailConfig(service="sshd"))
        bans = []
        for ip in ("10.9.9.1", "10.9.9.2"):
            for i in range(5):
                ban = jail.ingest(fail(i * 10, ip=ip))
            bans.append(ban)
        for ordering in (bans, list(reversed(bans))):
            table = RuleTable()
            for ban in ordering:
                table.insert_rule(0, to_filter_rule(ban))
            for ip in ("10.9.9.1", "10.9.9.2"):
                assert table.evaluate(Chain.INPUT, self.packet(ip)).decision is Decision.DROPPED


class TestGuardDispatch:
    def test_unknown_service_ignored(self):
        guard = BruteGuard([JailConfig(service="sshd")])
        for i in range(10):
            assert guard.ingest(fail(i * 10, service="ftpd")) is None

    def test_duplicate_jail_rejected(self):
        guard = BruteGuard([JailConfig(service="sshd")])
        with pytest.raises(GuardError):
            guard.add_jail(JailConfig(service="sshd"))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            JailConfig(service="")
        with pytest.raises(ValueError):
            JailConfig(service="sshd", maxretry=0)
        with pytest.raises(ValueError):
            JailConfig(service="sshd", findtime_ms=0)
        with pytest.raises(ValueError):
            JailConfig(service="sshd", bantime_ms=0)


def test_random_streams_match_reference_replay():
    # reference route: replay the same event stream through the plain-list
    # window model and compare ban sets and ban times
    rng = random.Random(0xF2B)
    for _ in range(60):
        findtime = rng.choice([1_000, 10_000, 600_000])
        maxretry = rng.randint(2, 6)
        ips = [f"10.0.0.{i}" for i in range(1, rng.randint(2, 5))]
        events = []
        t = 0
        for _ in range(rng.randint(10, 120)):
            t += rng.randint(1, findtime // 2)
            events.append((t, rng.choice(ips), "FAIL" if rng.random() < 0.85 else "OK"))
        expected = ref_ban_stream(events, findtime, maxretry)

        jail = Jail(JailConfig(service="sshd", findtime_ms=findtime, maxretry=maxretry))
        actual = []
        for when, ip, outcome in events:
            rec = AuthLogLine(when, "sshd", Ipv4Address.parse(ip),
                              "root", Outcome.FAILURE if outcome == "FAIL" else Outcome.SUCCESS)
            ban = jail.ingest(rec)
            if ban:
                actual.append((str(ban.ip), ban.banned_at))
        assert actual == expected
