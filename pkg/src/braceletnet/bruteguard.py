"""Log-driven brute-force guard: jails, sliding windows, bans, persistence.

Each jail watches one service's authentication log lines. Failures from a
source accumulate in a sliding window (findtime); hitting maxretry inside
the window bans the source, permanently by default or for a configured
bantime. A successful login clears the source's window. Bans translate into
filter Drop rules and survive restarts through a small line-oriented ban
file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .filtering import Chain, FilterRule, MatchSpec, RuleTarget
from .net import CidrBlock, Ipv4Address, NetParseError


class Outcome(Enum):
    FAILURE = "FAIL"
    SUCCESS = "OK"


class LogParseError(ValueError):
    """An auth log line is malformed; the message names the bad column."""


class GuardError(ValueError):
    """Misuse of the guard API."""


class TimeRegressionError(GuardError):
    """A source's log lines arrived with decreasing timestamps."""


class BanFileError(ValueError):
    """A persisted ban file is corrupt or has the wrong version header."""


@dataclass(frozen=True)
class AuthLogLine:
    """One parsed line: time_ms|service|src_ip|user|FAIL-or-OK."""

    time: int
    service: str
    src_ip: Ipv4Address
    user: str
    outcome: Outcome


def parse_log_line(line: str) -> AuthLogLine:
    fields = line.split("|")
    if len(fields) != 5:
        raise LogParseError(f"expected 5 fields, got {len(fields)}: {line!r}")
    time_s, service, ip_s, user, outcome_s = fields
    if not time_s.isdigit():
        raise LogParseError(f"bad time column {time_s!r}")
    if not service:
        raise LogParseError("empty service column")
    try:
        src_ip = Ipv4Address.parse(ip_s)
    except NetParseError as exc:
        raise LogParseError(f"bad source ip column: {exc}") from None
    if not user:
        raise LogParseError("empty user column")
    try:
        outcome = Outcome(outcome_s)
    except ValueError:
        raise LogParseError(f"bad outcome column {outcome_s!r}") from None
    return AuthLogLine(time=int(time_s), service=service, src_ip=src_ip, user=user, outcome=outcome)


def format_log_line(record: AuthLogLine) -> str:
    return "|".join((str(record.time), record.service, str(record.src_ip),
                     record.user, record.outcome.value))


@dataclass(frozen=True)
class JailConfig:
    service: str
    findtime_ms: int = 600_000
    maxretry: int = 5
    bantime_ms: int | None = None  # None = permanent

    def __post_init__(self) -> None:
        if not self.service:
            raise ValueError("jail needs a service name")
        if self.findtime_ms <= 0:
            raise ValueError("findtime_ms must be positive")
        if self.maxretry < 1:
            raise ValueError("maxretry must be at least 1")
        if self.bantime_ms is not None and self.bantime_ms <= 0:
            raise ValueError("bantime_ms must be positive or None for permanent")


@dataclass(frozen=True)
class BanEntry:
    ip: Ipv4Address
    banned_at: int
    jail: str
    reason: str
    expires: int | None  # None = never

    def __post_init__(self) -> None:
        if "|" in self.reason or "\n" in self.reason:
            raise ValueError("ban reason must not contain '|' or newlines")


class Jail:
    """Sliding-window failure counter for one service."""

    def __init__(self, config: JailConfig) -> None:
        self.config = config
        self._windows: dict[Ipv4Address, list[int]] = {}
        self._bans: dict[Ipv4Address, BanEntry] = {}
        self._last_time: dict[Ipv4Address, int] = {}

    @property
    def bans(self) -> list[BanEntry]:
        return sorted(self._bans.values(), key=lambda b: (b.banned_at, b.ip))

    def is_banned(self, ip: Ipv4Address, time: int) -> bool:
        entry = self._bans.get(ip)
        if entry is None:
            return False
        return entry.expires is None or entry.expires > time

    def ingest(self, record: AuthLogLine) -> BanEntry | None:
        """Feed one log line; returns the new BanEntry if one was created."""
        if record.service != self.config.service:
            return None
        last = self._last_time.get(record.src_ip, -1)
        if record.time < last:
            raise TimeRegressionError(
                f"log line at t={record.time} after t={last} from {record.src_ip}"
            )
        self._last_time[record.src_ip] = record.time
        if self.is_banned(record.src_ip, record.time):
            # an actively banned source cannot re-offend into a second ban
            return None
        window = self._windows.setdefault(record.src_ip, [])
        if record.outcome is Outcome.SUCCESS:
            window.clear()
            return None
        window.append(record.time)
        cutoff = record.time - self.config.findtime_ms
        window[:] = [t for t in window if t >= cutoff]
        if len(window) < self.config.maxretry:
            return None
        expires = None if self.config.bantime_ms is None else record.time + self.config.bantime_ms
        entry = BanEntry(
            ip=record.src_ip,
            banned_at=record.time,
            jail=self.config.service,
            reason=f"{len(window)} auth failures within {self.config.findtime_ms}ms",
            expires=expires,
        )
        self._bans[record.src_ip] = entry
        window.clear()
        return entry

    def restore_ban(self, entry: BanEntry) -> None:
        self._bans[entry.ip] = entry


class BruteGuard:
    """A set of jails keyed by service name, with whole-state persistence."""

    BANFILE_HEADER = "banfile v1"

    def __init__(self, configs: list[JailConfig] | tuple[JailConfig, ...] = ()) -> None:
        self.jails: dict[str, Jail] = {}
        for config in configs:
            self.add_jail(config)

    def add_jail(self, config: JailConfig) -> Jail:
        if config.service in self.jails:
            raise GuardError(f"duplicate jail for service {config.service!r}")
        jail = Jail(config)
        self.jails[config.service] = jail
        return jail

    def ingest(self, record: AuthLogLine) -> BanEntry | None:
        jail = self.jails.get(record.service)
        if jail is None:
            return None
        return jail.ingest(record)

    def is_banned(self, ip: Ipv4Address, time: int) -> bool:
        return any(jail.is_banned(ip, time) for jail in self.jails.values())

    def all_bans(self) -> list[BanEntry]:
        entries: list[BanEntry] = []
        for jail in self.jails.values():
            entries.extend(jail.bans)
        return sorted(entries, key=lambda b: (b.banned_at, str(b.ip), b.jail))

    def persist(self) -> bytes:
        """Serialize every ban: header line then ip|banned_at|jail|reason|expiry."""
        lines = [self.BANFILE_HEADER]
        for ban in self.all_bans():
            expiry = "NEVER" if ban.expires is None else str(ban.expires)
            lines.append("|".join((str(ban.ip), str(ban.banned_at), ban.jail, ban.reason, expiry)))
        return ("\n".join(lines) + "\n").encode("utf-8")

    @classmethod
    def restore(cls, data: bytes, configs: list[JailConfig] | tuple[JailConfig, ...] = ()) -> BruteGuard:
        """Rebuild a guard from persisted bytes plus live jail configs.

        Bans for services without a supplied config get a default-config
        jail so no ban is silently dropped.
        """
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BanFileError(f"ban file is not utf-8: {exc}") from None
        lines = text.splitlines()
        if not lines or lines[0] != cls.BANFILE_HEADER:
            raise BanFileError("missing or wrong ban file header")
        guard = cls(configs)
        for line_no, line in enumerate(lines[1:], start=2):
            if not line:
                raise BanFileError(f"line {line_no}: blank line inside ban file")
            fields = line.split("|")
            if len(fields) != 5:
                raise BanFileError(f"line {line_no}: expected 5 fields, got {len(fields)}")
            ip_s, banned_at_s, jail_name, reason, expiry_s = fields
            try:
                ip = Ipv4Address.parse(ip_s)
            except NetParseError as exc:
                raise BanFileError(f"line {line_no}: {exc}") from None
            if not banned_at_s.isdigit():
                raise BanFileError(f"line {line_no}: bad banned_at {banned_at_s!r}")
            if expiry_s == "NEVER":
                expires = None
            elif expiry_s.isdigit():
                expires = int(expiry_s)
            else:
                raise BanFileError(f"line {line_no}: bad expiry {expiry_s!r}")
            if not jail_name:
                raise BanFileError(f"line {line_no}: empty jail name")
            jail = guard.jails.get(jail_name)
            if jail is None:
                jail = guard.add_jail(JailConfig(service=jail_name))
            jail.restore_ban(BanEntry(ip=ip, banned_at=int(banned_at_s), jail=jail_name,
                                      reason=reason, expires=expires))
        return guard


def to_filter_rule(ban: BanEntry) -> FilterRule:
    """A ban becomes a Drop of everything from the banned address."""
    return FilterRule(
        chain=Chain.INPUT,
        match=MatchSpec(src=CidrBlock(ban.ip, 32)),
        target=RuleTarget.drop(),
        comment=f"auth guard ban jail={ban.jail} reason={ban.reason}",
    )
