"""Port-scan and sweep detection over a sliding window, with auto-blocking.

Each source address gets a profile holding its probes from the last window
(60 s of logical time by default). Distinct destination ports drive the
danger level through a fixed threshold ladder; distinct destination hosts
drive sweep detection once at least 20 hosts are touched. A detection is
emitted whenever the combined level climbs past what was already reported
for that source, so one scan produces one detection per level crossed.

Probe pacing is summarized as a speed class T1 (slowest) to T5 (fastest)
from the median inter-probe gap. Payload/port/flag signatures attach attack
categories to whatever the source sends inside the window.

Detections at or above the configured block level convert into filter Drop
rules, turning the detector from a passive IDS into an active IPS.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum

from .filtering import Chain, FilterRule, MatchSpec, RuleTarget
from .net import CidrBlock, Ipv4Address, PacketEvent, Protocol, TcpFlag

DEFAULT_LEVEL_THRESHOLDS = (5, 15, 50, 250, 1000)


class ScanKind(Enum):
    PORT_SCAN = "PortScan"
    SWEEP = "Sweep"


class SpeedClass(Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    T4 = "T4"
    T5 = "T5"


class SignatureCategory(Enum):
    BACKDOOR = "Backdoor"
    BOTNET_C2 = "BotnetC2"
    DOS = "DoS"


class DetectorError(ValueError):
    """Misuse of the detector API."""


class TimeRegressionError(DetectorError):
    """A source's packets arrived with decreasing timestamps."""


class SignatureParseError(ValueError):
    """A signature fixture line is malformed."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class Signature:
    """Categorized traffic pattern; all present conditions must hold."""

    id: str
    category: SignatureCategory
    port: int | None = None
    flags: frozenset[TcpFlag] | None = None
    payload_prefix: bytes | None = None

    def __post_init__(self) -> None:
        if self.port is None and self.flags is None and self.payload_prefix is None:
            raise ValueError(f"signature {self.id!r} has no conditions")

    def matches(self, packet: PacketEvent) -> bool:
        if self.port is not None and packet.dst.port != self.port:
            return False
        if self.flags is not None:
            if packet.proto is not Protocol.TCP or packet.tcp_flags != self.flags:
                return False
        if self.payload_prefix is not None and not packet.payload.startswith(self.payload_prefix):
            return False
        return True


def match_signatures(packet: PacketEvent, signatures: tuple[Signature, ...] | list[Signature]) -> frozenset[SignatureCategory]:
    return frozenset(sig.category for sig in signatures if sig.matches(packet))


# Fixture line: id|category|cond|cond|...  with conds port=N, flags=SYN,FIN,
# payload_hex_prefix=HEX. At least one condition is required.

def parse_signature_line(line: str) -> Signature:
    fields = line.split("|")
    if len(fields) < 3:
        raise SignatureParseError(f"expected id|category|conditions, got {line!r}")
    sig_id, category_s, *conds = fields
    try:
        category = SignatureCategory(category_s)
    except ValueError:
        raise SignatureParseError(f"unknown category {category_s!r}") from None
    port: int | None = None
    flags: frozenset[TcpFlag] | None = None
    prefix: bytes | None = None
    for cond in conds:
        key, sep, value = cond.partition("=")
        if not sep:
            raise SignatureParseError(f"bad condition {cond!r}")
        if key == "port":
            if not value.isdigit() or int(value) > 65535:
                raise SignatureParseError(f"bad port {value!r}")
            port = int(value)
        elif key == "flags":
            try:
                flags = frozenset(TcpFlag[name] for name in value.split(","))
            except KeyError:
                raise SignatureParseError(f"bad flags {value!r}") from None
        elif key == "payload_hex_prefix":
            try:
                prefix = bytes.fromhex(value)
            except ValueError:
                raise SignatureParseError(f"bad hex {value!r}") from None
        else:
            raise SignatureParseError(f"unknown condition key {key!r}")
    try:
        return Signature(id=sig_id, category=category, port=port, flags=flags, payload_prefix=prefix)
    except ValueError as exc:
        raise SignatureParseError(str(exc)) from None


def load_signatures(text: str) -> tuple[Signature, ...]:
    sigs = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            sigs.append(parse_signature_line(line))
        except SignatureParseError as exc:
            raise SignatureParseError(str(exc), line_no) from None
    return tuple(sigs)


@dataclass
class DetectorConfig:
    window_ms: int = 60_000
    level_thresholds: tuple[int, ...] = DEFAULT_LEVEL_THRESHOLDS
    sweep_threshold: int = 20
    block_level: int = 3

    def __post_init__(self) -> None:
        if self.window_ms <= 0:
            raise ValueError("window_ms must be positive")
        if list(self.level_thresholds) != sorted(set(self.level_thresholds)):
            raise ValueError("level thresholds must be strictly increasing")
        if not 1 <= self.block_level <= len(self.level_thresholds):
            raise ValueError("block_level must index into the threshold ladder")

    def level_for(self, count: int) -> int:
        level = 0
        for threshold in self.level_thresholds:
            if count >= threshold:
                level += 1
        return level


@dataclass(frozen=True)
class Detection:
    time: int
    src_ip: Ipv4Address
    kind: ScanKind
    danger_level: int
    distinct_ports: int
    distinct_hosts: int
    speed: SpeedClass
    categories: frozenset[SignatureCategory]


@dataclass(frozen=True)
class _Probe:
    time: int
    dst_ip: Ipv4Address
    dst_port: int
    categories: frozenset[SignatureCategory]


@dataclass
class _SourceProfile:
    probes: list[_Probe] = field(default_factory=list)
    reported_level: int = 0
    last_time: int = -1


def classify_speed(times: list[int]) -> SpeedClass:
    """Band the median inter-probe gap: T1 slow scans, T5 sub-10 ms bursts."""
    if len(times) < 2:
        raise DetectorError("need at least two probe times to classify speed")
    gaps = [b - a for a, b in zip(times, times[1:])]
    median = statistics.median(gaps)
    if median <= 10:
        return SpeedClass.T5
    if median <= 400:
        return SpeedClass.T4
    if median <= 1000:
        return SpeedClass.T3
    if median <= 10_000:
        return SpeedClass.T2
    return SpeedClass.T1


class ScanDetector:
    """Stateful per-source scan tracker; observe() one packet at a time."""

    def __init__(self, config: DetectorConfig | None = None,
                 signatures: tuple[Signature, ...] | list[Signature] = ()) -> None:
        self.config = config or DetectorConfig()
        self.signatures = tuple(signatures)
        self.profiles: dict[Ipv4Address, _SourceProfile] = {}

    def observe(self, packet: PacketEvent) -> Detection | None:
        profile = self.profiles.setdefault(packet.src.ip, _SourceProfile())
        if packet.time < profile.last_time:
            raise TimeRegressionError(
                f"packet at t={packet.time} after t={profile.last_time} from {packet.src.ip}"
            )
        profile.last_time = packet.time

        cutoff = packet.time - self.config.window_ms
        kept = [p for p in profile.probes if p.time >= cutoff]
        if profile.probes and not kept:
            # the window went fully cold; future activity reports afresh
            profile.reported_level = 0
        profile.probes = kept
        profile.probes.append(_Probe(
            time=packet.time,
            dst_ip=packet.dst.ip,
            dst_port=packet.dst.port,
            categories=match_signatures(packet, self.signatures),
        ))

        distinct_ports = len({p.dst_port for p in profile.probes})
        distinct_hosts = len({p.dst_ip for p in profile.probes})
        port_level = self.config.level_for(distinct_ports)
        sweep_level = 0
        if distinct_hosts >= self.config.sweep_threshold:
            sweep_level = self.config.level_for(distinct_hosts)
        level = max(port_level, sweep_level)
        if level <= profile.reported_level:
            return None
        profile.reported_level = level
        categories: set[SignatureCategory] = set()
        for probe in profile.probes:
            categories |= probe.categories
        return Detection(
            time=packet.time,
            src_ip=packet.src.ip,
            kind=ScanKind.PORT_SCAN if port_level > 0 else ScanKind.SWEEP,
            danger_level=level,
            distinct_ports=distinct_ports,
            distinct_hosts=distinct_hosts,
            speed=classify_speed([p.time for p in profile.probes]),
            categories=frozenset(categories),
        )


def auto_block(detection: Detection, config: DetectorConfig) -> FilterRule:
    """Convert a sufficiently dangerous detection into a head-of-chain Drop."""
    if detection.danger_level < config.block_level:
        raise DetectorError(
            f"danger level {detection.danger_level} below block level {config.block_level}"
        )
    return FilterRule(
        chain=Chain.INPUT,
        match=MatchSpec(src=CidrBlock(detection.src_ip, 32)),
        target=RuleTarget.drop(),
        comment=f"scan auto-block src={detection.src_ip} dl={detection.danger_level}",
    )


def format_detection_line(detection: Detection) -> str:
    """time|src_ip|kind|DL|ports|hosts|speed|categories with '-' when none."""
    categories = ",".join(sorted(c.value for c in detection.categories)) or "-"
    return "|".join((
        str(detection.time),
        str(detection.src_ip),
        detection.kind.value,
        str(detection.danger_level),
        str(detection.distinct_ports),
        str(detection.distinct_hosts),
        detection.speed.value,
        categories,
    ))
