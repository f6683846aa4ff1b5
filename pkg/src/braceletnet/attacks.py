"""Attack harness: scripted offense against a gateway, for defense demos.

Two attack primitives drive packets through Gateway.pipeline_step:

* run_port_scan — SYN-probes an ascending port range at a chosen speed
  and reads verdicts back as Open / Closed / Filtered, optionally
  grabbing service banners.
* run_brute_force — walks a users-major credential grid against one
  service, one attempt per fixed interval, and reports what a live
  attacker would see: hits, refusals, and silently dropped attempts.

run_scenario replays a pipe-delimited script mixing both primitives with
telemetry uploads, raw packets, VPN handshakes and sealed-envelope
exchanges. Reports are pipe-delimited and timing-free so equal inputs
give byte-identical output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .crypto import (
    EnvelopeError,
    TelemetryFrame,
    encrypt_frame,
    envelope_open,
    envelope_seal,
    read_envelope,
    write_envelope,
)
from .filtering import Decision
from .gateway import Credential, Gateway, default_gateway
from .net import Interface, PacketEvent, TcpFlag, parse_packet_line
from .scandet import SpeedClass

DEFAULT_ATTACKER = "203.0.113.66"
DEFAULT_TARGET = "192.168.25.2"
ATTEMPT_INTERVAL_MS = 250

# Probe pacing per speed class, in milliseconds between probes. Each delay
# sits inside the band the detector maps back to the same class, so a scan
# launched at T4 is also reported as T4.
SPEED_DELAYS = {
    SpeedClass.T1: 15_000,
    SpeedClass.T2: 5_000,
    SpeedClass.T3: 700,
    SpeedClass.T4: 50,
    SpeedClass.T5: 5,
}


class AttackError(ValueError):
    """Invalid attack parameters."""


class ScenarioError(ValueError):
    """A scenario script line could not be understood or executed."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class PortState(Enum):
    OPEN = "open"
    CLOSED = "closed"
    FILTERED = "filtered"


def compress_ports(ports: list[int]) -> str:
    """Render sorted ports as compact ranges: [1,2,3,7,9,10] -> 1-3,7,9-10."""
    if not ports:
        return "-"
    spans: list[tuple[int, int]] = []
    start = prev = ports[0]
    for port in ports[1:]:
        if port == prev + 1:
            prev = port
            continue
        spans.append((start, prev))
        start = prev = port
    spans.append((start, prev))
    return ",".join(str(a) if a == b else f"{a}-{b}" for a, b in spans)


@dataclass(frozen=True)
class ScanSpec:
    target: str = DEFAULT_TARGET
    port_lo: int = 1
    port_hi: int = 1000
    speed: SpeedClass = SpeedClass.T4
    detect_services: bool = False
    source: str = DEFAULT_ATTACKER
    start_time: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.port_lo <= self.port_hi <= 65535:
            raise AttackError(f"bad port range {self.port_lo}-{self.port_hi}")


@dataclass
class ScanReport:
    spec: ScanSpec
    states: dict[int, PortState]
    banners: dict[int, tuple[str, str]]
    lines: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        return "\n".join(self.lines) + "\n"


def run_port_scan(gateway: Gateway, spec: ScanSpec) -> ScanReport:
    start = spec.start_time
    if start is None:
        start = gateway.clock.now + 1000 if gateway.clock.now else 1000
    delay = SPEED_DELAYS[spec.speed]

    states: dict[int, PortState] = {}
    banners: dict[int, tuple[str, str]] = {}
    for i, port in enumerate(range(spec.port_lo, spec.port_hi + 1)):
        packet = PacketEvent.tcp(
            time=start + i * delay,
            iface=Interface.PUBLIC,
            src=(spec.source, 40000 + (i % 25000)),
            dst=(spec.target, port),
            flags=frozenset({TcpFlag.SYN}),
        )
        result = gateway.pipeline_step(packet)
        decision = result.verdict.decision
        if decision in (Decision.ACCEPTED, Decision.FORWARDED):
            service = gateway.services.get(port)
            if service is not None:
                states[port] = PortState.OPEN
                banners[port] = service
            else:
                states[port] = PortState.CLOSED
        elif decision is Decision.REJECTED:
            states[port] = PortState.CLOSED
        else:
            states[port] = PortState.FILTERED

    lines = [
        f"portscan|target={spec.target}|range={spec.port_lo}-{spec.port_hi}"
        f"|speed={spec.speed.value}|source={spec.source}"
    ]
    open_ports = sorted(p for p, s in states.items() if s is PortState.OPEN)
    closed = sorted(p for p, s in states.items() if s is PortState.CLOSED)
    filtered = sorted(p for p, s in states.items() if s is PortState.FILTERED)
    for port in open_ports:
        if spec.detect_services:
            name, banner = banners[port]
            lines.append(f"open|{port}|{name}|{banner}")
        else:
            lines.append(f"open|{port}")
    if closed:
        lines.append(f"closed|{compress_ports(closed)}")
    if filtered:
        lines.append(f"filtered|{compress_ports(filtered)}")
    lines.append(f"summary|open={len(open_ports)}|closed={len(closed)}|filtered={len(filtered)}")
    return ScanReport(spec=spec, states=states, banners=banners, lines=lines)


@dataclass(frozen=True)
class BruteSpec:
    users: tuple[str, ...]
    passwords: tuple[str, ...]
    target: str = DEFAULT_TARGET
    port: int = 22
    tasks: int = 1
    stop_first: bool = False
    verbose: bool = False
    source: str = DEFAULT_ATTACKER
    start_time: int | None = None

    def __post_init__(self) -> None:
        if not self.users or not self.passwords:
            raise AttackError("need at least one user and one password")
        if self.tasks < 1:
            raise AttackError("tasks must be at least 1")
        if not 1 <= self.port <= 65535:
            raise AttackError(f"bad port {self.port}")


@dataclass
class BruteReport:
    spec: BruteSpec
    found: list[tuple[str, str, int]]
    banned_at: int | None
    attempts: int
    delivered: int
    blocked: int
    refused: int
    statuses: list[str] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        return "\n".join(self.lines) + "\n"


def run_brute_force(gateway: Gateway, spec: BruteSpec) -> BruteReport:
    """Try every user x password pair in users-major order.

    Pairs are fed strictly in order; tasks only compresses the timeline
    (tasks pairs share each 250 ms slot), so parallelism never changes
    which attempt finds the credential.
    """
    start = spec.start_time
    if start is None:
        start = gateway.clock.now + 1000 if gateway.clock.now else 1000
    service = gateway.services.get(spec.port)
    service_name = service[0] if service else "-"

    pairs = [(u, p) for u in spec.users for p in spec.passwords]
    found: list[tuple[str, str, int]] = []
    banned_at: int | None = None
    attempts = delivered = blocked = refused = 0
    statuses: list[str] = []
    attempt_lines: list[str] = []

    for i, (user, password) in enumerate(pairs):
        t = start + (i // spec.tasks) * ATTEMPT_INTERVAL_MS
        attempts += 1
        if service is None:
            packet = PacketEvent.tcp(
                time=t, iface=Interface.PUBLIC,
                src=(spec.source, 50000 + (i % 15000)),
                dst=(spec.target, spec.port),
                flags=frozenset({TcpFlag.SYN}),
            )
            result = gateway.pipeline_step(packet)
            if result.verdict.decision in (Decision.ACCEPTED, Decision.FORWARDED):
                refused += 1
                status = "REFUSED"
            else:
                blocked += 1
                status = "BLOCKED"
        else:
            ok = gateway.check_credentials(user, password)
            auth_line = f"{t}|{service_name}|{spec.source}|{user}|{'OK' if ok else 'FAIL'}"
            packet = PacketEvent.tcp(
                time=t, iface=Interface.PUBLIC,
                src=(spec.source, 50000 + (i % 15000)),
                dst=(spec.target, spec.port),
                flags=frozenset({TcpFlag.ACK}),
                payload=auth_line.encode("utf-8"),
            )
            result = gateway.pipeline_step(packet)
            if result.verdict.decision not in (Decision.ACCEPTED, Decision.FORWARDED):
                blocked += 1
                status = "BLOCKED"
            else:
                delivered += 1
                if ok:
                    found.append((user, password, i + 1))
                    status = "OK"
                else:
                    status = "FAIL"
            if result.bans and banned_at is None:
                banned_at = i + 1
        statuses.append(status)
        if spec.verbose:
            attempt_lines.append(f"attempt|{i + 1}|{user}|{password}|{status}")
        if found and spec.stop_first:
            break

    # The header deliberately omits tasks: parallelism compresses the
    # timeline but never changes the findings, so reports stay comparable.
    lines = [
        f"brute|target={spec.target}:{spec.port}|service={service_name}"
        f"|users={len(spec.users)}|passwords={len(spec.passwords)}"
    ]
    lines.extend(attempt_lines)
    for user, password, position in found:
        lines.append(f"found|{user}|{password}|attempt={position}")
    if banned_at is not None:
        ban = gateway.guard.all_bans()[-1]
        lines.append(f"banned|jail={ban.jail}|ip={ban.ip}|at_attempt={banned_at}")
    lines.append(
        f"summary|attempts={attempts}|delivered={delivered}|blocked={blocked}"
        f"|refused={refused}|found={len(found)}"
    )
    return BruteReport(
        spec=spec, found=found, banned_at=banned_at, attempts=attempts,
        delivered=delivered, blocked=blocked, refused=refused,
        statuses=statuses, lines=lines,
    )


# --- scripted scenarios --------------------------------------------------------


@dataclass
class ScenarioOutcome:
    report: str
    gateway: Gateway


def _parse_kv_tokens(tokens: list[str], line_no: int) -> dict[str, str]:
    out: dict[str, str] = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise ScenarioError(f"expected key=value, got {token!r}", line_no)
        if key in out:
            raise ScenarioError(f"duplicate key {key!r}", line_no)
        out[key] = value
    return out


def _require(kv: dict[str, str], key: str, line_no: int) -> str:
    if key not in kv:
        raise ScenarioError(f"missing required key {key!r}", line_no)
    return kv[key]


def _bool(kv: dict[str, str], key: str, default: bool, line_no: int) -> bool:
    raw = kv.get(key)
    if raw is None:
        return default
    if raw not in ("true", "false"):
        raise ScenarioError(f"{key} must be true or false, got {raw!r}", line_no)
    return raw == "true"


def _int(kv: dict[str, str], key: str, default: int, line_no: int) -> int:
    raw = kv.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ScenarioError(f"{key} must be an integer, got {raw!r}", line_no) from None


def _load_wordlist(name: str, base_dir: Path, line_no: int) -> tuple[str, ...]:
    path = (base_dir / name) if not Path(name).is_absolute() else Path(name)
    if not path.is_file():
        raise ScenarioError(f"wordlist not found: {path}", line_no)
    words = tuple(w for w in path.read_text().splitlines() if w)
    if not words:
        raise ScenarioError(f"wordlist is empty: {path}", line_no)
    return words


def _scenario_iv(device_id: bytes, seq: int) -> bytes:
    return hashlib.sha256(b"scenario-iv:" + device_id + seq.to_bytes(4, "big")).digest()[:16]


class _ScenarioRunner:
    def __init__(self, gateway: Gateway, base_dir: Path) -> None:
        self.gw = gateway
        self.base_dir = base_dir
        self.cursor = 1000
        self.report: list[str] = []
        self.seq: dict[bytes, int] = {}
        self.envelope_bytes: bytes | None = None
        self.envelope_passphrase: str | None = None

    def _settle(self) -> None:
        self.cursor = max(self.cursor, self.gw.clock.now) + 1000

    def run_line(self, step_no: int, line_no: int, line: str) -> None:
        op, _, rest = line.partition("|")
        self.report.append(f"step|{step_no}|{op}")
        handler = getattr(self, f"_op_{op}", None)
        if handler is None:
            raise ScenarioError(f"unknown operation {op!r}", line_no)
        handler(rest, line_no)

    def _op_scan(self, rest: str, line_no: int) -> None:
        kv = _parse_kv_tokens(rest.split("|") if rest else [], line_no)
        ports = _require(kv, "ports", line_no)
        lo, sep, hi = ports.partition("-")
        if not sep or not lo.isdigit() or not hi.isdigit():
            raise ScenarioError(f"ports must look like LO-HI, got {ports!r}", line_no)
        try:
            speed = SpeedClass(kv.get("speed", "T4"))
        except ValueError:
            raise ScenarioError(f"unknown speed {kv['speed']!r}", line_no) from None
        try:
            spec = ScanSpec(
                target=kv.get("target", DEFAULT_TARGET),
                port_lo=int(lo), port_hi=int(hi), speed=speed,
                detect_services=_bool(kv, "detect_services", False, line_no),
                source=kv.get("source", DEFAULT_ATTACKER),
                start_time=self.cursor,
            )
        except AttackError as exc:
            raise ScenarioError(str(exc), line_no) from None
        self.report.extend(run_port_scan(self.gw, spec).lines)
        self._settle()

    def _op_brute(self, rest: str, line_no: int) -> None:
        kv = _parse_kv_tokens(rest.split("|") if rest else [], line_no)
        users = _load_wordlist(_require(kv, "users", line_no), self.base_dir, line_no)
        passwords = _load_wordlist(_require(kv, "passwords", line_no), self.base_dir, line_no)
        try:
            spec = BruteSpec(
                users=users, passwords=passwords,
                target=kv.get("target", DEFAULT_TARGET),
                port=_int(kv, "port", 22, line_no),
                tasks=_int(kv, "tasks", 1, line_no),
                stop_first=_bool(kv, "stop_first", False, line_no),
                verbose=_bool(kv, "verbose", False, line_no),
                source=kv.get("source", DEFAULT_ATTACKER),
                start_time=self.cursor,
            )
        except AttackError as exc:
            raise ScenarioError(str(exc), line_no) from None
        self.report.extend(run_brute_force(self.gw, spec).lines)
        self._settle()

    def _op_telemetry(self, rest: str, line_no: int) -> None:
        kv = _parse_kv_tokens(rest.split("|") if rest else [], line_no)
        try:
            device_id = bytes.fromhex(_require(kv, "device", line_no))
        except ValueError:
            raise ScenarioError(f"device must be hex, got {kv['device']!r}", line_no) from None
        if "key" in kv:
            try:
                key = bytes.fromhex(kv["key"])
            except ValueError:
                raise ScenarioError(f"key must be hex", line_no) from None
        else:
            known = self.gw.devices.get(device_id)
            if known is None:
                raise ScenarioError(f"device {device_id.hex()} not configured and no key given", line_no)
            key = known[0]
        seq = _int(kv, "seq", self.seq.get(device_id, 0) + 1, line_no)
        self.seq[device_id] = seq
        frame = TelemetryFrame(
            device_id=device_id, seq=seq, timestamp=self.cursor,
            systolic=_int(kv, "sys", 120, line_no),
            diastolic=_int(kv, "dia", 80, line_no),
            pulse=_int(kv, "pulse", 70, line_no),
        )
        blob = bytearray(encrypt_frame(frame, key, _scenario_iv(device_id, seq)))
        if "tamper" in kv:
            index = _int(kv, "tamper", 0, line_no)
            if not 0 <= index < len(blob):
                raise ScenarioError(f"tamper index {index} outside ciphertext", line_no)
            blob[index] ^= 0x01
        packet = PacketEvent.tcp(
            time=self.cursor, iface=Interface.PUBLIC,
            src=(kv.get("src", "10.8.0.2"), 40000),
            dst=(kv.get("target", DEFAULT_TARGET),
                 self.gw.telemetry_port if self.gw.telemetry_port is not None else 9100),
            flags=frozenset({TcpFlag.ACK}),
            payload=bytes(blob),
        )
        result = self.gw.pipeline_step(packet)
        if result.reading_id is not None:
            line = f"telemetry|stored|id={result.reading_id}"
            if result.alert is not None:
                line += f"|alert={result.alert.severity.value}|recipients={len(result.alert.recipients)}"
            self.report.append(line)
        elif result.verdict.decision not in (Decision.ACCEPTED, Decision.FORWARDED):
            self.report.append("telemetry|blocked")
        else:
            reason = "undecryptable"
            for logged in result.log_lines:
                if "|vitals|reject|" in logged:
                    reason = logged.split("reason=")[1].split(" ")[0]
            self.report.append(f"telemetry|rejected|reason={reason}")
        self._settle()

    def _op_packet(self, rest: str, line_no: int) -> None:
        try:
            packet = parse_packet_line(rest)
        except ValueError as exc:
            raise ScenarioError(f"bad packet line: {exc}", line_no) from None
        if packet.time < self.gw.clock.now:
            raise ScenarioError(f"packet time {packet.time} is in the past", line_no)
        result = self.gw.pipeline_step(packet)
        rule = result.verdict.matched_rule_index
        self.report.append(
            f"packet|{result.verdict.decision.value}|rule={'-' if rule is None else rule}")
        self._settle()

    def _op_advance(self, rest: str, line_no: int) -> None:
        kv = _parse_kv_tokens(rest.split("|") if rest else [], line_no)
        ms = _int(kv, "ms", 0, line_no)
        if ms <= 0:
            raise ScenarioError("advance needs ms > 0", line_no)
        self.cursor += ms
        self.report.append(f"advance|now={self.cursor}")

    def _op_vpn(self, rest: str, line_no: int) -> None:
        kv = _parse_kv_tokens(rest.split("|") if rest else [], line_no)
        fingerprint = _require(kv, "fp", line_no).encode("utf-8")
        credential = Credential(fingerprint, _bool(kv, "valid", True, line_no))
        try:
            ip = self.gw.vpn_connect(credential, time=self.cursor)
        except Exception as exc:  # pool exhausted / missing pool
            raise ScenarioError(f"vpn step failed: {exc}", line_no) from None
        self.report.append(f"vpn|assigned|{ip}" if ip is not None else "vpn|rejected")
        self._settle()

    def _op_envelope(self, rest: str, line_no: int) -> None:
        action, _, tail = rest.partition("|")
        kv = _parse_kv_tokens(tail.split("|") if tail else [], line_no)
        if action == "seal":
            text = _require(kv, "text", line_no)
            passphrase = _require(kv, "passphrase", line_no)
            sign_key = _require(kv, "sign_key", line_no).encode("utf-8")
            sealed = envelope_seal(text.encode("utf-8"), passphrase, sign_key)
            blob = write_envelope(sealed)
            self.envelope_bytes = blob
            self.envelope_passphrase = passphrase
            self.report.append(
                f"envelope|sealed|bytes={len(blob)}|hint={sealed.key_hint.hex()}")
            self.report.append(f"envelope|channel1|envelope_bytes={len(blob)}")
            self.report.append("envelope|channel2|passphrase_delivered=true")
        elif action == "open":
            if self.envelope_bytes is None:
                raise ScenarioError("no sealed envelope to open", line_no)
            passphrase = kv.get("passphrase", self.envelope_passphrase or "")
            sign_key = _require(kv, "sign_key", line_no).encode("utf-8")
            try:
                plaintext = envelope_open(read_envelope(self.envelope_bytes), passphrase, sign_key)
            except EnvelopeError as exc:
                self.report.append(f"envelope|open_failed|error={type(exc).__name__}")
            else:
                self.report.append(f"envelope|opened|text={plaintext.decode('utf-8')}")
        else:
            raise ScenarioError(f"envelope action must be seal or open, got {action!r}", line_no)


def run_scenario(script_text: str, gateway: Gateway | None = None,
                 base_dir: Path | str = ".") -> ScenarioOutcome:
    gw = gateway if gateway is not None else default_gateway()
    runner = _ScenarioRunner(gw, Path(base_dir))
    step_no = 0
    for line_no, raw in enumerate(script_text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        step_no += 1
        runner.run_line(step_no, line_no, line)
    report = "\n".join(runner.report)
    return ScenarioOutcome(report=report + "\n" if report else "", gateway=gw)


def run_scenario_file(path: Path | str, gateway: Gateway | None = None) -> ScenarioOutcome:
    script = Path(path)
    return run_scenario(script.read_text(), gateway=gateway, base_dir=script.parent)
