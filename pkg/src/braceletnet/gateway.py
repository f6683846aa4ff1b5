"""The gateway: one composition root wiring every defense layer together.

A Gateway owns a filter table, a scan detector, a brute-force guard, an
optional VPN address pool, reverse-proxy routes with payload inspection
rules, and the telemetry decryption path into the vitals engine. Packets
enter through pipeline_step, which:

1. evaluates the INPUT chain of the filter;
2. feeds the packet to the scan detector regardless of the verdict
   (dropped probes are still evidence), inserting a head-of-chain Drop
   rule when a detection reaches the block level;
3. for delivered packets only, runs the auth-log guard, the proxy payload
   rules and the telemetry decrypt-classify-alert path.

Every effect is appended to an event log of time|component|event|details
lines. Given equal inputs the log is byte-identical run to run, which is
what the golden-file tests pin down.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .bruteguard import (
    BruteGuard,
    JailConfig,
    LogParseError,
    parse_log_line,
    to_filter_rule,
)
from .crypto import FrameError, decrypt_frame
from .filtering import (
    Chain,
    Decision,
    FilterRule,
    RuleParseError,
    RuleTable,
    Verdict,
    load_rule_table,
)
from .net import (
    CidrBlock,
    Ipv4Address,
    LogicalClock,
    NetParseError,
    PacketEvent,
    parse_cidr,
    parse_packet_line,
)
from .scandet import (
    Detection,
    DetectorConfig,
    ScanDetector,
    Signature,
    SignatureParseError,
    auto_block,
    parse_signature_line,
)
from .vitals import (
    AlertEvent,
    BpThresholds,
    ContactGraph,
    InvalidReadingError,
    ReadingStore,
    Recipient,
    Role,
    VitalReading,
    classify,
    format_alert_line,
    process,
)


class ConfigError(ValueError):
    """A gateway config failed to parse."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ConfigSemanticError(ConfigError):
    """The config parsed but describes an impossible setup."""


class VpnError(ValueError):
    """VPN allocation failure."""


class PoolExhaustedError(VpnError):
    """No free address remains in the VPN pool."""


@dataclass(frozen=True)
class Credential:
    """An authentication credential as the VPN layer sees it: an opaque
    fingerprint plus the validity bit decided upstream."""

    fingerprint: bytes
    valid: bool


class VpnState:
    """Virtual address pool; the server takes base+1, clients base+2 up."""

    def __init__(self, pool: CidrBlock) -> None:
        first_client = pool.base.value + 2
        last_client = pool.broadcast_value() - 1
        if first_client > last_client:
            raise ConfigSemanticError(
                f"vpn pool {pool} leaves no assignable client addresses"
            )
        self.pool = pool
        self.server_ip = Ipv4Address(pool.base.value + 1)
        self._range = (first_client, last_client)
        self.assignments: dict[bytes, Ipv4Address] = {}

    def connect(self, credential: Credential) -> Ipv4Address | None:
        """Assign (or re-issue) a client address; None means rejected."""
        if not credential.valid:
            return None
        existing = self.assignments.get(credential.fingerprint)
        if existing is not None:
            return existing
        taken = {ip.value for ip in self.assignments.values()}
        for value in range(self._range[0], self._range[1] + 1):
            if value not in taken:
                ip = Ipv4Address(value)
                self.assignments[credential.fingerprint] = ip
                return ip
        raise PoolExhaustedError(f"vpn pool {self.pool} is full")


def vpn_connect(state: VpnState, credential: Credential) -> Ipv4Address | None:
    return state.connect(credential)


@dataclass(frozen=True)
class Route:
    prefix: str
    backend: str


class RouteTable:
    """Ordered first-prefix-match routing with a mandatory default."""

    def __init__(self, routes: list[Route], default_backend: str) -> None:
        self.routes = list(routes)
        self.default_backend = default_backend

    def route(self, target: str) -> str:
        for entry in self.routes:
            if target.startswith(entry.prefix):
                return entry.backend
        return self.default_backend


class L7Action(Enum):
    BLOCK = "block"
    LOG = "log"


@dataclass(frozen=True)
class L7Rule:
    """Payload pattern rule: block the request or allow it with a log."""

    id: str
    action: L7Action
    matcher: str  # "contains" or "prefix"
    pattern: bytes

    def __post_init__(self) -> None:
        if self.matcher not in ("contains", "prefix"):
            raise ValueError(f"matcher must be contains or prefix, not {self.matcher!r}")
        if not self.pattern:
            raise ValueError("pattern must be non-empty")

    def matches(self, payload: bytes) -> bool:
        if self.matcher == "contains":
            return self.pattern in payload
        return payload.startswith(self.pattern)


@dataclass
class L7Result:
    allowed: bool
    blocked_by: str | None = None
    log_hits: list[str] = field(default_factory=list)


def l7_inspect(payload: bytes, rules: list[L7Rule] | tuple[L7Rule, ...]) -> L7Result:
    result = L7Result(allowed=True)
    for rule in rules:
        if not rule.matches(payload):
            continue
        if rule.action is L7Action.BLOCK:
            result.allowed = False
            result.blocked_by = rule.id
            return result
        result.log_hits.append(rule.id)
    return result


def parse_l7_line(line: str) -> L7Rule:
    fields = line.split("|")
    if len(fields) != 3:
        raise ConfigError(f"expected id|action|matcher:pattern, got {line!r}")
    rule_id, action_s, matcher_s = fields
    try:
        action = L7Action(action_s)
    except ValueError:
        raise ConfigError(f"unknown l7 action {action_s!r}") from None
    kind, sep, pattern = matcher_s.partition(":")
    if not sep:
        raise ConfigError(f"bad matcher {matcher_s!r}")
    try:
        return L7Rule(id=rule_id, action=action, matcher=kind, pattern=pattern.encode("utf-8"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@dataclass
class PipelineResult:
    verdict: Verdict
    detections: list[Detection] = field(default_factory=list)
    bans: list = field(default_factory=list)
    new_rules: list[FilterRule] = field(default_factory=list)
    l7: L7Result | None = None
    reading_id: int | None = None
    alert: AlertEvent | None = None
    log_lines: list[str] = field(default_factory=list)


def _http_request_path(payload: bytes) -> str | None:
    """Pull the path out of an HTTP-shaped request line, if there is one."""
    try:
        first = payload.split(b"\r\n", 1)[0].split(b"\n", 1)[0].decode("ascii")
    except UnicodeDecodeError:
        return None
    parts = first.split(" ")
    if len(parts) >= 2 and parts[0].isalpha() and parts[0].isupper() and parts[1].startswith("/"):
        return parts[1]
    return None


class Gateway:
    """Composition root; build directly or via load_config/from_config_file."""

    def __init__(
        self,
        filter_table: RuleTable | None = None,
        detector: ScanDetector | None = None,
        guard: BruteGuard | None = None,
        vpn: VpnState | None = None,
        routes: RouteTable | None = None,
        l7_rules: tuple[L7Rule, ...] = (),
        services: dict[int, tuple[str, str]] | None = None,
        proxy_ports: frozenset[int] = frozenset(),
        telemetry_port: int | None = None,
        devices: dict[bytes, tuple[bytes, str]] | None = None,
        contacts: ContactGraph | None = None,
        thresholds: BpThresholds | None = None,
        auth_mode: str = "password",
        credentials: dict[str, str] | None = None,
    ) -> None:
        self.filter = filter_table or RuleTable()
        self.detector = detector or ScanDetector()
        self.guard = guard or BruteGuard()
        self.vpn = vpn
        self.routes = routes
        self.l7_rules = tuple(l7_rules)
        self.services = dict(services or {})
        self.proxy_ports = frozenset(proxy_ports)
        self.telemetry_port = telemetry_port
        self.devices = dict(devices or {})
        self.contacts = contacts or ContactGraph()
        self.thresholds = thresholds or BpThresholds()
        self.auth_mode = auth_mode
        self.credentials = dict(credentials or {})
        self.store = ReadingStore()
        self.outbox: list[str] = []
        self.logs: list[str] = []
        self.clock = LogicalClock()
        self._auto_blocked: set[Ipv4Address] = set()
        self.log(0, "gateway", "init",
                 f"rules={len(self.filter.rules)} jails={len(self.guard.jails)} "
                 f"services={len(self.services)} devices={len(self.devices)}")

    # --- logging ------------------------------------------------------------

    def log(self, time: int, component: str, event: str, details: str) -> str:
        line = f"{time}|{component}|{event}|{details}"
        self.logs.append(line)
        return line

    def log_text(self) -> str:
        return "\n".join(self.logs) + "\n"

    # --- credential oracle ----------------------------------------------------

    def check_credentials(self, user: str, password: str) -> bool:
        """Password-mode lookup; key-only mode never accepts a password."""
        if self.auth_mode != "password":
            return False
        return self.credentials.get(user) == password

    # --- the pipeline ---------------------------------------------------------

    def pipeline_step(self, packet: PacketEvent) -> PipelineResult:
        self.clock.advance_to(packet.time)
        log_start = len(self.logs)

        verdict = self.filter.evaluate(Chain.INPUT, packet)
        for tag in verdict.log_entries:
            self.log(packet.time, "filter", "log", f"tag={tag} src={packet.src} dst={packet.dst}")
        detail = (f"decision={verdict.decision.value} "
                  f"rule={verdict.matched_rule_index if verdict.matched_rule_index is not None else '-'} "
                  f"proto={packet.proto.value} src={packet.src} dst={packet.dst}")
        if verdict.decision is Decision.FORWARDED:
            detail += f" fwd={verdict.rewritten.dst}"
        elif verdict.decision is Decision.REJECTED:
            detail += f" notify={verdict.notification.proto.value}"
        self.log(packet.time, "filter", "verdict", detail)

        result = PipelineResult(verdict=verdict)
        self._observe_for_scans(packet, result)

        if verdict.decision in (Decision.ACCEPTED, Decision.FORWARDED):
            self._guard_auth(packet, result)
            if packet.dst.port in self.proxy_ports:
                self._proxy_inspect(packet, result)
            if self.telemetry_port is not None and packet.dst.port == self.telemetry_port:
                self._ingest_telemetry(packet, result)

        result.log_lines = self.logs[log_start:]
        return result

    def replay_packet_line(self, line: str) -> PipelineResult:
        return self.pipeline_step(parse_packet_line(line))

    def _observe_for_scans(self, packet: PacketEvent, result: PipelineResult) -> None:
        detection = self.detector.observe(packet)
        if detection is None:
            return
        result.detections.append(detection)
        cats = ",".join(sorted(c.value for c in detection.categories)) or "-"
        self.log(packet.time, "detector", "detect",
                 f"src={detection.src_ip} kind={detection.kind.value} dl={detection.danger_level} "
                 f"ports={detection.distinct_ports} hosts={detection.distinct_hosts} "
                 f"speed={detection.speed.value} cats={cats}")
        if detection.danger_level < self.detector.config.block_level:
            return
        if detection.src_ip in self._auto_blocked:
            return
        rule = auto_block(detection, self.detector.config)
        self.filter.insert_rule(0, rule)
        self._auto_blocked.add(detection.src_ip)
        result.new_rules.append(rule)
        self.log(packet.time, "detector", "block",
                 f"src={detection.src_ip}/32 dl={detection.danger_level} rule=0")

    def _guard_auth(self, packet: PacketEvent, result: PipelineResult) -> None:
        if not self.guard.jails or not packet.payload:
            return
        try:
            record = parse_log_line(packet.payload.decode("utf-8"))
        except (UnicodeDecodeError, LogParseError):
            return
        if record.service not in self.guard.jails:
            return
        self.log(packet.time, "authguard", "auth",
                 f"service={record.service} src={record.src_ip} user={record.user} "
                 f"outcome={record.outcome.value}")
        ban = self.guard.ingest(record)
        if ban is None:
            return
        result.bans.append(ban)
        rule = to_filter_rule(ban)
        self.filter.insert_rule(0, rule)
        result.new_rules.append(rule)
        expires = "never" if ban.expires is None else str(ban.expires)
        self.log(packet.time, "authguard", "ban",
                 f"ip={ban.ip} jail={ban.jail} expires={expires} rule=0")

    def _proxy_inspect(self, packet: PacketEvent, result: PipelineResult) -> None:
        l7 = l7_inspect(packet.payload, self.l7_rules)
        result.l7 = l7
        for rule_id in l7.log_hits:
            self.log(packet.time, "proxy", "l7_log", f"rule={rule_id} src={packet.src}")
        if not l7.allowed:
            self.log(packet.time, "proxy", "l7_block", f"rule={l7.blocked_by} src={packet.src}")
            return
        if self.routes is None:
            return
        path = _http_request_path(packet.payload)
        if path is not None:
            backend = self.routes.route(path)
            self.log(packet.time, "proxy", "route", f"path={path} backend={backend}")

    def _ingest_telemetry(self, packet: PacketEvent, result: PipelineResult) -> None:
        frame = None
        user_id = None
        for device_id, (key, user) in self.devices.items():
            try:
                candidate = decrypt_frame(packet.payload, key)
            except FrameError:
                continue
            if candidate.device_id != device_id:
                continue
            frame, user_id = candidate, user
            break
        if frame is None:
            self.log(packet.time, "vitals", "reject", f"reason=undecryptable src={packet.src}")
            return
        try:
            reading = VitalReading(
                user_id=user_id,
                time=frame.timestamp,
                systolic=frame.systolic,
                diastolic=frame.diastolic,
                pulse=frame.pulse,
            )
        except InvalidReadingError:
            self.log(packet.time, "vitals", "reject", f"reason=implausible src={packet.src}")
            return
        record_id, alert = process(self.store, self.contacts, reading,
                                   self.thresholds, alert_time=packet.time)
        result.reading_id = record_id
        severity = classify(reading.systolic, reading.diastolic, self.thresholds)
        self.log(packet.time, "vitals", "stored",
                 f"id={record_id} user={reading.user_id} sys={reading.systolic} "
                 f"dia={reading.diastolic} pulse={reading.pulse} severity={severity.value}")
        if alert is not None:
            result.alert = alert
            self.outbox.append(format_alert_line(alert))
            self.log(packet.time, "vitals", "alert",
                     f"user={alert.user_id} severity={alert.severity.value} "
                     f"recipients={len(alert.recipients)} channel={alert.channel}")

    # --- vpn and envelope hooks (scenario-facing) -----------------------------

    def vpn_connect(self, credential: Credential, time: int | None = None) -> Ipv4Address | None:
        if self.vpn is None:
            raise VpnError("no vpn pool configured")
        t = self.clock.now if time is None else self.clock.advance_to(time)
        ip = self.vpn.connect(credential)
        fp = credential.fingerprint.hex()[:16]
        if ip is None:
            self.log(t, "vpn", "reject", f"fp={fp}")
        else:
            self.log(t, "vpn", "assign", f"fp={fp} addr={ip}")
        return ip


# --- config ------------------------------------------------------------------

_KV_SECTIONS = {
    "detector": {"window_ms", "sweep_threshold", "block_level", "level_thresholds"},
    "jail": {"service", "findtime_ms", "maxretry", "bantime"},
    "vpn": {"pool"},
    "proxy": {"ports"},
    "telemetry": {"port"},
    "vitals": {"systolic", "diastolic"},
    "auth": {"mode", "credentials"},
}
_RAW_SECTIONS = {"filter", "signatures", "l7", "routes", "services", "devices", "contacts"}


def _split_sections(text: str) -> dict[str, list[tuple[int, str]]]:
    sections: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if name not in _KV_SECTIONS and name not in _RAW_SECTIONS:
                raise ConfigError(f"unknown section [{name}]", line_no)
            if name != "jail" and name in sections:
                raise ConfigError(f"duplicate section [{name}]", line_no)
            # repeated [jail] sections each declare one jail
            current = name if name != "jail" else f"jail#{line_no}"
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ConfigError(f"content before any section: {line!r}", line_no)
        sections[current].append((line_no, line))
    return sections


def _parse_kv(section: str, lines: list[tuple[int, str]], allowed: set[str]) -> dict[str, tuple[int, str]]:
    out: dict[str, tuple[int, str]] = {}
    for line_no, line in lines:
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"[{section}] expected key=value, got {line!r}", line_no)
        if key not in allowed:
            raise ConfigError(f"[{section}] unknown key {key!r}", line_no)
        if key in out:
            raise ConfigError(f"[{section}] duplicate key {key!r}", line_no)
        out[key] = (line_no, value)
    return out


def _int_value(section: str, key: str, entry: tuple[int, str]) -> int:
    line_no, value = entry
    if not value.isdigit():
        raise ConfigError(f"[{section}] {key} must be an integer, got {value!r}", line_no)
    return int(value)


def load_config(text: str) -> Gateway:
    """Build a gateway from sectioned config text."""
    sections = _split_sections(text)

    filter_table = RuleTable()
    if "filter" in sections:
        body = "\n".join(line for _, line in sections["filter"])
        try:
            filter_table = load_rule_table(body)
        except RuleParseError as exc:
            raise ConfigError(f"[filter] {exc}") from None

    signatures: tuple[Signature, ...] = ()
    if "signatures" in sections:
        sigs = []
        for line_no, line in sections["signatures"]:
            try:
                sigs.append(parse_signature_line(line))
            except SignatureParseError as exc:
                raise ConfigError(f"[signatures] {exc}", line_no) from None
        signatures = tuple(sigs)

    detector_config = DetectorConfig()
    if "detector" in sections:
        kv = _parse_kv("detector", sections["detector"], _KV_SECTIONS["detector"])
        kwargs = {}
        if "window_ms" in kv:
            kwargs["window_ms"] = _int_value("detector", "window_ms", kv["window_ms"])
        if "sweep_threshold" in kv:
            kwargs["sweep_threshold"] = _int_value("detector", "sweep_threshold", kv["sweep_threshold"])
        if "block_level" in kv:
            kwargs["block_level"] = _int_value("detector", "block_level", kv["block_level"])
        if "level_thresholds" in kv:
            line_no, value = kv["level_thresholds"]
            try:
                kwargs["level_thresholds"] = tuple(int(v) for v in value.split(","))
            except ValueError:
                raise ConfigError(f"[detector] bad level_thresholds {value!r}", line_no) from None
        try:
            detector_config = DetectorConfig(**kwargs)
        except ValueError as exc:
            raise ConfigSemanticError(f"[detector] {exc}") from None

    jail_configs: list[JailConfig] = []
    for name, lines in sections.items():
        if not name.startswith("jail#"):
            continue
        kv = _parse_kv("jail", lines, _KV_SECTIONS["jail"])
        if "service" not in kv:
            raise ConfigError(f"[jail] missing service key", lines[0][0] if lines else None)
        bantime_ms: int | None = None
        if "bantime" in kv:
            line_no, value = kv["bantime"]
            if value == "permanent":
                bantime_ms = None
            elif value.isdigit():
                bantime_ms = int(value)
            else:
                raise ConfigError(f"[jail] bantime must be 'permanent' or ms, got {value!r}", line_no)
        try:
            jail_configs.append(JailConfig(
                service=kv["service"][1],
                findtime_ms=_int_value("jail", "findtime_ms", kv["findtime_ms"]) if "findtime_ms" in kv else 600_000,
                maxretry=_int_value("jail", "maxretry", kv["maxretry"]) if "maxretry" in kv else 5,
                bantime_ms=bantime_ms,
            ))
        except ValueError as exc:
            raise ConfigSemanticError(f"[jail] {exc}") from None

    vpn = None
    if "vpn" in sections:
        kv = _parse_kv("vpn", sections["vpn"], _KV_SECTIONS["vpn"])
        if "pool" not in kv:
            raise ConfigError("[vpn] missing pool key")
        line_no, value = kv["pool"]
        try:
            pool = parse_cidr(value)
        except NetParseError as exc:
            raise ConfigError(f"[vpn] bad pool: {exc}", line_no) from None
        vpn = VpnState(pool)  # may raise ConfigSemanticError

    routes = None
    if "routes" in sections:
        entries: list[Route] = []
        default_backend = None
        for line_no, line in sections["routes"]:
            key, sep, value = line.partition("=")
            if not sep or not key or not value:
                raise ConfigError(f"[routes] expected prefix=backend, got {line!r}", line_no)
            if key == "default":
                if default_backend is not None:
                    raise ConfigError("[routes] duplicate default", line_no)
                default_backend = value
            else:
                entries.append(Route(prefix=key, backend=value))
        if default_backend is None:
            raise ConfigSemanticError("[routes] missing default backend")
        routes = RouteTable(entries, default_backend)

    l7_rules: tuple[L7Rule, ...] = ()
    if "l7" in sections:
        rules = []
        for line_no, line in sections["l7"]:
            try:
                rules.append(parse_l7_line(line))
            except ConfigError as exc:
                raise ConfigError(f"[l7] {exc}", line_no) from None
        l7_rules = tuple(rules)

    services: dict[int, tuple[str, str]] = {}
    if "services" in sections:
        for line_no, line in sections["services"]:
            port_s, sep, value = line.partition("=")
            name, sep2, banner = value.partition(":")
            if not sep or not sep2 or not port_s.isdigit() or not name or not banner:
                raise ConfigError(f"[services] expected port=name:banner, got {line!r}", line_no)
            port = int(port_s)
            if port > 65535:
                raise ConfigError(f"[services] port {port} out of range", line_no)
            if port in services:
                raise ConfigSemanticError(f"[services] duplicate port {port}")
            services[port] = (name, banner)

    proxy_ports: frozenset[int] = frozenset()
    if "proxy" in sections:
        kv = _parse_kv("proxy", sections["proxy"], _KV_SECTIONS["proxy"])
        if "ports" in kv:
            line_no, value = kv["ports"]
            try:
                proxy_ports = frozenset(int(v) for v in value.split(","))
            except ValueError:
                raise ConfigError(f"[proxy] bad ports {value!r}", line_no) from None

    telemetry_port = None
    if "telemetry" in sections:
        kv = _parse_kv("telemetry", sections["telemetry"], _KV_SECTIONS["telemetry"])
        if "port" in kv:
            telemetry_port = _int_value("telemetry", "port", kv["port"])

    devices: dict[bytes, tuple[bytes, str]] = {}
    if "devices" in sections:
        for line_no, line in sections["devices"]:
            id_hex, sep, value = line.partition("=")
            key_hex, sep2, user = value.partition(",")
            if not sep or not sep2 or not user:
                raise ConfigError(f"[devices] expected idhex=keyhex,user, got {line!r}", line_no)
            try:
                device_id = bytes.fromhex(id_hex)
                key = bytes.fromhex(key_hex)
            except ValueError:
                raise ConfigError(f"[devices] bad hex in {line!r}", line_no) from None
            if len(device_id) != 8:
                raise ConfigSemanticError(f"[devices] device id must be 8 bytes, got {len(device_id)}")
            if len(key) != 16:
                raise ConfigSemanticError(f"[devices] key must be 16 bytes, got {len(key)}")
            if device_id in devices:
                raise ConfigSemanticError(f"[devices] duplicate device id {id_hex}")
            devices[device_id] = (key, user)

    contacts = ContactGraph()
    if "contacts" in sections:
        for line_no, line in sections["contacts"]:
            user, sep, value = line.partition("=")
            if not sep or not user or not value:
                raise ConfigError(f"[contacts] expected user=Role:addr,..., got {line!r}", line_no)
            for part in value.split(","):
                role_s, sep2, address = part.partition(":")
                if not sep2:
                    raise ConfigError(f"[contacts] bad entry {part!r}", line_no)
                try:
                    role = Role(role_s)
                except ValueError:
                    raise ConfigError(f"[contacts] unknown role {role_s!r}", line_no) from None
                try:
                    contacts.add(user, Recipient(role, address))
                except ValueError as exc:
                    raise ConfigSemanticError(f"[contacts] {exc}") from None

    thresholds = BpThresholds()
    if "vitals" in sections:
        kv = _parse_kv("vitals", sections["vitals"], _KV_SECTIONS["vitals"])
        kwargs = {}
        for key in ("systolic", "diastolic"):
            if key in kv:
                line_no, value = kv[key]
                parts = value.split(",")
                if len(parts) != 5 or not all(p.isdigit() for p in parts):
                    raise ConfigError(f"[vitals] {key} needs 5 integers, got {value!r}", line_no)
                kwargs[key] = tuple(int(p) for p in parts)
        try:
            thresholds = BpThresholds(**kwargs)
        except ValueError as exc:
            raise ConfigSemanticError(f"[vitals] {exc}") from None

    auth_mode = "password"
    credentials: dict[str, str] = {}
    if "auth" in sections:
        kv = _parse_kv("auth", sections["auth"], _KV_SECTIONS["auth"])
        if "mode" in kv:
            line_no, value = kv["mode"]
            if value not in ("password", "keyonly"):
                raise ConfigError(f"[auth] mode must be password or keyonly, got {value!r}", line_no)
            auth_mode = value
        if "credentials" in kv:
            line_no, value = kv["credentials"]
            for pair in value.split(","):
                user, sep, password = pair.partition(":")
                if not sep or not user or not password:
                    raise ConfigError(f"[auth] bad credential pair {pair!r}", line_no)
                if user in credentials:
                    raise ConfigSemanticError(f"[auth] duplicate user {user!r}")
                credentials[user] = password

    return Gateway(
        filter_table=filter_table,
        detector=ScanDetector(detector_config, signatures),
        guard=BruteGuard(jail_configs),
        vpn=vpn,
        routes=routes,
        l7_rules=l7_rules,
        services=services,
        proxy_ports=proxy_ports,
        telemetry_port=telemetry_port,
        devices=devices,
        contacts=contacts,
        thresholds=thresholds,
        auth_mode=auth_mode,
        credentials=credentials,
    )


def from_config_file(path: Path | str) -> Gateway:
    return load_config(Path(path).read_text())


def default_config_path() -> Path:
    return Path(__file__).parent / "fixtures" / "default.conf"


def default_gateway() -> Gateway:
    return from_config_file(default_config_path())
