"""First-match packet filter with per-chain policies and destination NAT.

Rules live in one ordered table; each rule is pinned to a chain. Evaluation
walks the table top to bottom, collects Log targets without terminating, and
stops at the first Accept/Drop/Reject/Forward hit. A packet that matches no
terminal rule falls through to the chain policy.

Reject differs from Drop by emitting a synthetic notification back to the
sender: a TCP RST for TCP packets, an ICMP-unreachable stand-in otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from .net import (
    CidrBlock,
    Endpoint,
    Interface,
    Ipv4Address,
    NetParseError,
    PacketEvent,
    Protocol,
    TcpFlag,
    parse_cidr,
)


class Chain(Enum):
    INPUT = "INPUT"
    FORWARD = "FORWARD"
    OUTPUT = "OUTPUT"


class TargetKind(Enum):
    ACCEPT = "ACCEPT"
    DROP = "DROP"
    REJECT = "REJECT"
    LOG = "LOG"
    FORWARD = "FORWARD"


class Decision(Enum):
    ACCEPTED = "accepted"
    DROPPED = "dropped"
    REJECTED = "rejected"
    FORWARDED = "forwarded"


_POLICY_DECISION = {TargetKind.ACCEPT: Decision.ACCEPTED, TargetKind.DROP: Decision.DROPPED}
_TERMINAL_DECISION = {
    TargetKind.ACCEPT: Decision.ACCEPTED,
    TargetKind.DROP: Decision.DROPPED,
    TargetKind.REJECT: Decision.REJECTED,
    TargetKind.FORWARD: Decision.FORWARDED,
}


class RuleError(ValueError):
    """A rule or target was built or used against its own preconditions."""


class RuleParseError(ValueError):
    """A rule file line is malformed."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class RuleTarget:
    """What happens on a match. Log carries a tag, Forward a rewrite address."""

    kind: TargetKind
    log_tag: str | None = None
    forward_to: Ipv4Address | None = None

    def __post_init__(self) -> None:
        if self.kind is TargetKind.LOG and not self.log_tag:
            raise RuleError("Log target needs a tag")
        if self.kind is TargetKind.FORWARD and self.forward_to is None:
            raise RuleError("Forward target needs a destination address")
        if self.kind is not TargetKind.LOG and self.log_tag is not None:
            raise RuleError("only Log targets carry a tag")
        if self.kind is not TargetKind.FORWARD and self.forward_to is not None:
            raise RuleError("only Forward targets carry a destination")

    @property
    def is_terminal(self) -> bool:
        return self.kind is not TargetKind.LOG

    @classmethod
    def accept(cls) -> RuleTarget:
        return cls(TargetKind.ACCEPT)

    @classmethod
    def drop(cls) -> RuleTarget:
        return cls(TargetKind.DROP)

    @classmethod
    def reject(cls) -> RuleTarget:
        return cls(TargetKind.REJECT)

    @classmethod
    def log(cls, tag: str) -> RuleTarget:
        return cls(TargetKind.LOG, log_tag=tag)

    @classmethod
    def forward(cls, to: Ipv4Address) -> RuleTarget:
        return cls(TargetKind.FORWARD, forward_to=to)


@dataclass(frozen=True)
class MatchSpec:
    """Packet predicate; None in any field means wildcard."""

    src: CidrBlock | None = None
    dst: CidrBlock | None = None
    proto: Protocol | None = None
    dst_port_range: tuple[int, int] | None = None
    iface: Interface | None = None

    def __post_init__(self) -> None:
        if self.dst_port_range is not None:
            lo, hi = self.dst_port_range
            if not (0 <= lo <= hi <= 65535):
                raise RuleError(f"bad port range {lo}-{hi}")

    def matches(self, packet: PacketEvent) -> bool:
        if self.src is not None and not self.src.contains(packet.src.ip):
            return False
        if self.dst is not None and not self.dst.contains(packet.dst.ip):
            return False
        if self.proto is not None and packet.proto is not self.proto:
            return False
        if self.dst_port_range is not None:
            lo, hi = self.dst_port_range
            if not lo <= packet.dst.port <= hi:
                return False
        if self.iface is not None and packet.iface is not self.iface:
            return False
        return True


@dataclass(frozen=True)
class FilterRule:
    chain: Chain
    match: MatchSpec
    target: RuleTarget
    comment: str = ""

    def __post_init__(self) -> None:
        if "|" in self.comment or "\n" in self.comment:
            raise RuleError("rule comment must not contain '|' or newlines")


@dataclass
class Verdict:
    """Outcome of evaluating one packet against one chain."""

    decision: Decision
    matched_rule_index: int | None = None
    rewritten: PacketEvent | None = None
    log_entries: list[str] = field(default_factory=list)
    notification: PacketEvent | None = None


def nat_forward(rule: FilterRule, packet: PacketEvent) -> PacketEvent:
    """Rewrite the destination address per a Forward rule; port is kept."""
    if rule.target.kind is not TargetKind.FORWARD:
        raise RuleError("nat_forward needs a Forward rule")
    if not rule.match.matches(packet):
        raise RuleError("nat_forward called with a non-matching packet")
    new_dst = Endpoint(rule.target.forward_to, packet.dst.port)
    return replace(packet, dst=new_dst)


def _reject_notification(packet: PacketEvent) -> PacketEvent:
    """Synthesize the sender-visible refusal: TCP gets RST, the rest ICMP."""
    if packet.proto is Protocol.TCP:
        return PacketEvent(
            time=packet.time,
            src=packet.dst,
            dst=packet.src,
            proto=Protocol.TCP,
            iface=packet.iface,
            tcp_flags=frozenset({TcpFlag.RST, TcpFlag.ACK}),
        )
    return PacketEvent(
        time=packet.time,
        src=packet.dst,
        dst=packet.src,
        proto=Protocol.ICMP,
        iface=packet.iface,
    )


class RuleTable:
    """Ordered rule list plus a default policy per chain."""

    def __init__(self, policies: dict[Chain, TargetKind] | None = None) -> None:
        self.rules: list[FilterRule] = []
        self.policies: dict[Chain, TargetKind] = {chain: TargetKind.ACCEPT for chain in Chain}
        if policies:
            for chain, kind in policies.items():
                self.set_policy(chain, kind)

    def set_policy(self, chain: Chain, kind: TargetKind) -> None:
        if kind not in _POLICY_DECISION:
            raise RuleError(f"policy must be ACCEPT or DROP, not {kind.value}")
        self.policies[chain] = kind

    def append(self, rule: FilterRule) -> None:
        self.rules.append(rule)

    def insert_rule(self, position: int, rule: FilterRule) -> None:
        if not 0 <= position <= len(self.rules):
            raise IndexError(f"rule position {position} out of range 0..{len(self.rules)}")
        self.rules.insert(position, rule)

    def evaluate(self, chain: Chain, packet: PacketEvent) -> Verdict:
        logs: list[str] = []
        for index, rule in enumerate(self.rules):
            if rule.chain is not chain or not rule.match.matches(packet):
                continue
            if rule.target.kind is TargetKind.LOG:
                logs.append(rule.target.log_tag)
                continue
            verdict = Verdict(
                decision=_TERMINAL_DECISION[rule.target.kind],
                matched_rule_index=index,
                log_entries=logs,
            )
            if rule.target.kind is TargetKind.FORWARD:
                verdict.rewritten = nat_forward(rule, packet)
            elif rule.target.kind is TargetKind.REJECT:
                verdict.notification = _reject_notification(packet)
            return verdict
        return Verdict(decision=_POLICY_DECISION[self.policies[chain]], log_entries=logs)


def evaluate(table: RuleTable, chain: Chain, packet: PacketEvent) -> Verdict:
    return table.evaluate(chain, packet)


# --- rule file format ------------------------------------------------------
#
# policy|INPUT=ACCEPT|FORWARD=DROP|OUTPUT=ACCEPT
# chain|src_cidr|dst_cidr|proto|dst_ports|iface|target[:arg]|comment
#
# '*' is the wildcard in any match column; dst_ports is N or LO-HI.


def _parse_target(text: str) -> RuleTarget:
    kind_s, sep, arg = text.partition(":")
    if kind_s == "ACCEPT" and not sep:
        return RuleTarget.accept()
    if kind_s == "DROP" and not sep:
        return RuleTarget.drop()
    if kind_s == "REJECT" and not sep:
        return RuleTarget.reject()
    if kind_s == "LOG" and sep and arg:
        return RuleTarget.log(arg)
    if kind_s == "FORWARD" and sep:
        try:
            return RuleTarget.forward(Ipv4Address.parse(arg))
        except NetParseError as exc:
            raise RuleParseError(f"bad forward address {arg!r}: {exc}") from None
    raise RuleParseError(f"bad target {text!r}")


def _format_target(target: RuleTarget) -> str:
    if target.kind is TargetKind.LOG:
        return f"LOG:{target.log_tag}"
    if target.kind is TargetKind.FORWARD:
        return f"FORWARD:{target.forward_to}"
    return target.kind.value


def _parse_ports(text: str) -> tuple[int, int] | None:
    if text == "*":
        return None
    lo_s, sep, hi_s = text.partition("-")
    if not lo_s.isdigit() or (sep and not hi_s.isdigit()):
        raise RuleParseError(f"bad port field {text!r}")
    lo = int(lo_s)
    hi = int(hi_s) if sep else lo
    if not (0 <= lo <= hi <= 65535):
        raise RuleParseError(f"bad port range {text!r}")
    return (lo, hi)


def parse_rule_line(line: str) -> FilterRule:
    fields = line.split("|")
    if len(fields) != 8:
        raise RuleParseError(f"expected 8 fields, got {len(fields)}")
    chain_s, src_s, dst_s, proto_s, ports_s, iface_s, target_s, comment = fields
    try:
        chain = Chain(chain_s)
    except ValueError:
        raise RuleParseError(f"unknown chain {chain_s!r}") from None
    try:
        src = None if src_s == "*" else parse_cidr(src_s)
        dst = None if dst_s == "*" else parse_cidr(dst_s)
    except NetParseError as exc:
        raise RuleParseError(str(exc)) from None
    if proto_s == "*":
        proto = None
    else:
        try:
            proto = Protocol(proto_s)
        except ValueError:
            raise RuleParseError(f"unknown protocol {proto_s!r}") from None
    if iface_s == "*":
        iface = None
    else:
        try:
            iface = Interface(iface_s)
        except ValueError:
            raise RuleParseError(f"unknown interface {iface_s!r}") from None
    match = MatchSpec(src=src, dst=dst, proto=proto, dst_port_range=_parse_ports(ports_s), iface=iface)
    return FilterRule(chain=chain, match=match, target=_parse_target(target_s), comment=comment)


def format_rule_line(rule: FilterRule) -> str:
    m = rule.match
    if m.dst_port_range is None:
        ports = "*"
    elif m.dst_port_range[0] == m.dst_port_range[1]:
        ports = str(m.dst_port_range[0])
    else:
        ports = f"{m.dst_port_range[0]}-{m.dst_port_range[1]}"
    return "|".join(
        (
            rule.chain.value,
            str(m.src) if m.src else "*",
            str(m.dst) if m.dst else "*",
            m.proto.value if m.proto else "*",
            ports,
            m.iface.value if m.iface else "*",
            _format_target(rule.target),
            rule.comment,
        )
    )


def _parse_policy_line(line: str, table: RuleTable, line_no: int) -> None:
    for part in line.split("|")[1:]:
        chain_s, sep, kind_s = part.partition("=")
        if not sep:
            raise RuleParseError(f"bad policy clause {part!r}", line_no)
        try:
            chain = Chain(chain_s)
            kind = TargetKind(kind_s)
        except ValueError:
            raise RuleParseError(f"bad policy clause {part!r}", line_no) from None
        try:
            table.set_policy(chain, kind)
        except RuleError as exc:
            raise RuleParseError(str(exc), line_no) from None


def load_rule_table(text: str) -> RuleTable:
    """Parse a rule file; '#' comments and blank lines are skipped."""
    table = RuleTable()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("policy|"):
            _parse_policy_line(line, table, line_no)
            continue
        try:
            table.append(parse_rule_line(line))
        except RuleParseError as exc:
            raise RuleParseError(str(exc), line_no) from None
    return table


def dump_rule_table(table: RuleTable) -> str:
    policy = "policy|" + "|".join(f"{c.value}={table.policies[c].value}" for c in Chain)
    lines = [policy] + [format_rule_line(rule) for rule in table.rules]
    return "\n".join(lines) + "\n"
