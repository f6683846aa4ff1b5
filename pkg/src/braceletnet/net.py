"""Core network vocabulary: addresses, CIDR blocks, packets, logical time.

Addresses are value objects over a 32-bit integer so containment checks and
pool arithmetic stay plain int math. Parsing is strict: only canonical dotted
quads round-trip, which keeps every serialized artifact byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class NetParseError(ValueError):
    """Base class for errors raised while parsing network text forms."""


class AddressSyntaxError(NetParseError):
    """Text is not a canonical dotted quad or CIDR form."""


class OctetRangeError(NetParseError):
    """A numeric octet falls outside 0..255."""


class PrefixRangeError(NetParseError):
    """A CIDR prefix length falls outside 0..32."""


class PacketLineError(NetParseError):
    """A serialized packet line is malformed."""


@dataclass(frozen=True, order=True)
class Ipv4Address:
    """An IPv4 address held as an unsigned 32-bit integer."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= 0xFFFFFFFF:
            raise OctetRangeError(f"address value out of range: {self.value}")

    @classmethod
    def parse(cls, text: str) -> Ipv4Address:
        parts = text.split(".")
        if len(parts) != 4:
            raise AddressSyntaxError(f"not a dotted quad: {text!r}")
        value = 0
        for part in parts:
            if not part.isdigit() or str(int(part)) != part:
                raise AddressSyntaxError(f"bad octet {part!r} in {text!r}")
            octet = int(part)
            if octet > 255:
                raise OctetRangeError(f"octet {octet} out of range in {text!r}")
            value = (value << 8) | octet
        return cls(value)

    @classmethod
    def from_octets(cls, a: int, b: int, c: int, d: int) -> Ipv4Address:
        for octet in (a, b, c, d):
            if not 0 <= octet <= 255:
                raise OctetRangeError(f"octet {octet} out of range")
        return cls((a << 24) | (b << 16) | (c << 8) | d)

    @property
    def octets(self) -> tuple[int, int, int, int]:
        v = self.value
        return ((v >> 24) & 0xFF, (v >> 16) & 0xFF, (v >> 8) & 0xFF, v & 0xFF)

    def __str__(self) -> str:
        return ".".join(str(o) for o in self.octets)


def _mask_for(prefix_len: int) -> int:
    if prefix_len == 0:
        return 0
    return (0xFFFFFFFF << (32 - prefix_len)) & 0xFFFFFFFF


@dataclass(frozen=True)
class CidrBlock:
    """A normalized CIDR block; host bits below the prefix are always zero."""

    base: Ipv4Address
    prefix_len: int

    def __post_init__(self) -> None:
        if not 0 <= self.prefix_len <= 32:
            raise PrefixRangeError(f"prefix length out of range: {self.prefix_len}")
        normalized = self.base.value & _mask_for(self.prefix_len)
        if normalized != self.base.value:
            object.__setattr__(self, "base", Ipv4Address(normalized))

    @property
    def mask(self) -> int:
        return _mask_for(self.prefix_len)

    def contains(self, ip: Ipv4Address) -> bool:
        return (ip.value & self.mask) == self.base.value

    def broadcast_value(self) -> int:
        """Highest address value inside the block."""
        return self.base.value | (~self.mask & 0xFFFFFFFF)

    def __str__(self) -> str:
        return f"{self.base}/{self.prefix_len}"


def parse_cidr(text: str) -> CidrBlock:
    """Parse "a.b.c.d/len" into a normalized block.

    Raises AddressSyntaxError, OctetRangeError or PrefixRangeError depending
    on which part of the text is broken.
    """
    head, sep, tail = text.partition("/")
    if not sep:
        raise AddressSyntaxError(f"missing prefix length: {text!r}")
    base = Ipv4Address.parse(head)
    if not tail.isdigit() or str(int(tail)) != tail:
        raise AddressSyntaxError(f"bad prefix length {tail!r} in {text!r}")
    prefix_len = int(tail)
    if prefix_len > 32:
        raise PrefixRangeError(f"prefix length {prefix_len} out of range in {text!r}")
    return CidrBlock(base, prefix_len)


def cidr_contains(block: CidrBlock, ip: Ipv4Address) -> bool:
    return block.contains(ip)


class Protocol(Enum):
    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"


class Interface(Enum):
    PUBLIC = "public"
    PRIVATE = "private"
    VPN_TUN = "vpntun"


class TcpFlag(Enum):
    SYN = "S"
    ACK = "A"
    FIN = "F"
    RST = "R"


# Canonical on-wire ordering for flag letters.
_FLAG_ORDER = (TcpFlag.SYN, TcpFlag.ACK, TcpFlag.FIN, TcpFlag.RST)


@dataclass(frozen=True)
class Endpoint:
    ip: Ipv4Address
    port: int

    def __post_init__(self) -> None:
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")

    def __str__(self) -> str:
        return f"{self.ip}:{self.port}"


@dataclass(frozen=True)
class PacketEvent:
    """One observed packet at a logical millisecond timestamp.

    tcp_flags is a frozenset for TCP packets (possibly empty) and None for
    every other protocol; the constructor enforces that pairing.
    """

    time: int
    src: Endpoint
    dst: Endpoint
    proto: Protocol
    iface: Interface
    tcp_flags: frozenset[TcpFlag] | None = None
    payload: bytes = b""

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValueError(f"negative packet time: {self.time}")
        if (self.proto is Protocol.TCP) != (self.tcp_flags is not None):
            raise ValueError("tcp_flags must be present exactly for TCP packets")

    @classmethod
    def tcp(cls, time: int, iface: Interface, src: tuple[str, int],
            dst: tuple[str, int], flags: frozenset[TcpFlag],
            payload: bytes = b"") -> "PacketEvent":
        """Build a TCP packet from (ip_string, port) endpoint pairs."""
        return cls(
            time=time,
            src=Endpoint(Ipv4Address.parse(src[0]), src[1]),
            dst=Endpoint(Ipv4Address.parse(dst[0]), dst[1]),
            proto=Protocol.TCP,
            iface=iface,
            tcp_flags=flags,
            payload=payload,
        )


def format_flags(flags: frozenset[TcpFlag] | None) -> str:
    if flags is None:
        return "-"
    if not flags:
        return "."
    return "".join(f.value for f in _FLAG_ORDER if f in flags)


def parse_flags(text: str, proto: Protocol) -> frozenset[TcpFlag] | None:
    if text == "-":
        if proto is Protocol.TCP:
            raise PacketLineError("TCP packet with '-' flags field")
        return None
    if proto is not Protocol.TCP:
        raise PacketLineError(f"flags {text!r} on non-TCP packet")
    if text == ".":
        return frozenset()
    flags = set()
    by_letter = {f.value: f for f in TcpFlag}
    for letter in text:
        if letter not in by_letter or by_letter[letter] in flags:
            raise PacketLineError(f"bad flags field {text!r}")
        flags.add(by_letter[letter])
    return frozenset(flags)


def _parse_endpoint(text: str) -> Endpoint:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise PacketLineError(f"bad endpoint {text!r}")
    port_no = int(port)
    if port_no > 65535:
        raise PacketLineError(f"port out of range in endpoint {text!r}")
    return Endpoint(Ipv4Address.parse(host), port_no)


def format_packet_line(packet: PacketEvent) -> str:
    """Serialize to time|iface|proto|src|dst|flags|payload_hex."""
    return "|".join(
        (
            str(packet.time),
            packet.iface.value,
            packet.proto.value,
            str(packet.src),
            str(packet.dst),
            format_flags(packet.tcp_flags),
            packet.payload.hex(),
        )
    )


def parse_packet_line(line: str) -> PacketEvent:
    fields = line.split("|")
    if len(fields) != 7:
        raise PacketLineError(f"expected 7 fields, got {len(fields)}")
    time_s, iface_s, proto_s, src_s, dst_s, flags_s, payload_s = fields
    if not time_s.isdigit():
        raise PacketLineError(f"bad time field {time_s!r}")
    try:
        iface = Interface(iface_s)
    except ValueError:
        raise PacketLineError(f"unknown interface {iface_s!r}") from None
    try:
        proto = Protocol(proto_s)
    except ValueError:
        raise PacketLineError(f"unknown protocol {proto_s!r}") from None
    try:
        payload = bytes.fromhex(payload_s)
    except ValueError:
        raise PacketLineError(f"bad payload hex {payload_s!r}") from None
    try:
        src = _parse_endpoint(src_s)
        dst = _parse_endpoint(dst_s)
    except NetParseError as exc:
        raise PacketLineError(str(exc)) from None
    return PacketEvent(
        time=int(time_s),
        src=src,
        dst=dst,
        proto=proto,
        iface=iface,
        tcp_flags=parse_flags(flags_s, proto),
        payload=payload,
    )


class ClockError(ValueError):
    """Logical time tried to move backwards."""


@dataclass
class LogicalClock:
    """Monotone millisecond counter driving every simulated component."""

    now: int = 0

    def advance(self, delta_ms: int) -> int:
        if delta_ms < 0:
            raise ClockError(f"cannot advance by {delta_ms} ms")
        self.now += delta_ms
        return self.now

    def advance_to(self, t: int) -> int:
        if t < self.now:
            raise ClockError(f"cannot move clock back from {self.now} to {t}")
        self.now = t
        return self.now
