"""Blood-pressure classification, reading storage and alert fan-out.

Severity is decided per pressure value on a six-step ladder (severe
hypotension up through critical hypertension) and the pair reports the more
worrying of the two bands, so either value alone can escalate a reading.
Alert-worthy severities (Critical, SevereHypotension) fan out to every care
contact registered for the wearer over the SMS channel.

The reading store is append-only and optionally file-backed with one
pipe-separated line per reading.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

logger = logging.getLogger(__name__)


class Severity(Enum):
    SEVERE_HYPOTENSION = "SevereHypotension"
    HYPOTENSION = "Hypotension"
    NORMAL = "Normal"
    ELEVATED = "Elevated"
    HYPERTENSION = "Hypertension"
    CRITICAL = "Critical"


# How worrying each band is, for combining the two pressure verdicts.
_CONCERN = {
    Severity.NORMAL: 0,
    Severity.ELEVATED: 1,
    Severity.HYPOTENSION: 2,
    Severity.HYPERTENSION: 3,
    Severity.SEVERE_HYPOTENSION: 4,
    Severity.CRITICAL: 5,
}

ALERT_SEVERITIES = frozenset({Severity.CRITICAL, Severity.SEVERE_HYPOTENSION})


@dataclass(frozen=True)
class BpThresholds:
    """Cut points for the two ladders; each list reads as upper bounds for
    SevereHypotension, Hypotension, Normal, Elevated, Hypertension."""

    systolic: tuple[int, int, int, int, int] = (80, 90, 130, 140, 160)
    diastolic: tuple[int, int, int, int, int] = (50, 60, 85, 90, 110)

    def __post_init__(self) -> None:
        for name in ("systolic", "diastolic"):
            cuts = getattr(self, name)
            if list(cuts) != sorted(set(cuts)) or cuts[0] <= 0:
                raise ValueError(f"{name} thresholds must be positive and strictly increasing")


DEFAULT_THRESHOLDS = BpThresholds()

_LADDER = (
    Severity.SEVERE_HYPOTENSION,
    Severity.HYPOTENSION,
    Severity.NORMAL,
    Severity.ELEVATED,
    Severity.HYPERTENSION,
    Severity.CRITICAL,
)


def _band(value: int, cuts: tuple[int, int, int, int, int]) -> Severity:
    for cut, severity in zip(cuts, _LADDER):
        if value < cut:
            return severity
    return Severity.CRITICAL


def classify(systolic: int, diastolic: int,
             thresholds: BpThresholds = DEFAULT_THRESHOLDS) -> Severity:
    """Band each pressure and report the more worrying of the two."""
    if systolic <= 0 or diastolic <= 0:
        raise ValueError("pressures must be positive")
    s = _band(systolic, thresholds.systolic)
    d = _band(diastolic, thresholds.diastolic)
    return s if _CONCERN[s] >= _CONCERN[d] else d


class InvalidReadingError(ValueError):
    """A reading failed physiological sanity checks."""


@dataclass(frozen=True)
class VitalReading:
    user_id: str
    time: int
    systolic: int
    diastolic: int
    pulse: int

    def __post_init__(self) -> None:
        if not self.user_id or "|" in self.user_id:
            raise InvalidReadingError("user_id must be non-empty and free of '|'")
        if self.time < 0:
            raise InvalidReadingError("time must be non-negative")
        if not 0 < self.diastolic < self.systolic < 400:
            raise InvalidReadingError(
                f"need 0 < diastolic < systolic < 400, got {self.systolic}/{self.diastolic}"
            )
        if not 0 < self.pulse < 300:
            raise InvalidReadingError(f"pulse {self.pulse} outside (0, 300)")


def format_reading_line(reading: VitalReading) -> str:
    return "|".join((reading.user_id, str(reading.time), str(reading.systolic),
                     str(reading.diastolic), str(reading.pulse)))


def parse_reading_line(line: str) -> VitalReading:
    fields = line.split("|")
    if len(fields) != 5:
        raise InvalidReadingError(f"expected 5 fields, got {len(fields)}")
    user_id, time_s, sys_s, dia_s, pulse_s = fields
    for name, value in (("time", time_s), ("systolic", sys_s), ("diastolic", dia_s), ("pulse", pulse_s)):
        if not value.isdigit():
            raise InvalidReadingError(f"bad {name} column {value!r}")
    return VitalReading(user_id, int(time_s), int(sys_s), int(dia_s), int(pulse_s))


@dataclass(frozen=True)
class TrendReport:
    latest: VitalReading
    delta_systolic: int
    delta_diastolic: int
    mean_systolic: float
    mean_diastolic: float


class ReadingStore:
    """Append-only reading log, optionally mirrored to a file."""

    def __init__(self, path: Path | str | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._readings: list[VitalReading] = []
        if self.path is not None and self.path.exists():
            for line_no, line in enumerate(self.path.read_text().splitlines(), start=1):
                if not line:
                    continue
                try:
                    self._readings.append(parse_reading_line(line))
                except InvalidReadingError as exc:
                    raise InvalidReadingError(f"{self.path}:{line_no}: {exc}") from None

    def __len__(self) -> int:
        return len(self._readings)

    @property
    def readings(self) -> list[VitalReading]:
        return list(self._readings)

    def append(self, reading: VitalReading) -> int:
        self._readings.append(reading)
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(format_reading_line(reading) + "\n")
        return len(self._readings) - 1

    def all_readings(self) -> list[VitalReading]:
        """Every stored reading in insertion order."""
        return list(self._readings)

    def query(self, user_id: str, t_lo: int, t_hi: int) -> list[VitalReading]:
        """Readings for user_id with t_lo <= time <= t_hi, time-ascending."""
        if t_lo > t_hi:
            raise ValueError(f"inverted time range {t_lo}..{t_hi}")
        rows = [r for r in self._readings if r.user_id == user_id and t_lo <= r.time <= t_hi]
        return sorted(rows, key=lambda r: r.time)

    def trend(self, user_id: str, n: int) -> TrendReport:
        """Summarize the user's last n readings (clamped to what exists)."""
        if n < 1:
            raise ValueError("n must be at least 1")
        rows = sorted((r for r in self._readings if r.user_id == user_id), key=lambda r: r.time)
        if not rows:
            raise KeyError(f"no readings for user {user_id!r}")
        window = rows[-n:]
        latest = window[-1]
        previous = window[-2] if len(window) > 1 else latest
        return TrendReport(
            latest=latest,
            delta_systolic=latest.systolic - previous.systolic,
            delta_diastolic=latest.diastolic - previous.diastolic,
            mean_systolic=sum(r.systolic for r in window) / len(window),
            mean_diastolic=sum(r.diastolic for r in window) / len(window),
        )


class Role(Enum):
    DOCTOR = "Doctor"
    MEDICAL_STAFF = "MedicalStaff"
    RELATIVE = "Relative"
    CAREGIVER = "Caregiver"


@dataclass(frozen=True)
class Recipient:
    role: Role
    address: str

    def __post_init__(self) -> None:
        if not self.address or "|" in self.address or "," in self.address:
            raise ValueError("address must be non-empty and free of '|' and ','")


class ContactGraph:
    """Per-user recipient lists, duplicate-free by address."""

    def __init__(self) -> None:
        self._contacts: dict[str, list[Recipient]] = {}

    def add(self, user_id: str, recipient: Recipient) -> None:
        entries = self._contacts.setdefault(user_id, [])
        if any(r.address == recipient.address for r in entries):
            raise ValueError(f"duplicate address {recipient.address!r} for user {user_id!r}")
        entries.append(recipient)

    def recipients_for(self, user_id: str) -> list[Recipient]:
        return list(self._contacts.get(user_id, []))

    def users(self) -> list[str]:
        return sorted(self._contacts)


@dataclass(frozen=True)
class AlertEvent:
    time: int
    user_id: str
    severity: Severity
    reading: VitalReading
    recipients: tuple[Recipient, ...]
    channel: str = "SMS"


def format_alert_line(alert: AlertEvent) -> str:
    """time_ms|user_id|severity|sys/dia|recipient_count|addresses_csv."""
    addresses = ",".join(r.address for r in alert.recipients)
    return "|".join((
        str(alert.time),
        alert.user_id,
        alert.severity.value,
        f"{alert.reading.systolic}/{alert.reading.diastolic}",
        str(len(alert.recipients)),
        addresses,
    ))


def process(store: ReadingStore, contacts: ContactGraph, reading: VitalReading,
            thresholds: BpThresholds = DEFAULT_THRESHOLDS,
            alert_time: int | None = None) -> tuple[int, AlertEvent | None]:
    """Store a reading and fan out an alert if its severity demands one.

    Returns (record id, alert-or-None). A wearer missing from the contact
    graph still alerts, with an empty recipient tuple and a logged warning.
    """
    record_id = store.append(reading)
    severity = classify(reading.systolic, reading.diastolic, thresholds)
    if severity not in ALERT_SEVERITIES:
        return record_id, None
    recipients = tuple(contacts.recipients_for(reading.user_id))
    if not recipients:
        logger.warning("alert for %s has no registered contacts", reading.user_id)
    alert = AlertEvent(
        time=reading.time if alert_time is None else alert_time,
        user_id=reading.user_id,
        severity=severity,
        reading=reading,
        recipients=recipients,
    )
    return record_id, alert
