"""Figure rendering for attack reports and gateway activity.

Figures are a side channel: callers pass --figures DIR and get PNG files
next to the delimited output. Nothing here reads from or writes to the
report text, so rendering can never change what the golden-file tests
compare. The Agg backend keeps rendering headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .attacks import BruteReport, PortState, ScanReport
from .gateway import Gateway

_STATE_COLORS = {
    PortState.OPEN: "#2a9d4e",
    PortState.CLOSED: "#888888",
    PortState.FILTERED: "#c0392b",
}

_STATUS_LEVELS = {"BLOCKED": 0, "REFUSED": 1, "FAIL": 2, "OK": 3}


def render_scan_figure(report: ScanReport, path: Path | str) -> Path:
    """Bar chart of port states plus a strip of per-port outcomes."""
    path = Path(path)
    counts = {state: 0 for state in PortState}
    for state in report.states.values():
        counts[state] += 1

    fig, (top, bottom) = plt.subplots(
        2, 1, figsize=(8, 5), height_ratios=[2, 1], constrained_layout=True)
    names = [s.value for s in PortState]
    top.bar(names, [counts[s] for s in PortState],
            color=[_STATE_COLORS[s] for s in PortState])
    top.set_ylabel("ports")
    top.set_title(
        f"Scan of {report.spec.target} ports {report.spec.port_lo}-{report.spec.port_hi}"
        f" at {report.spec.speed.value}")
    for i, state in enumerate(PortState):
        top.text(i, counts[state], str(counts[state]), ha="center", va="bottom")

    ports = sorted(report.states)
    levels = [list(PortState).index(report.states[p]) for p in ports]
    bottom.scatter(ports, levels, s=4,
                   c=[_STATE_COLORS[report.states[p]] for p in ports])
    bottom.set_yticks(range(len(PortState)), names)
    bottom.set_xlabel("port")
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def render_brute_figure(report: BruteReport, path: Path | str) -> Path:
    """Per-attempt outcome timeline for a credential sweep."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 3.2), constrained_layout=True)
    xs = list(range(1, len(report.statuses) + 1))
    ys = [_STATUS_LEVELS[s] for s in report.statuses]
    ax.step(xs, ys, where="post", color="#555555", linewidth=0.8)
    ax.scatter(xs, ys, s=12, color="#1f77b4")
    for user, password, position in report.found:
        ax.annotate(f"{user}:{password}", (position, _STATUS_LEVELS["OK"]),
                    textcoords="offset points", xytext=(4, -12), fontsize=8)
    if report.banned_at is not None:
        ax.axvline(report.banned_at, color="#c0392b", linestyle="--", linewidth=1)
        ax.annotate("banned", (report.banned_at, 0.5), color="#c0392b",
                    textcoords="offset points", xytext=(4, 0), fontsize=8)
    ax.set_yticks(sorted(_STATUS_LEVELS.values()),
                  [k for k, _ in sorted(_STATUS_LEVELS.items(), key=lambda kv: kv[1])])
    ax.set_xlabel("attempt")
    ax.set_title(
        f"Credential sweep against {report.spec.target}:{report.spec.port}"
        f" ({report.attempts} attempts)")
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def render_gateway_figure(gateway: Gateway, path: Path | str) -> Path:
    """Event volume per component, a quick read of where the action was."""
    path = Path(path)
    counts: dict[str, int] = {}
    for line in gateway.logs:
        component = line.split("|")[1]
        counts[component] = counts.get(component, 0) + 1
    fig, ax = plt.subplots(figsize=(7, 3.2), constrained_layout=True)
    names = sorted(counts)
    ax.bar(names, [counts[n] for n in names], color="#1f77b4")
    for i, name in enumerate(names):
        ax.text(i, counts[name], str(counts[name]), ha="center", va="bottom")
    ax.set_ylabel("events")
    ax.set_title("Gateway event log by component")
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def render_vitals_figure(gateway: Gateway, path: Path | str) -> Path | None:
    """Stored readings against the classification bands; None if no data."""
    readings = gateway.store.all_readings()
    if not readings:
        return None
    path = Path(path)
    times = [r.time for r in readings]
    fig, ax = plt.subplots(figsize=(8, 3.6), constrained_layout=True)
    ax.plot(times, [r.systolic for r in readings], "o-", label="systolic", color="#c0392b")
    ax.plot(times, [r.diastolic for r in readings], "o-", label="diastolic", color="#1f77b4")
    for cut in gateway.thresholds.systolic:
        ax.axhline(cut, color="#c0392b", alpha=0.15, linewidth=0.8)
    for cut in gateway.thresholds.diastolic:
        ax.axhline(cut, color="#1f77b4", alpha=0.15, linewidth=0.8)
    ax.set_xlabel("device time (ms)")
    ax.set_ylabel("mmHg")
    ax.set_title("Stored vitals with classification cut points")
    ax.legend(loc="upper left", fontsize=8)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def render_report_figures(directory: Path | str, *, scan: ScanReport | None = None,
                          brute: BruteReport | None = None,
                          gateway: Gateway | None = None) -> list[Path]:
    """Render whichever figures apply; returns the files written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if scan is not None:
        written.append(render_scan_figure(scan, directory / "scan_ports.png"))
    if brute is not None:
        written.append(render_brute_figure(brute, directory / "brute_attempts.png"))
    if gateway is not None:
        written.append(render_gateway_figure(gateway, directory / "gateway_events.png"))
        vitals = render_vitals_figure(gateway, directory / "vitals_series.png")
        if vitals is not None:
            written.append(vitals)
    return written
