"""Deterministic testbed for a layered-defense health telemetry network.

The package models the network path of a wearable blood-pressure monitor:
a packet filter with NAT, a port-scan detector that escalates into blocks,
a log-driven brute-force guard, an AES-128 telemetry cipher built from its
round primitives, a two-channel sealed envelope, and a vitals pipeline that
fans alerts out to care contacts. An attack harness replays port scans and
password sprays against the composed gateway so every mitigation can be
demonstrated from a reproducible script.

Everything is driven by a logical millisecond clock; given the same inputs,
reports and event logs are byte-identical across runs.
"""

__version__ = "0.1.0"
