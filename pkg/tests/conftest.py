"""Shared fixtures and the acceptance-criteria verdict summary.

Tests marked @pytest.mark.criterion(n, title) are release gates; after the
run, one PASS/FAIL line per criterion is appended to the terminal summary.
"""

from __future__ import annotations

import numpy as np
import pytest

_CRITERIA: dict[str, tuple[int, str]] = {}  # nodeid -> (number, title)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(num, title): marks a test as one acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            _CRITERIA[item.nodeid] = (int(marker.args[0]), str(marker.args[1]))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    outcome: dict[str, str] = {}
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", None)
            if nodeid in _CRITERIA:
                if status == "passed" and getattr(report, "when", "call") != "call":
                    continue
                outcome[nodeid] = status

    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid, (num, title) in sorted(_CRITERIA.items(), key=lambda kv: kv[1][0]):
        status = outcome.get(nodeid, "not run")
        verdict = {"passed": "PASS", "failed": "FAIL", "error": "FAIL",
                   "skipped": "SKIP"}.get(status, "NOT RUN")
        terminalreporter.write_line(f"criterion {num:>2}: {title:<60} {verdict}")


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)


@pytest.fixture
def make_dominant_sim_case():
    """Factory for random (topology config, workload) pairs where the fog
    route dominates: fog at least as fast as cloud, every payload larger
    than the result record, one shared path so both policies see the same
    arrival order."""

    def build(case_rng: np.random.Generator, n_devices: int = 2, n_requests: int = 20):
        cloud_rate = float(case_rng.uniform(5.0, 20.0))
        fog_rate = cloud_rate * float(case_rng.uniform(1.0, 3.0))
        payload = int(case_rng.integers(10_000, 1_000_000))
        nodes = [{"id": "ing0", "tier": "ingestion"},
                 {"id": "fog0", "tier": "fog", "compute_rate": fog_rate},
                 {"id": "cloud0", "tier": "cloud", "compute_rate": cloud_rate}]
        links = [{"from": "ing0", "to": "fog0",
                  "delay_s": float(case_rng.uniform(0.001, 0.02)),
                  "bandwidth_Bps": float(case_rng.uniform(1e6, 1e8))},
                 {"from": "fog0", "to": "cloud0",
                  "delay_s": float(case_rng.uniform(0.01, 0.2)),
                  "bandwidth_Bps": float(case_rng.uniform(1e5, 1e7))}]
        for d in range(n_devices):
            nodes.append({"id": f"dev{d}", "tier": "device"})
            links.append({"from": f"dev{d}", "to": "ing0",
                          "delay_s": float(case_rng.uniform(0.0005, 0.01)),
                          "bandwidth_Bps": float(case_rng.uniform(1e6, 1e8))})
        times = np.sort(case_rng.uniform(0.0, 2.0, size=n_requests))
        workload_rows = [
            (f"r{i:03d}", f"dev{int(case_rng.integers(0, n_devices))}",
             float(times[i]), payload)
            for i in range(n_requests)
        ]
        return {"nodes": nodes, "links": links}, workload_rows

    return build
