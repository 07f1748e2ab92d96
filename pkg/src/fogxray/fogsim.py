"""Discrete-event simulation of a device / ingestion / fog / cloud pipeline.

Each request carries one encoded image from its device along the fixed route
device -> ingestion -> fog -> cloud. Links are non-blocking pipes: a transfer
costs propagation delay plus payload/bandwidth regardless of other traffic.
Queueing happens only where inference runs, as a FIFO with deterministic
service time 1/compute_rate.

Two placement policies are compared:

- fog: inference at the request's fog node; only a small fixed-size result
  record continues to the cloud.
- cloud: the full payload is relayed through the fog node to the cloud and
  inference runs there.

A request completes when its result record (fog) or inference (cloud)
reaches the cloud. The engine is a single-threaded event loop ordered by
(timestamp, insertion sequence), so identical inputs give identical reports.
"""

from __future__ import annotations

import csv
import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

TIERS = ("device", "ingestion", "fog", "cloud")
POLICIES = ("fog", "cloud")
RESULT_RECORD_BYTES = 256

WORKLOAD_HEADER = ("request_id", "device_id", "creation_time_s", "payload_bytes")
REPORT_HEADER = ("request_id", "device_id", "creation_time_s",
                 "completion_time_s", "latency_s")


class TopologyConfigError(ValueError):
    """Invalid topology/workload configuration; `where` points at the fault."""

    def __init__(self, where: str, problem: str):
        self.where = where
        self.problem = problem
        super().__init__(f"{where}: {problem}")


@dataclass(frozen=True)
class Node:
    id: str
    tier: str
    compute_rate: float = 0.0  # images/second; 0 on tiers that never infer


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    delay_s: float
    bandwidth_Bps: float


@dataclass(frozen=True)
class Request:
    id: str
    device_id: str
    creation_time_s: float
    payload_bytes: int


@dataclass
class Topology:
    nodes: dict[str, Node]
    links: dict[tuple[str, str], Link]
    routes: dict[str, tuple[str, str, str, str]]  # device id -> node id path

    @property
    def cloud_id(self) -> str:
        return next(n.id for n in self.nodes.values() if n.tier == "cloud")


def transfer_time(payload_bytes: float, link: Link) -> float:
    """Store-and-forward cost: propagation delay plus serialization."""
    return link.delay_s + payload_bytes / link.bandwidth_Bps


def _require(condition: bool, where: str, problem: str) -> None:
    if not condition:
        raise TopologyConfigError(where, problem)


def build_topology(config: dict) -> Topology:
    """Validate a parsed config and resolve every device's 4-hop route.

    Raises TopologyConfigError naming the faulty JSON path for duplicate
    ids, bad tiers, nonpositive bandwidth, dangling or ambiguous routes,
    or a cloud count other than one.
    """
    _require(isinstance(config, dict), "$", "config must be a JSON object")
    _require(isinstance(config.get("nodes"), list), "nodes", "required array")
    _require(isinstance(config.get("links"), list), "links", "required array")

    nodes: dict[str, Node] = {}
    for i, raw in enumerate(config["nodes"]):
        where = f"nodes[{i}]"
        _require(isinstance(raw, dict), where, "must be an object")
        nid = raw.get("id")
        _require(isinstance(nid, str) and nid != "", f"{where}.id", "required non-empty string")
        _require(nid not in nodes, f"{where}.id", f"duplicate node id {nid!r}")
        tier = raw.get("tier")
        _require(tier in TIERS, f"{where}.tier", f"must be one of {TIERS}, got {tier!r}")
        rate = float(raw.get("compute_rate", 0.0))
        _require(rate >= 0.0, f"{where}.compute_rate", "must be >= 0")
        nodes[nid] = Node(id=nid, tier=tier, compute_rate=rate)

    clouds = [n for n in nodes.values() if n.tier == "cloud"]
    _require(len(clouds) == 1, "nodes", f"need exactly one cloud node, found {len(clouds)}")

    links: dict[tuple[str, str], Link] = {}
    for i, raw in enumerate(config["links"]):
        where = f"links[{i}]"
        _require(isinstance(raw, dict), where, "must be an object")
        src, dst = raw.get("from"), raw.get("to")
        _require(src in nodes, f"{where}.from", f"unknown node id {src!r}")
        _require(dst in nodes, f"{where}.to", f"unknown node id {dst!r}")
        _require((src, dst) not in links, where, f"duplicate link {src!r}->{dst!r}")
        delay = float(raw.get("delay_s", 0.0))
        _require(delay >= 0.0, f"{where}.delay_s", "must be >= 0")
        bw = float(raw.get("bandwidth_Bps", 0.0))
        _require(bw > 0.0, f"{where}.bandwidth_Bps", "must be > 0")
        links[(src, dst)] = Link(src=src, dst=dst, delay_s=delay, bandwidth_Bps=bw)

    # next hop per node, derived from links; each stage must be unambiguous
    out: dict[str, list[str]] = {nid: [] for nid in nodes}
    for src, dst in links:
        out[src].append(dst)

    expected_next = {"device": "ingestion", "ingestion": "fog", "fog": "cloud"}
    routes: dict[str, tuple[str, str, str, str]] = {}
    for nid, node in nodes.items():
        if node.tier != "device":
            continue
        path = [nid]
        cur = nid
        while nodes[cur].tier != "cloud":
            hops = out[cur]
            _require(len(hops) == 1, f"links (from {cur!r})",
                     f"node {cur!r} needs exactly one outgoing link, found {len(hops)}")
            nxt = hops[0]
            want = expected_next[nodes[cur].tier]
            _require(nodes[nxt].tier == want, f"links ({cur!r}->{nxt!r})",
                     f"route from a {nodes[cur].tier} node must reach a {want} node, "
                     f"got {nodes[nxt].tier}")
            path.append(nxt)
            cur = nxt
        routes[nid] = tuple(path)

    _require(bool(routes), "nodes", "topology has no device nodes")
    return Topology(nodes=nodes, links=links, routes=routes)


def load_topology(path) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TopologyConfigError("$", f"invalid JSON in {path}: {exc}") from exc
    return build_topology(config)


def load_workload(path) -> list[Request]:
    """Read `request_id,device_id,creation_time_s,payload_bytes` rows."""
    path = Path(path)
    requests: list[Request] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != WORKLOAD_HEADER:
            raise TopologyConfigError(
                str(path), f"expected header {','.join(WORKLOAD_HEADER)!r}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path}:{lineno}"
            _require(len(row) == 4, where, f"expected 4 fields, got {len(row)}")
            rid, device, t_s, size_s = row
            try:
                t = float(t_s)
                size = int(size_s)
            except ValueError as exc:
                raise TopologyConfigError(where, f"bad numeric field: {exc}") from exc
            _require(t >= 0.0, where, "creation_time_s must be >= 0")
            _require(size > 0, where, "payload_bytes must be > 0")
            requests.append(Request(id=rid, device_id=device,
                                    creation_time_s=t, payload_bytes=size))
    return requests


@dataclass(frozen=True)
class RequestOutcome:
    request_id: str
    device_id: str
    creation_time_s: float
    completion_time_s: float

    @property
    def latency_s(self) -> float:
        return self.completion_time_s - self.creation_time_s


@dataclass
class SimReport:
    policy: str
    outcomes: list[RequestOutcome]
    cloud_bytes: int
    utilization: dict[str, float]
    latencies: np.ndarray = field(init=False)

    def __post_init__(self):
        self.latencies = np.array([o.latency_s for o in self.outcomes], dtype=np.float64)

    @property
    def mean_latency_s(self) -> float:
        return float(self.latencies.mean())

    @property
    def p50_latency_s(self) -> float:
        return float(np.percentile(self.latencies, 50))

    @property
    def p95_latency_s(self) -> float:
        return float(np.percentile(self.latencies, 95))

    def csv_lines(self) -> list[str]:
        lines = [",".join(REPORT_HEADER)]
        for o in self.outcomes:
            lines.append(f"{o.request_id},{o.device_id},{o.creation_time_s:.9g},"
                         f"{o.completion_time_s:.9g},{o.latency_s:.9g}")
        return lines

    def summary_dict(self) -> dict:
        return {
            "policy": self.policy,
            "requests": len(self.outcomes),
            "mean_latency_s": self.mean_latency_s,
            "p50_latency_s": self.p50_latency_s,
            "p95_latency_s": self.p95_latency_s,
            "cloud_bytes": self.cloud_bytes,
            "utilization": {nid: self.utilization[nid] for nid in sorted(self.utilization)},
        }


# event kinds, dispatched in (timestamp, sequence) order
_ARRIVAL = "arrival"
_TRANSFER = "transfer-complete"
_INFERENCE = "inference-complete"


def run_simulation(topology: Topology, policy: str, workload: list[Request],
                   seed: int = 0,
                   result_record_bytes: int = RESULT_RECORD_BYTES) -> SimReport:
    """Run every request through its route under one placement policy.

    The loop is fully deterministic: transfer and service times are fixed
    functions of the config, and simultaneous events dispatch in insertion
    order. `seed` is accepted for interface symmetry with the training
    commands but no randomness is drawn here.
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    if not workload:
        raise ValueError("workload must contain at least one request")
    for prev, cur in zip(workload, workload[1:]):
        if cur.creation_time_s < prev.creation_time_s:
            raise ValueError(
                f"workload must be time-ordered: request {cur.id!r} at "
                f"{cur.creation_time_s} follows {prev.id!r} at {prev.creation_time_s}")

    requests: dict[str, Request] = {}
    for req in workload:
        if req.device_id not in topology.routes:
            raise TopologyConfigError(
                f"workload request {req.id!r}", f"unknown device id {req.device_id!r}")
        if req.id in requests:
            raise TopologyConfigError(f"workload request {req.id!r}", "duplicate request id")
        requests[req.id] = req

    cloud_id = topology.cloud_id
    infer_hop = 2 if policy == "fog" else 3  # index into the 4-node route
    for device_id, route in topology.routes.items():
        node = topology.nodes[route[infer_hop]]
        if node.compute_rate <= 0.0:
            raise TopologyConfigError(
                f"nodes (id {node.id!r})",
                f"{policy} policy places inference on {node.id!r}, "
                f"which has compute_rate 0")

    heap: list[tuple[float, int, str, str, int, int]] = []
    seq = 0

    def push(t: float, kind: str, rid: str, hop: int, carried: int) -> None:
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, rid, hop, carried))
        seq += 1

    for req in workload:
        push(req.creation_time_s, _ARRIVAL, req.id, 0, req.payload_bytes)

    node_free_at: dict[str, float] = {nid: 0.0 for nid in topology.nodes}
    node_busy: dict[str, float] = {nid: 0.0 for nid in topology.nodes}
    cloud_bytes = 0
    completions: dict[str, float] = {}
    t_end = 0.0

    while heap:
        now, _, kind, rid, hop, carried = heapq.heappop(heap)
        t_end = max(t_end, now)
        req = requests[rid]
        route = topology.routes[req.device_id]
        node_id = route[hop]

        if kind in (_ARRIVAL, _TRANSFER):
            if kind == _TRANSFER and node_id == cloud_id:
                cloud_bytes += carried
            if hop == infer_hop:
                node = topology.nodes[node_id]
                service = 1.0 / node.compute_rate
                start = max(now, node_free_at[node_id])
                done = start + service
                node_free_at[node_id] = done
                node_busy[node_id] += service
                push(done, _INFERENCE, rid, hop, carried)
            elif node_id == cloud_id:
                completions[rid] = now  # fog policy: result record arrived
            else:
                link = topology.links[(node_id, route[hop + 1])]
                push(now + transfer_time(carried, link), _TRANSFER, rid, hop + 1, carried)
        elif kind == _INFERENCE:
            if node_id == cloud_id:
                completions[rid] = now
            else:
                link = topology.links[(node_id, route[hop + 1])]
                push(now + transfer_time(result_record_bytes, link),
                     _TRANSFER, rid, hop + 1, result_record_bytes)

    outcomes = [RequestOutcome(request_id=req.id, device_id=req.device_id,
                               creation_time_s=req.creation_time_s,
                               completion_time_s=completions[req.id])
                for req in workload]

    t_start = min(r.creation_time_s for r in workload)
    span = t_end - t_start
    utilization = {nid: (node_busy[nid] / span if span > 0 else 0.0)
                   for nid in topology.nodes}
    return SimReport(policy=policy, outcomes=outcomes,
                     cloud_bytes=cloud_bytes, utilization=utilization)


@dataclass
class PolicyComparison:
    fog: SimReport
    cloud: SimReport

    def delta_dict(self) -> dict:
        return {
            "mean_latency_s": self.fog.mean_latency_s - self.cloud.mean_latency_s,
            "p95_latency_s": self.fog.p95_latency_s - self.cloud.p95_latency_s,
            "cloud_bytes": self.fog.cloud_bytes - self.cloud.cloud_bytes,
        }

    def summary_dict(self) -> dict:
        return {
            "fog": self.fog.summary_dict(),
            "cloud": self.cloud.summary_dict(),
            "delta_fog_minus_cloud": self.delta_dict(),
        }


def compare_policies(topology: Topology, workload: list[Request], seed: int = 0,
                     result_record_bytes: int = RESULT_RECORD_BYTES) -> PolicyComparison:
    """Run the identical workload under both policies and report deltas."""
    fog = run_simulation(topology, "fog", workload, seed=seed,
                         result_record_bytes=result_record_bytes)
    cloud = run_simulation(topology, "cloud", workload, seed=seed,
                           result_record_bytes=result_record_bytes)
    return PolicyComparison(fog=fog, cloud=cloud)


def write_json(payload: dict, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def write_report_csv(report: SimReport, path) -> None:
    Path(path).write_text("\n".join(report.csv_lines()) + "\n", encoding="utf-8")
