"""LOS-gated message bus between agents and the ground control station."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .sensors import Capture
from .world import GroundTruthModel

GCS = "GCS"


class Kind(str, enum.Enum):
    MAP_SHARE = "MapShare"
    INSPECT_CMD = "InspectCmd"
    DONE_REPORT = "DoneReport"
    FD_REPORT = "FDReport"
    TRANSFER_CMD = "TransferCmd"
    POSE_PING = "PosePing"


@dataclass(frozen=True)
class Message:
    id: int
    sender: str
    to: str
    kind: Kind
    tick: int
    payload: Any = None

    def __post_init__(self):
        if self.kind is Kind.FD_REPORT and not isinstance(self.payload, Capture):
            raise ValueError("FDReport must carry exactly one Capture")


def line_of_sight(a: Sequence[float], b: Sequence[float], model: GroundTruthModel) -> bool:
    """True iff the open segment a-b crosses no occupied cell."""
    return model.segment_clear(a, b)


@dataclass
class CommBus:
    """Messages wait in send order until direct sender-recipient LOS holds."""

    names: set[str]
    pending: list[Message] = field(default_factory=list)
    fd_buffer: dict[str, dict[int, Capture]] = field(default_factory=dict)
    acked: set[int] = field(default_factory=set)
    delivered_best: dict[str, dict[int, float]] = field(default_factory=dict)
    trace: list[tuple[int, str, str, str, bool]] = field(default_factory=list)
    _next_id: int = 0

    def send(self, sender: str, to: str, kind: Kind, tick: int, payload: Any = None) -> Message:
        if to != GCS and to not in self.names:
            raise KeyError(f"unknown recipient {to!r}")
        msg = Message(self._next_id, sender, to, kind, tick, payload)
        self._next_id += 1
        self.pending.append(msg)
        return msg

    def buffer_capture(self, agent: str, cap: Capture) -> None:
        """Keep the best undelivered capture per defect until the agent sees the GCS."""
        if cap.quality <= self.delivered_best.get(agent, {}).get(cap.defect_id, -1.0):
            return
        buf = self.fd_buffer.setdefault(agent, {})
        old = buf.get(cap.defect_id)
        if old is None or cap.quality > old.quality:
            buf[cap.defect_id] = cap

    def deliver(self, poses: Mapping[str, Sequence[float]], model: GroundTruthModel, tick: int,
                gcs: Sequence[float] | None = None) -> dict[str, list[Message]]:
        los_cache: dict[tuple[str, str], bool] = {}
        blocked_pairs: set[tuple[str, str]] = set()
        inbox: dict[str, list[Message]] = {}
        keep = []
        for msg in self.pending:
            if msg.to != GCS and msg.to not in poses:
                raise KeyError(f"unknown recipient {msg.to!r}")
            pair = (msg.sender, msg.to)
            if pair not in los_cache:
                dst = gcs if msg.to == GCS else poses[msg.to]
                los_cache[pair] = dst is not None and line_of_sight(poses[msg.sender], dst, model)
            ok = los_cache[pair] and pair not in blocked_pairs
            if ok:
                inbox.setdefault(msg.to, []).append(msg)
                self.acked.add(msg.id)
                self.trace.append((tick, msg.sender, msg.to, msg.kind.value, True))
            else:
                blocked_pairs.add(pair)
                keep.append(msg)
        self.pending = keep
        return inbox

    def flush_fd(self, poses: Mapping[str, Sequence[float]], model: GroundTruthModel,
                 gcs: Sequence[float], tick: int) -> list[Capture]:
        """Deliver buffered FD reports of every agent currently in LOS of the GCS."""
        out = []
        for agent in sorted(self.fd_buffer):
            buf = self.fd_buffer[agent]
            if not buf or agent not in poses:
                continue
            if line_of_sight(poses[agent], gcs, model):
                sent = self.delivered_best.setdefault(agent, {})
                for did in sorted(buf):
                    out.append(buf[did])
                    sent[did] = buf[did].quality
                    self.trace.append((tick, agent, GCS, Kind.FD_REPORT.value, True))
                buf.clear()
        return out

    def undelivered_captures(self) -> list[Capture]:
        return [c for a in sorted(self.fd_buffer) for _, c in sorted(self.fd_buffer[a].items())]

    def trace_csv(self, include_pending: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tick", "from", "to", "kind", "delivered"])
        rows = list(self.trace)
        if include_pending:
            rows += [(m.tick, m.sender, m.to, m.kind.value, False) for m in self.pending]
        for row in rows:
            w.writerow([row[0], row[1], row[2], row[3], int(row[4])])
        return buf.getvalue()
