"""Domain types: pathlets, service requests and embedded paths.

A pathlet is a single ISP-provided segment between two IXP anchors. Pathlet
objects are plain immutable records and may hold invalid values; use
:func:`validate_pathlet` (or :meth:`VirtualTopology.advertise`) to check them.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NewType, Optional, Sequence

from cxp.errors import ChainError

Asn = NewType("Asn", int)
IxpId = NewType("IxpId", str)


class GuaranteeMode(enum.Enum):
    BEST_EFFORT = "best_effort"
    GUARANTEED = "guaranteed"


@dataclass(frozen=True)
class Pathlet:
    id: str
    owner: int
    ingress: str
    egress: str
    mode: GuaranteeMode
    advertised_delay_ms: float
    capacity_mbps: float
    router_hops: int = 0
    middleboxes: frozenset = field(default_factory=frozenset)
    disjointness_group: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "ingress": self.ingress,
            "egress": self.egress,
            "mode": self.mode.value,
            "advertised_delay_ms": self.advertised_delay_ms,
            "capacity_mbps": self.capacity_mbps,
            "router_hops": self.router_hops,
            "middleboxes": sorted(self.middleboxes),
            "disjointness_group": self.disjointness_group,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "Pathlet":
        """Build a pathlet from an advertisement record.

        ``router_hops``, ``middleboxes`` and ``disjointness_group`` may be
        omitted; any key outside the pathlet fields raises ``ValueError``.
        """
        if not isinstance(record, dict):
            raise ValueError(f"expected an object, got {type(record).__name__}")
        unknown = set(record) - _PATHLET_KEYS
        if unknown:
            raise ValueError(f"unknown key(s): {', '.join(sorted(unknown))}")
        missing = _PATHLET_REQUIRED - set(record)
        if missing:
            raise ValueError(f"missing key(s): {', '.join(sorted(missing))}")
        try:
            mode = GuaranteeMode(record["mode"])
        except ValueError:
            raise ValueError(f"unknown mode {record['mode']!r}") from None
        return cls(
            id=str(record["id"]),
            owner=int(record["owner"]),
            ingress=str(record["ingress"]),
            egress=str(record["egress"]),
            mode=mode,
            advertised_delay_ms=float(record["advertised_delay_ms"]),
            capacity_mbps=float(record["capacity_mbps"]),
            router_hops=int(record.get("router_hops", 0)),
            middleboxes=frozenset(record.get("middleboxes") or ()),
            disjointness_group=record.get("disjointness_group"),
        )


_PATHLET_KEYS = {
    "id", "owner", "ingress", "egress", "mode", "advertised_delay_ms",
    "capacity_mbps", "router_hops", "middleboxes", "disjointness_group",
}
_PATHLET_REQUIRED = {
    "id", "owner", "ingress", "egress", "mode", "advertised_delay_ms", "capacity_mbps",
}


@dataclass(frozen=True)
class ServiceRequest:
    id: str
    src: str
    dst: str
    min_bw_mbps: float
    max_delay_ms: float
    want_backup: bool = False

    def __post_init__(self):
        object.__setattr__(self, "min_bw_mbps", float(self.min_bw_mbps))
        object.__setattr__(self, "max_delay_ms", float(self.max_delay_ms))
        if self.src == self.dst:
            raise ValueError(f"request {self.id!r}: src equals dst ({self.src})")
        if not self.min_bw_mbps > 0:
            raise ValueError(f"request {self.id!r}: min_bw_mbps must be positive")
        if not self.max_delay_ms > 0:
            raise ValueError(f"request {self.id!r}: max_delay_ms must be positive")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "src": self.src,
            "dst": self.dst,
            "min_bw_mbps": self.min_bw_mbps,
            "max_delay_ms": self.max_delay_ms,
            "want_backup": self.want_backup,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "ServiceRequest":
        if not isinstance(record, dict):
            raise ValueError(f"expected an object, got {type(record).__name__}")
        unknown = set(record) - _REQUEST_KEYS
        if unknown:
            raise ValueError(f"unknown key(s): {', '.join(sorted(unknown))}")
        missing = _REQUEST_KEYS - {"want_backup"} - set(record)
        if missing:
            raise ValueError(f"missing key(s): {', '.join(sorted(missing))}")
        return cls(
            id=str(record["id"]),
            src=str(record["src"]),
            dst=str(record["dst"]),
            min_bw_mbps=float(record["min_bw_mbps"]),
            max_delay_ms=float(record["max_delay_ms"]),
            want_backup=bool(record.get("want_backup", False)),
        )


_REQUEST_KEYS = {"id", "src", "dst", "min_bw_mbps", "max_delay_ms", "want_backup"}


@dataclass(frozen=True)
class EmbeddedPath:
    """A committed pathlet sequence for one request.

    ``path_delay_ms`` is always computed from advertised pathlet delays.
    """

    request_id: str
    pathlet_ids: tuple
    reserved_bw_mbps: float
    path_delay_ms: float
    backup_pathlet_ids: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "pathlet_ids", tuple(self.pathlet_ids))
        object.__setattr__(self, "reserved_bw_mbps", float(self.reserved_bw_mbps))
        object.__setattr__(self, "path_delay_ms", float(self.path_delay_ms))
        if self.backup_pathlet_ids is not None:
            object.__setattr__(self, "backup_pathlet_ids", tuple(self.backup_pathlet_ids))
        if not self.pathlet_ids:
            raise ValueError("embedded path needs at least one pathlet")
        if len(set(self.pathlet_ids)) != len(self.pathlet_ids):
            raise ValueError(f"path for {self.request_id!r} repeats a pathlet")
        if self.backup_pathlet_ids is not None:
            if not self.backup_pathlet_ids:
                raise ValueError("backup path, when present, must be non-empty")
            if set(self.backup_pathlet_ids) & set(self.pathlet_ids):
                raise ValueError(f"backup for {self.request_id!r} shares a pathlet with the primary")

    @property
    def all_pathlet_ids(self) -> tuple:
        return self.pathlet_ids + (self.backup_pathlet_ids or ())

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "pathlet_ids": list(self.pathlet_ids),
            "reserved_bw_mbps": self.reserved_bw_mbps,
            "path_delay_ms": self.path_delay_ms,
            "backup_pathlet_ids": (
                None if self.backup_pathlet_ids is None else list(self.backup_pathlet_ids)
            ),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "EmbeddedPath":
        backup = record.get("backup_pathlet_ids")
        return cls(
            request_id=str(record["request_id"]),
            pathlet_ids=tuple(record["pathlet_ids"]),
            reserved_bw_mbps=float(record["reserved_bw_mbps"]),
            path_delay_ms=float(record["path_delay_ms"]),
            backup_pathlet_ids=None if backup is None else tuple(backup),
        )


def validate_pathlet(p: Pathlet) -> list:
    """Return the list of invariant violations for ``p``; empty means valid."""
    violations = []
    if not isinstance(p.id, str) or not p.id:
        violations.append("empty id")
    if not isinstance(p.owner, int) or p.owner <= 0:
        violations.append("non-positive owner asn")
    if not p.ingress or not p.egress:
        violations.append("empty ixp id")
    if p.ingress == p.egress:
        violations.append("self-loop")
    if not _positive_finite(p.advertised_delay_ms):
        violations.append("non-positive delay")
    if not _positive_finite(p.capacity_mbps):
        violations.append("non-positive capacity")
    if not isinstance(p.router_hops, int) or p.router_hops < 0:
        violations.append("negative router hops")
    if not isinstance(p.mode, GuaranteeMode):
        violations.append("unknown mode")
    return violations


def _positive_finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x) and x > 0


def check_chain(pathlets: Sequence[Pathlet]) -> None:
    if not pathlets:
        raise ChainError("empty pathlet sequence")
    for prev, nxt in zip(pathlets, pathlets[1:]):
        if prev.egress != nxt.ingress:
            raise ChainError(
                f"{prev.id} ends at {prev.egress} but {nxt.id} starts at {nxt.ingress}"
            )


def fold_delay(delays: Iterable[float], switching_delay_ms: float) -> float:
    """Left fold ``d0 (+ switching + d_i)...``; the one evaluation order used
    everywhere so that equal paths always produce bit-equal delays."""
    it = iter(delays)
    total = next(it)
    for d in it:
        total = total + switching_delay_ms + d
    return total


def path_delay(pathlets: Sequence[Pathlet], switching_delay_ms: float = 0.0) -> float:
    """End-to-end delay of a chained pathlet sequence.

    Member delays add up, plus ``switching_delay_ms`` at each intermediate IXP.

    >>> a = Pathlet("a", 1, "A", "B", GuaranteeMode.BEST_EFFORT, 5.0, 10.0)
    >>> b = Pathlet("b", 2, "B", "C", GuaranteeMode.BEST_EFFORT, 7.0, 10.0)
    >>> path_delay([a, b], 1.0)
    13.0
    """
    check_chain(pathlets)
    return fold_delay((p.advertised_delay_ms for p in pathlets), switching_delay_ms)


def load_pathlets(text: str) -> list:
    """Parse an advertisement file (JSON array of pathlet records).

    Raises ``ValueError`` naming the offending record; JSON syntax errors
    propagate as ``json.JSONDecodeError`` (which carries line/column).
    """
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("advertisement file must hold a JSON array")
    out = []
    for i, record in enumerate(data):
        try:
            out.append(Pathlet.from_dict(record))
        except (ValueError, TypeError) as exc:
            raise ValueError(f"record {i}: {exc}") from None
    return out


def dump_pathlets(pathlets: Iterable[Pathlet]) -> str:
    return json.dumps([p.to_dict() for p in pathlets], indent=2)


def load_requests(text: str) -> list:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("request batch must hold a JSON array")
    out = []
    for i, record in enumerate(data):
        try:
            out.append(ServiceRequest.from_dict(record))
        except (ValueError, TypeError) as exc:
            raise ValueError(f"record {i}: {exc}") from None
    return out
