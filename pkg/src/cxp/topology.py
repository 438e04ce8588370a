"""Inter-domain virtual topology: IXP anchors joined by advertised pathlets.

Reserved bandwidth is accumulated as exact rationals (every float converts
to a :class:`~fractions.Fraction` without loss), so ``capacity - residual``
always equals the sum of live reservations and a release restores the
previous residual exactly. Residuals are reported as floats.

The topology is single-writer. Mutating methods either complete or raise
before touching any state.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Optional

from cxp.errors import (
    ChainError,
    DuplicatePathletId,
    DuplicateRequest,
    InsufficientResidual,
    InvalidPathlet,
    UnknownPathlet,
    UnknownRequest,
)
from cxp.pathlet import EmbeddedPath, Pathlet, ServiceRequest, validate_pathlet

BACKUP_POLICIES = ("full", "none")
SNAPSHOT_FORMAT = 1


class VirtualTopology:
    def __init__(self, pathlets: Iterable[Pathlet] = (), backup_reservation: str = "full",
                 anchors: Iterable[str] = ()):
        if backup_reservation not in BACKUP_POLICIES:
            raise ValueError(f"backup_reservation must be one of {BACKUP_POLICIES}")
        self.backup_reservation = backup_reservation
        self.pathlets: dict = {}
        self.reservations: dict = {}
        self.requests: dict = {}
        self._anchors = set(anchors)
        self._reserved: dict = {}
        self._capacity: dict = {}  # exact capacity, cached per pathlet
        for p in pathlets:
            self.advertise(p)

    # -- queries ---------------------------------------------------------

    @property
    def ixps(self) -> set:
        out = set(self._anchors)
        for p in self.pathlets.values():
            out.add(p.ingress)
            out.add(p.egress)
        return out

    def residual(self, pathlet_id: str) -> float:
        return float(self.residual_exact(pathlet_id))

    def residual_exact(self, pathlet_id: str) -> Fraction:
        try:
            return self._capacity[pathlet_id] - self._reserved[pathlet_id]
        except KeyError:
            raise UnknownPathlet(pathlet_id) from None

    @property
    def residual_bw(self) -> dict:
        return {pid: self.residual(pid) for pid in sorted(self.pathlets)}

    def reserved_pathlets(self, path: EmbeddedPath) -> tuple:
        """Pathlet ids whose bandwidth ``path`` holds under the backup policy."""
        if self.backup_reservation == "full":
            return path.all_pathlet_ids
        return path.pathlet_ids

    def users_of(self, pathlet_id: str) -> list:
        """Request ids holding bandwidth (or a cold backup) on a pathlet."""
        return sorted(
            rid for rid, path in self.reservations.items() if pathlet_id in path.all_pathlet_ids
        )

    def out_edges(self, ixp: str) -> list:
        return [p for p in self.pathlets.values() if p.ingress == ixp]

    def add_anchor(self, ixp: str) -> None:
        """Declare an IXP that has no pathlets yet."""
        if not ixp:
            raise ValueError("empty ixp id")
        self._anchors.add(ixp)

    # -- advertisement lifecycle ----------------------------------------

    def advertise(self, p: Pathlet) -> None:
        violations = validate_pathlet(p)
        if violations:
            raise InvalidPathlet(p.id, violations)
        if p.id in self.pathlets:
            raise DuplicatePathletId(p.id)
        self.pathlets[p.id] = p
        self._reserved[p.id] = Fraction(0)
        self._capacity[p.id] = Fraction(p.capacity_mbps)

    def withdraw(self, pathlet_id: str) -> list:
        """Remove a pathlet, tearing down every reservation that uses it.

        Returns the orphaned request ids (sorted); re-embedding them is the
        caller's job.
        """
        if pathlet_id not in self.pathlets:
            raise UnknownPathlet(pathlet_id)
        orphans = self.users_of(pathlet_id)
        for rid in orphans:
            self.release(rid)
        del self.pathlets[pathlet_id]
        del self._reserved[pathlet_id]
        del self._capacity[pathlet_id]
        return orphans

    # -- reservations ---------------------------------------------------

    def check_path(self, path: EmbeddedPath) -> None:
        for ids in (path.pathlet_ids, path.backup_pathlet_ids):
            if not ids:
                continue
            for pid in ids:
                if pid not in self.pathlets:
                    raise UnknownPathlet(pid)
            members = [self.pathlets[pid] for pid in ids]
            for prev, nxt in zip(members, members[1:]):
                if prev.egress != nxt.ingress:
                    raise ChainError(f"{prev.id} does not chain into {nxt.id}")
        if path.backup_pathlet_ids:
            first = self.pathlets[path.pathlet_ids[0]]
            last = self.pathlets[path.pathlet_ids[-1]]
            bfirst = self.pathlets[path.backup_pathlet_ids[0]]
            blast = self.pathlets[path.backup_pathlet_ids[-1]]
            if (first.ingress, last.egress) != (bfirst.ingress, blast.egress):
                raise ChainError("backup path does not join the primary's endpoints")

    def _demand(self, path: EmbeddedPath) -> dict:
        bw = Fraction(path.reserved_bw_mbps)
        return {pid: bw for pid in self.reserved_pathlets(path)}

    def reserve(self, path: EmbeddedPath, request: Optional[ServiceRequest] = None) -> None:
        """Check-and-reserve ``path`` atomically.

        ``request`` is kept alongside the reservation so the path can later be
        migrated or rerouted against its own QoS bounds.
        """
        if path.request_id in self.reservations:
            raise DuplicateRequest(path.request_id)
        if request is not None and request.id != path.request_id:
            raise ValueError("request id does not match the embedded path")
        if not path.reserved_bw_mbps > 0:
            raise ValueError("reserved bandwidth must be positive")
        self.check_path(path)
        demand = self._demand(path)
        for pid in path.all_pathlet_ids:
            if pid in demand and self.residual_exact(pid) < demand[pid]:
                raise InsufficientResidual(pid, self.residual_exact(pid), demand[pid])
        for pid, bw in demand.items():
            self._reserved[pid] += bw
        self.reservations[path.request_id] = path
        if request is not None:
            self.requests[request.id] = request

    def release(self, request_id: str) -> EmbeddedPath:
        try:
            path = self.reservations.pop(request_id)
        except KeyError:
            raise UnknownRequest(request_id) from None
        for pid, bw in self._demand(path).items():
            self._reserved[pid] -= bw
        self.requests.pop(request_id, None)
        return path

    def replace(self, request_id: str, new_path: EmbeddedPath) -> EmbeddedPath:
        """Make-before-break swap of a live reservation onto ``new_path``.

        The new reservation is admitted against the current state with the
        old path's own holdings credited back (shared-explicit style); only
        then is the old reservation released. Returns the old path.
        """
        try:
            old = self.reservations[request_id]
        except KeyError:
            raise UnknownRequest(request_id) from None
        if new_path.request_id != request_id:
            raise ValueError("replacement path belongs to another request")
        self.check_path(new_path)
        old_demand = self._demand(old)
        new_demand = self._demand(new_path)
        for pid, bw in new_demand.items():
            available = self.residual_exact(pid) + old_demand.get(pid, 0)
            if available < bw:
                raise InsufficientResidual(pid, available, bw)
        for pid, bw in old_demand.items():
            self._reserved[pid] -= bw
        for pid, bw in new_demand.items():
            self._reserved[pid] += bw
        self.reservations[request_id] = new_path
        return old

    def credit(self, request_id: Optional[str]) -> dict:
        """Bandwidth a request would hand back, per pathlet, if released."""
        if request_id is None or request_id not in self.reservations:
            return {}
        return self._demand(self.reservations[request_id])

    # -- invariants -----------------------------------------------------

    def check_invariants(self) -> None:
        """Raise AssertionError if bounds or conservation are broken."""
        ledger = {pid: Fraction(0) for pid in self.pathlets}
        for path in self.reservations.values():
            for pid, bw in self._demand(path).items():
                ledger[pid] += bw
        for pid, p in self.pathlets.items():
            residual = self.residual_exact(pid)
            assert 0 <= residual <= Fraction(p.capacity_mbps), f"{pid} residual out of bounds"
            assert Fraction(p.capacity_mbps) - residual == ledger[pid], f"{pid} conservation"
        ixps = self.ixps
        for p in self.pathlets.values():
            assert p.ingress in ixps and p.egress in ixps

    # -- copying and snapshots -----------------------------------------

    def copy(self) -> "VirtualTopology":
        # every value held is immutable, so copying the containers suffices
        clone = object.__new__(VirtualTopology)
        clone.restore(self)
        return clone

    def restore(self, other: "VirtualTopology") -> None:
        """Overwrite this topology's state with ``other``'s."""
        self.backup_reservation = other.backup_reservation
        self.pathlets = dict(other.pathlets)
        self.reservations = dict(other.reservations)
        self.requests = dict(other.requests)
        self._anchors = set(other._anchors)
        self._reserved = dict(other._reserved)
        self._capacity = dict(other._capacity)

    def to_dict(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "backup_reservation": self.backup_reservation,
            "anchors": sorted(self._anchors),
            "pathlets": [self.pathlets[pid].to_dict() for pid in sorted(self.pathlets)],
            "residual_bw": self.residual_bw,
            "reservations": [
                self.reservations[rid].to_dict() for rid in sorted(self.reservations)
            ],
            "requests": [self.requests[rid].to_dict() for rid in sorted(self.requests)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "VirtualTopology":
        if data.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"unsupported snapshot format {data.get('format')!r}")
        topo = cls(
            (Pathlet.from_dict(r) for r in data["pathlets"]),
            backup_reservation=data.get("backup_reservation", "full"),
            anchors=data.get("anchors", ()),
        )
        requests = {r["id"]: ServiceRequest.from_dict(r) for r in data.get("requests", ())}
        for record in data.get("reservations", ()):
            path = EmbeddedPath.from_dict(record)
            topo.reserve(path, requests.get(path.request_id))
        stored = data.get("residual_bw")
        if stored is not None and stored != topo.residual_bw:
            raise ValueError("snapshot residuals disagree with its reservations")
        return topo

    @classmethod
    def from_json(cls, text: str) -> "VirtualTopology":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        if not isinstance(other, VirtualTopology):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return (
            f"VirtualTopology({len(self.ixps)} ixps, {len(self.pathlets)} pathlets, "
            f"{len(self.reservations)} reservations)"
        )
