"""QoS-constrained path stitching and admission control.

Pathlets whose available bandwidth is below the demand are pruned, then a
label-setting shortest-path search on delay runs over what remains. Labels
are ordered by ``(delay, pathlet count, pathlet-id sequence)``, so the
result is unique. Every delay is positive, so the best walk never revisits
an IXP and every returned path is loop-free.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Optional

from cxp.errors import CxpError, UnknownIxp
from cxp.pathlet import EmbeddedPath, ServiceRequest, fold_delay
from cxp.topology import VirtualTopology

TIE_BREAK = "fewest_pathlets_then_lexicographic_ids"


class RejectionReason(enum.Enum):
    DISCONNECTED = "disconnected"
    BANDWIDTH_INFEASIBLE = "bandwidth_infeasible"
    DELAY_INFEASIBLE = "delay_infeasible"
    NO_DISJOINT_BACKUP = "no_disjoint_backup"


class Rejected(CxpError):
    def __init__(self, reason: RejectionReason, request_id: str = ""):
        self.reason = reason
        self.request_id = request_id
        super().__init__(f"request {request_id!r} rejected: {reason.value}")


@dataclass(frozen=True)
class StitchPolicy:
    switching_delay_ms: float = 0.0
    migration_budget: int = 8
    # relative slack before a Guaranteed pathlet counts as violating
    tolerance: float = 0.0

    def __post_init__(self):
        if self.switching_delay_ms < 0:
            raise ValueError("switching_delay_ms must be non-negative")
        if not isinstance(self.migration_budget, int) or self.migration_budget < 0:
            raise ValueError("migration_budget must be a non-negative integer")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")

    @property
    def tie_break(self) -> str:
        return TIE_BREAK


@dataclass(frozen=True)
class Admission:
    path: EmbeddedPath
    migrated: tuple = ()


class Route(NamedTuple):
    delay: float
    pathlet_ids: tuple


def shortest_route(
    topo: VirtualTopology,
    src: str,
    dst: str,
    switching_delay_ms: float = 0.0,
    *,
    min_bw: Optional[float] = None,
    delay_of: Optional[Callable[[str], float]] = None,
    exclude: Iterable[str] = (),
    credit: Optional[dict] = None,
) -> Optional[Route]:
    """Delay-minimal pathlet sequence from ``src`` to ``dst``, or None.

    ``min_bw`` prunes pathlets with less available bandwidth (residual plus
    any ``credit`` handed back by the path's own current reservation);
    ``None`` ignores bandwidth altogether.
    """
    excluded = set(exclude)
    credit = credit or {}
    demand = None if min_bw is None else Fraction(min_bw)
    if delay_of is None:
        def delay_of(pid):
            return topo.pathlets[pid].advertised_delay_ms

    adjacency: dict = {}
    for pid in sorted(topo.pathlets):
        if pid in excluded:
            continue
        if demand is not None and topo.residual_exact(pid) + credit.get(pid, 0) < demand:
            continue
        p = topo.pathlets[pid]
        adjacency.setdefault(p.ingress, []).append(p)

    settled = set()
    heap = [(0.0, 0, (), src)]
    while heap:
        delay, hops, ids, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return Route(delay, ids)
        for p in adjacency.get(node, ()):
            if p.egress in settled:
                continue
            d = delay_of(p.id)
            nd = d if not ids else delay + switching_delay_ms + d
            heapq.heappush(heap, (nd, hops + 1, ids + (p.id,), p.egress))
    return None


def _reachable(topo: VirtualTopology, src: str, dst: str, exclude=()) -> bool:
    excluded = set(exclude)
    seen = {src}
    stack = [src]
    while stack:
        node = stack.pop()
        if node == dst:
            return True
        for p in topo.out_edges(node):
            if p.id not in excluded and p.egress not in seen:
                seen.add(p.egress)
                stack.append(p.egress)
    return False


def _embed(topo, r, policy, primary: Route, backup: Optional[Route] = None) -> EmbeddedPath:
    def advertised(ids):
        return fold_delay(
            (topo.pathlets[pid].advertised_delay_ms for pid in ids), policy.switching_delay_ms
        )

    return EmbeddedPath(
        request_id=r.id,
        pathlet_ids=primary.pathlet_ids,
        reserved_bw_mbps=r.min_bw_mbps,
        path_delay_ms=advertised(primary.pathlet_ids),
        backup_pathlet_ids=None if backup is None else backup.pathlet_ids,
    )


def _check_endpoints(topo, r):
    ixps = topo.ixps
    for end in (r.src, r.dst):
        if end not in ixps:
            raise UnknownIxp(end)


def _primary_route(topo, r, policy, delay_of, exclude, credit) -> Route:
    _check_endpoints(topo, r)
    route = shortest_route(
        topo, r.src, r.dst, policy.switching_delay_ms,
        min_bw=r.min_bw_mbps, delay_of=delay_of, exclude=exclude, credit=credit,
    )
    if route is None:
        if _reachable(topo, r.src, r.dst, exclude):
            raise Rejected(RejectionReason.BANDWIDTH_INFEASIBLE, r.id)
        raise Rejected(RejectionReason.DISCONNECTED, r.id)
    if route.delay > r.max_delay_ms:
        raise Rejected(RejectionReason.DELAY_INFEASIBLE, r.id)
    return route


def stitch_path(topo: VirtualTopology, r: ServiceRequest, policy: StitchPolicy = StitchPolicy(),
                *, delay_of=None, exclude=(), credit=None) -> EmbeddedPath:
    """Plan (but do not reserve) the best single path for ``r``.

    Raises :class:`Rejected` with the reason, or :class:`UnknownIxp`.
    ``delay_of`` overrides per-pathlet planning delays (used when rerouting
    on measurements); ``credit`` maps pathlet id to bandwidth the request
    already holds there.
    """
    route = _primary_route(topo, r, policy, delay_of, exclude, credit)
    return _embed(topo, r, policy, route)


def stitch_with_backup(topo: VirtualTopology, r: ServiceRequest,
                       policy: StitchPolicy = StitchPolicy(),
                       *, delay_of=None, exclude=(), credit=None) -> EmbeddedPath:
    """Plan a primary path plus a fully disjoint backup.

    The backup shares no pathlet and no disjointness group with the primary
    and must meet the same bandwidth and delay bounds.
    """
    primary = _primary_route(topo, r, policy, delay_of, exclude, credit)
    groups = {
        topo.pathlets[pid].disjointness_group for pid in primary.pathlet_ids
    } - {None}
    shunned = set(exclude) | set(primary.pathlet_ids) | {
        pid for pid, p in topo.pathlets.items() if p.disjointness_group in groups
    }
    backup = shortest_route(
        topo, r.src, r.dst, policy.switching_delay_ms,
        min_bw=r.min_bw_mbps, delay_of=delay_of, exclude=shunned, credit=credit,
    )
    if backup is None or backup.delay > r.max_delay_ms:
        raise Rejected(RejectionReason.NO_DISJOINT_BACKUP, r.id)
    return _embed(topo, r, policy, primary, backup)


def plan(topo, r, policy, **kwargs) -> EmbeddedPath:
    if r.want_backup:
        return stitch_with_backup(topo, r, policy, **kwargs)
    return stitch_path(topo, r, policy, **kwargs)


def admit(topo: VirtualTopology, r: ServiceRequest,
          policy: StitchPolicy = StitchPolicy()) -> Admission:
    """Stitch and reserve ``r`` in one step, migrating blockers if needed.

    Migration is attempted when the best route is bandwidth-blocked: either
    nothing is wide enough, or only routes over the delay bound are. On
    success the topology holds the new reservation (plus any migrated ones);
    on :class:`Rejected` it is unchanged.
    """
    try:
        path = plan(topo, r, policy)
    except Rejected as exc:
        if exc.reason in _MIGRATABLE and policy.migration_budget > 0:
            return migrate_for_admission(topo, r, policy, reason=exc.reason)
        raise
    topo.reserve(path, r)
    return Admission(path)


_MIGRATABLE = (RejectionReason.BANDWIDTH_INFEASIBLE, RejectionReason.DELAY_INFEASIBLE)


def migrate_for_admission(topo: VirtualTopology, r: ServiceRequest,
                          policy: StitchPolicy = StitchPolicy(),
                          reason: RejectionReason = RejectionReason.BANDWIDTH_INFEASIBLE
                          ) -> Admission:
    """Move existing paths off ``r``'s bottleneck pathlets to make room.

    The candidate is the delay-minimal route that ignores bandwidth. Paths
    holding bandwidth on its under-provisioned members are tried in order of
    descending reserved bandwidth, then request id, at most
    ``policy.migration_budget`` of them. Each one is re-stitched against its
    own QoS with the bottleneck pathlets excluded and swapped
    make-before-break; after every move ``r`` is retried. Moves accumulate
    on a working copy that is committed only if ``r`` gets in. Migrated
    paths never trigger further migrations. Failure raises
    ``Rejected(reason)`` and leaves the topology untouched.
    """
    reject = Rejected(reason, r.id)
    _check_endpoints(topo, r)
    candidate = shortest_route(topo, r.src, r.dst, policy.switching_delay_ms)
    if candidate is None or candidate.delay > r.max_delay_ms:
        raise reject
    demand = Fraction(r.min_bw_mbps)
    bottleneck = [pid for pid in candidate.pathlet_ids if topo.residual_exact(pid) < demand]
    blockers = {
        rid
        for rid, path in topo.reservations.items()
        if set(topo.reserved_pathlets(path)) & set(bottleneck)
    }
    order = sorted(blockers, key=lambda rid: (-topo.reservations[rid].reserved_bw_mbps, rid))

    work = topo.copy()
    migrated = []
    for rid in order[: policy.migration_budget]:
        other = work.requests.get(rid)
        if other is None:
            continue
        try:
            moved = plan(work, other, policy, exclude=bottleneck, credit=work.credit(rid))
        except Rejected:
            continue
        work.replace(rid, moved)
        migrated.append(rid)
        try:
            path = plan(work, r, policy)
        except Rejected:
            continue
        work.reserve(path, r)
        topo.restore(work)
        return Admission(path, tuple(migrated))
    raise reject
