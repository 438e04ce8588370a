from fractions import Fraction

import pytest

from cxp.errors import UnknownIxp
from cxp.pathlet import EmbeddedPath, ServiceRequest
from cxp.stitching import (
    Rejected,
    RejectionReason as RR,
    StitchPolicy,
    admit,
    migrate_for_admission,
    shortest_route,
    stitch_path,
    stitch_with_backup,
)
from cxp.topology import VirtualTopology
from conftest import make_pathlet
from oracles import make_rng, oracle_stitch, random_pathlets, random_request


def reason_of(fn, *args, **kwargs):
    with pytest.raises(Rejected) as info:
        fn(*args, **kwargs)
    return info.value.reason


def preload(topo, pid, bw):
    """Eat bandwidth on a pathlet with an anonymous reservation."""
    topo.reserve(EmbeddedPath(f"hold-{pid}", (pid,), bw, 1.0))


@pytest.fixture
def pruned():
    t = VirtualTopology([
        make_pathlet("p1", "A", "B", 5, 10),
        make_pathlet("p2", "A", "B", 2, 3),
        make_pathlet("p3", "B", "C", 5, 10),
    ])
    return t


def test_single_candidate():
    t = VirtualTopology([make_pathlet("p", "A", "B", 10, 100)])
    got = stitch_path(t, ServiceRequest("r", "A", "B", 50, 20))
    assert got.pathlet_ids == ("p",) and got.path_delay_ms == 10


def test_bandwidth_pruning(pruned):
    r = ServiceRequest("r", "A", "C", 5, 12)
    # enumeration: [p1,p3]=10 wide enough, [p2,p3]=7 too narrow
    avail = {pid: pruned.residual_exact(pid) for pid in pruned.pathlets}
    assert oracle_stitch(list(pruned.pathlets.values()), avail, r) == ("ok", 10.0, ("p1", "p3"))
    got = stitch_path(pruned, r)
    assert got.pathlet_ids == ("p1", "p3") and got.path_delay_ms == 10


def test_delay_infeasible(pruned):
    assert reason_of(stitch_path, pruned, ServiceRequest("r", "A", "C", 5, 8)) is RR.DELAY_INFEASIBLE


def test_bandwidth_infeasible(pruned):
    assert reason_of(stitch_path, pruned, ServiceRequest("r", "A", "C", 11, 100)) is RR.BANDWIDTH_INFEASIBLE


def test_disconnected(pruned):
    pruned.add_anchor("Z")
    assert reason_of(stitch_path, pruned, ServiceRequest("r", "A", "Z", 1, 100)) is RR.DISCONNECTED
    # direction matters
    assert reason_of(stitch_path, pruned, ServiceRequest("r", "C", "A", 1, 100)) is RR.DISCONNECTED


def test_unknown_ixp(pruned):
    with pytest.raises(UnknownIxp):
        stitch_path(pruned, ServiceRequest("r", "A", "Nowhere", 1, 1))


def test_switching_delay_counts_intermediate_ixps(pruned):
    got = stitch_path(pruned, ServiceRequest("r", "A", "C", 5, 12), StitchPolicy(switching_delay_ms=1.5))
    assert got.path_delay_ms == 11.5
    assert reason_of(stitch_path, pruned, ServiceRequest("r", "A", "C", 5, 11),
                     StitchPolicy(switching_delay_ms=1.5)) is RR.DELAY_INFEASIBLE


def test_tie_break_prefers_fewer_pathlets_then_ids():
    t = VirtualTopology([
        make_pathlet("z-direct", "A", "C", 10),
        make_pathlet("a1", "A", "B", 5),
        make_pathlet("a2", "B", "C", 5),
        make_pathlet("m", "A", "D", 10),
        make_pathlet("b", "D", "C", 0.0001),
    ])
    got = stitch_path(t, ServiceRequest("r", "A", "C", 1, 100))
    assert got.pathlet_ids == ("z-direct",)
    t2 = VirtualTopology([make_pathlet("y", "A", "B", 3), make_pathlet("x", "A", "B", 3)])
    assert stitch_path(t2, ServiceRequest("r", "A", "B", 1, 100)).pathlet_ids == ("x",)


def test_loop_free_at_ixp_granularity():
    t = VirtualTopology([
        make_pathlet("ab", "A", "B", 1),
        make_pathlet("ba", "B", "A", 1),
        make_pathlet("bc", "B", "C", 1),
    ])
    route = stitch_path(t, ServiceRequest("r", "A", "C", 1, 100))
    assert route.pathlet_ids == ("ab", "bc")


def test_backup_parallel_distinct_groups():
    t = VirtualTopology([
        make_pathlet("fast", "A", "B", 3, group="g1"),
        make_pathlet("slow", "A", "B", 7, group="g2"),
    ])
    got = stitch_with_backup(t, ServiceRequest("r", "A", "B", 1, 10, True))
    assert got.pathlet_ids == ("fast",) and got.backup_pathlet_ids == ("slow",)


def test_backup_shared_group():
    t = VirtualTopology([
        make_pathlet("fast", "A", "B", 3, group="fiber7"),
        make_pathlet("slow", "A", "B", 7, group="fiber7"),
    ])
    assert reason_of(stitch_with_backup, t, ServiceRequest("r", "A", "B", 1, 10, True)) is RR.NO_DISJOINT_BACKUP


def test_backup_single_path():
    t = VirtualTopology([make_pathlet("only", "A", "B", 3)])
    assert reason_of(stitch_with_backup, t, ServiceRequest("r", "A", "B", 1, 10, True)) is RR.NO_DISJOINT_BACKUP


def test_backup_must_meet_delay_bound():
    t = VirtualTopology([make_pathlet("fast", "A", "B", 3), make_pathlet("slow", "A", "B", 30)])
    assert reason_of(stitch_with_backup, t, ServiceRequest("r", "A", "B", 1, 10, True)) is RR.NO_DISJOINT_BACKUP


def test_admit_reserves_primary_and_backup():
    t = VirtualTopology([make_pathlet("a", "A", "B", 3, 10), make_pathlet("b", "A", "B", 4, 10)])
    got = admit(t, ServiceRequest("r", "A", "B", 4, 10, True))
    assert got.migrated == ()
    assert t.residual("a") == 6 and t.residual("b") == 6
    t.check_invariants()


def test_admit_rejection_leaves_topology_alone(pruned):
    before = pruned.to_json()
    assert reason_of(admit, pruned, ServiceRequest("r", "A", "C", 50, 100)) is RR.BANDWIDTH_INFEASIBLE
    assert pruned.to_json() == before


# -- migration ---------------------------------------------------------


def contention(alt_delay=2.5, blocker_bound=5.0):
    """A-B direct pathlet held by a blocker that could detour via D."""
    t = VirtualTopology([
        make_pathlet("direct", "A", "B", 5, 10),
        make_pathlet("via1", "A", "D", alt_delay, 8),
        make_pathlet("via2", "D", "B", alt_delay, 8),
        make_pathlet("tail", "B", "C", 5, 10),
    ])
    blocker = ServiceRequest("blocker", "A", "B", 8, blocker_bound)
    assert admit(t, blocker).path.pathlet_ids == ("direct",)
    return t


def test_migration_admits_after_moving_blocker():
    t = contention()
    r = ServiceRequest("new", "A", "C", 9, 20)
    # without migration: direct has 2 left, detour is only 8 wide
    assert reason_of(stitch_path, t, r) is RR.BANDWIDTH_INFEASIBLE
    got = admit(t, r, StitchPolicy())
    assert got.migrated == ("blocker",)
    assert got.path.pathlet_ids == ("direct", "tail")
    moved = t.reservations["blocker"]
    assert moved.pathlet_ids == ("via1", "via2")
    assert moved.path_delay_ms <= t.requests["blocker"].max_delay_ms
    t.check_invariants()


def test_migration_refused_when_blocker_would_break_its_bound():
    t = contention(alt_delay=3.0)
    before = t.to_json()
    assert reason_of(admit, t, ServiceRequest("new", "A", "C", 9, 20)) is RR.BANDWIDTH_INFEASIBLE
    assert t.to_json() == before


def test_migration_budget_zero_is_plain_admit():
    t = contention()
    before = t.to_json()
    assert reason_of(admit, t, ServiceRequest("new", "A", "C", 9, 20),
                     StitchPolicy(migration_budget=0)) is RR.BANDWIDTH_INFEASIBLE
    assert t.to_json() == before


def test_migration_without_alternatives():
    t = VirtualTopology([make_pathlet("direct", "A", "B", 5, 10)])
    admit(t, ServiceRequest("blocker", "A", "B", 8, 10))
    before = t.to_json()
    assert reason_of(migrate_for_admission, t, ServiceRequest("new", "A", "B", 5, 10)) is RR.BANDWIDTH_INFEASIBLE
    assert t.to_json() == before


def test_migration_orders_blockers_by_bandwidth_then_id():
    t = VirtualTopology([
        make_pathlet("direct", "A", "B", 5, 11),
        make_pathlet("alt", "A", "B", 6, 3),
    ])
    for rid, bw in (("c", 4), ("b", 3), ("a", 3)):
        admit(t, ServiceRequest(rid, "A", "B", bw, 10))
    assert t.residual("direct") == 1 and t.residual("alt") == 3
    # "c" is tried first but cannot fit on alt; of the equal 3 Mbps blockers
    # "a" sorts before "b" and moving it frees enough
    got = admit(t, ServiceRequest("new", "A", "B", 4, 10), StitchPolicy(migration_budget=2))
    assert got.migrated == ("a",)
    assert t.reservations["a"].pathlet_ids == ("alt",)
    assert t.reservations["b"].pathlet_ids == ("direct",)
    t.check_invariants()


def test_migration_budget_limits_blockers_tried():
    t = VirtualTopology([
        make_pathlet("direct", "A", "B", 5, 11),
        make_pathlet("alt", "A", "B", 6, 3),
    ])
    for rid, bw in (("c", 4), ("b", 3), ("a", 3)):
        admit(t, ServiceRequest(rid, "A", "B", bw, 10))
    before = t.to_json()
    # budget 1 only reaches "c", which has nowhere to go
    assert reason_of(admit, t, ServiceRequest("new", "A", "B", 4, 10),
                     StitchPolicy(migration_budget=1)) is RR.BANDWIDTH_INFEASIBLE
    assert t.to_json() == before


def test_migrations_accumulate_within_budget():
    t = VirtualTopology([
        make_pathlet("direct", "A", "B", 5, 10),
        make_pathlet("alt", "A", "B", 6, 14),
    ])
    for rid in ("x", "y"):
        admit(t, ServiceRequest(rid, "A", "B", 5, 10))
    for rid in ("u", "v"):
        admit(t, ServiceRequest(rid, "A", "B", 2, 10))
    assert t.reservations["x"].pathlet_ids == ("direct",)
    assert t.reservations["u"].pathlet_ids == ("alt",)
    r = ServiceRequest("new", "A", "B", 7, 5.5)
    # alt is wide enough but too slow; direct is fast but full
    assert reason_of(stitch_path, t, r) is RR.DELAY_INFEASIBLE
    before = t.to_json()
    # one move frees 5 of the 7 Mbps needed
    assert reason_of(admit, t, r, StitchPolicy(migration_budget=1)) is RR.DELAY_INFEASIBLE
    assert t.to_json() == before
    got = admit(t, r, StitchPolicy(migration_budget=2))
    assert got.migrated == ("x", "y")
    assert got.path.pathlet_ids == ("direct",)
    t.check_invariants()


# -- properties against the enumeration oracle ------------------------


def _instance(seed):
    rng = make_rng(seed)
    integer = seed % 2 == 0
    ixps, pathlets = random_pathlets(rng, rng.randint(2, 8), rng.randint(0, 20), integer)
    t = VirtualTopology(pathlets)
    for ixp in ixps:
        t.add_anchor(ixp)
    for i, p in enumerate(pathlets):
        if rng.random() < 0.3:
            preload(t, p.id, rng.choice([0.5, 1.0, p.capacity_mbps / 2, p.capacity_mbps]))
    switching = rng.choice([0.0, 0.0, 1.0, 0.25])
    r = random_request(rng, ixps, integer=integer)
    return t, r, switching, integer


@pytest.mark.parametrize("seed", range(200))
def test_oracle_equivalence(seed):
    t, r, switching, integer = _instance(seed)
    avail = {pid: t.residual_exact(pid) for pid in t.pathlets}
    expected = oracle_stitch(list(t.pathlets.values()), avail, r, switching)
    policy = StitchPolicy(switching_delay_ms=switching)
    if expected[0] == "reject":
        assert reason_of(stitch_path, t, r, policy).value == expected[1]
    else:
        got = stitch_path(t, r, policy)
        assert got.path_delay_ms == expected[1]
        if integer:
            assert got.pathlet_ids == expected[2]


@pytest.mark.parametrize("seed", range(100))
def test_determinism(seed):
    t, r, switching, _ = _instance(seed)
    policy = StitchPolicy(switching_delay_ms=switching)
    outcomes = []
    for _ in range(2):
        try:
            outcomes.append(stitch_path(t.copy(), r, policy).pathlet_ids)
        except Rejected as exc:
            outcomes.append(exc.reason)
    assert outcomes[0] == outcomes[1]


@pytest.mark.parametrize("seed", range(100))
def test_removing_a_pathlet_never_helps(seed):
    t, r, switching, _ = _instance(seed)
    if not t.pathlets:
        return

    def best(topo):
        route = shortest_route(topo, r.src, r.dst, switching, min_bw=r.min_bw_mbps)
        return float("inf") if route is None else route.delay

    base = best(t)
    for pid in sorted(t.pathlets):
        smaller = t.copy()
        smaller.withdraw(pid)
        assert best(smaller) >= base


def test_shortest_route_credit_counts_own_holding():
    t = VirtualTopology([make_pathlet("p", "A", "B", 1, 10)])
    preload(t, "p", 10)
    assert shortest_route(t, "A", "B", min_bw=5) is None
    assert shortest_route(t, "A", "B", min_bw=5, credit={"p": Fraction(10)}).pathlet_ids == ("p",)
