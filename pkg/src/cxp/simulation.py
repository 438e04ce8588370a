"""Epoch-driven simulation of a control exchange point in operation.

Each epoch runs, in order: scheduled arrivals/departures/shocks, one delay
measurement of every pathlet, violation detection, and rerouting of every
request whose end-to-end bound was breached. Detection-to-reroute latency
is therefore one epoch: the epoch in which a breach is measured counts as a
violation epoch even when the reroute succeeds.

Runs are single-threaded and fully determined by the scenario (including
its seed); two runs of the same scenario yield identical event logs.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from cxp.errors import CxpError, InvalidPathlet, MalformedScenario, MissingSample, UnknownIxp
from cxp.pathlet import EmbeddedPath, GuaranteeMode, Pathlet, ServiceRequest, fold_delay
from cxp.stitching import Rejected, RejectionReason, StitchPolicy, admit, plan
from cxp.topology import VirtualTopology

log = logging.getLogger(__name__)

DEFAULT_SEED = 20130901
_MAX_NOISE_DRAWS = 1000


# -- scenario description ----------------------------------------------


@dataclass(frozen=True)
class TruncatedGaussian:
    sigma_ms: float

    def __post_init__(self):
        if not self.sigma_ms > 0:
            raise ValueError("sigma_ms must be positive")


@dataclass(frozen=True)
class Arrival:
    time: float
    request: ServiceRequest


@dataclass(frozen=True)
class Departure:
    time: float
    request_id: str


@dataclass(frozen=True)
class DelayShock:
    time: float
    pathlet_id: str
    observed_delay_ms: float
    duration_epochs: int


Event = Union[Arrival, Departure, DelayShock]


@dataclass
class Scenario:
    pathlets: list
    events: list
    epochs: int
    epoch_length_s: float = 1.0
    rng_seed: int = DEFAULT_SEED
    noise_model: Optional[TruncatedGaussian] = None
    backup_reservation: str = "full"

    def epoch_of(self, event: Event) -> int:
        return int(math.floor(event.time / self.epoch_length_s))

    def validate(self) -> None:
        """Raise MalformedScenario describing the first problem found."""
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise MalformedScenario("epochs must be an integer >= 1")
        if not self.epoch_length_s > 0:
            raise MalformedScenario("epoch_length_s must be positive")
        if not 0 <= self.rng_seed < 2**64:
            raise MalformedScenario("rng_seed must fit in 64 unsigned bits")
        try:
            topo = VirtualTopology(self.pathlets, self.backup_reservation)
        except (InvalidPathlet, CxpError, ValueError) as exc:
            raise MalformedScenario(f"bad pathlet advertisement: {exc}") from None
        times = [ev.time for ev in self.events]
        if times != sorted(times):
            raise MalformedScenario("events are not sorted by time")
        arrived = set()
        for i, ev in enumerate(self.events):
            if ev.time < 0 or self.epoch_of(ev) >= self.epochs:
                raise MalformedScenario(f"event {i} lies outside the simulated horizon")
            if isinstance(ev, Arrival):
                if ev.request.id in arrived:
                    raise MalformedScenario(f"event {i}: request {ev.request.id!r} arrives twice")
                for end in (ev.request.src, ev.request.dst):
                    if end not in topo.ixps:
                        raise MalformedScenario(f"event {i}: unknown ixp {end!r}")
                arrived.add(ev.request.id)
            elif isinstance(ev, Departure):
                if ev.request_id not in arrived:
                    raise MalformedScenario(
                        f"event {i}: departure of {ev.request_id!r} before its arrival"
                    )
            elif isinstance(ev, DelayShock):
                if ev.pathlet_id not in topo.pathlets:
                    raise MalformedScenario(f"event {i}: shock on unknown pathlet {ev.pathlet_id!r}")
                if not ev.observed_delay_ms > 0 or ev.duration_epochs < 1:
                    raise MalformedScenario(f"event {i}: shock needs positive delay and duration")
            else:
                raise MalformedScenario(f"event {i}: unknown event type")

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            return cls._from_dict(data)
        except MalformedScenario:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedScenario(f"cannot parse scenario: {exc!r}") from None

    @classmethod
    def _from_dict(cls, data: dict) -> "Scenario":
        known = {"pathlets", "events", "epochs", "epoch_length_s", "rng_seed",
                 "noise_model", "backup_reservation"}
        unknown = set(data) - known
        if unknown:
            raise MalformedScenario(f"unknown scenario key(s): {', '.join(sorted(unknown))}")
        events = []
        for i, rec in enumerate(data.get("events", [])):
            kind = rec.get("type")
            if kind == "arrival":
                events.append(Arrival(float(rec["time"]), ServiceRequest.from_dict(rec["request"])))
            elif kind == "departure":
                events.append(Departure(float(rec["time"]), str(rec["request_id"])))
            elif kind == "delay_shock":
                events.append(DelayShock(
                    float(rec["time"]), str(rec["pathlet_id"]),
                    float(rec["observed_delay_ms"]), int(rec["duration_epochs"]),
                ))
            else:
                raise MalformedScenario(f"event {i}: unknown type {kind!r}")
        noise = data.get("noise_model")
        if noise is None or noise.get("type") in (None, "none"):
            noise_model = None
        elif noise.get("type") == "truncated_gaussian":
            noise_model = TruncatedGaussian(float(noise["sigma_ms"]))
        else:
            raise MalformedScenario(f"unknown noise model {noise.get('type')!r}")
        seed = data.get("rng_seed", DEFAULT_SEED)
        if not isinstance(seed, int):
            raise MalformedScenario("rng_seed must be an integer")
        scenario = cls(
            pathlets=[Pathlet.from_dict(r) for r in data["pathlets"]],
            events=events,
            epochs=data["epochs"],
            epoch_length_s=float(data.get("epoch_length_s", 1.0)),
            rng_seed=seed,
            noise_model=noise_model,
            backup_reservation=data.get("backup_reservation", "full"),
        )
        scenario.validate()
        return scenario

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedScenario(f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise MalformedScenario("scenario must be a JSON object")
        return cls.from_dict(data)


# -- measurement and detection -----------------------------------------


@dataclass(frozen=True)
class MeasurementSample:
    pathlet_id: str
    epoch: int
    observed_delay_ms: float


class ViolationKind(enum.Enum):
    PATH_DELAY = "path_delay_violation"
    ADVERTISED_GUARANTEE = "advertised_guarantee_violation"


@dataclass(frozen=True)
class ViolationEvent:
    epoch: int
    kind: ViolationKind
    subject_id: str
    observed_ms: float
    bound_ms: float


def measure_epoch(topology: VirtualTopology, epoch: int,
                  noise_model: Optional[TruncatedGaussian], active_shocks: dict,
                  rng: random.Random) -> list:
    """Observe one delay per pathlet, in pathlet-id order.

    A noise draw is consumed for every pathlet even while a shock overrides
    it, so shocks never shift the noise stream of other pathlets.
    """
    samples = []
    for pid in sorted(topology.pathlets):
        advertised = topology.pathlets[pid].advertised_delay_ms
        observed = advertised
        if noise_model is not None:
            for _ in range(_MAX_NOISE_DRAWS):
                observed = advertised + rng.gauss(0.0, noise_model.sigma_ms)
                if observed > 0:
                    break
            else:
                observed = advertised
        if pid in active_shocks:
            observed = active_shocks[pid]
        samples.append(MeasurementSample(pid, epoch, observed))
    return samples


def observed_path_delay(ids, observed: dict, switching_delay_ms: float) -> float:
    return fold_delay((observed[pid] for pid in ids), switching_delay_ms)


def detect_violations(samples: Iterable[MeasurementSample], live_paths, pathlets: dict,
                      policy: StitchPolicy = StitchPolicy()) -> list:
    """Compare measurements against request bounds and pathlet guarantees.

    ``live_paths`` is an iterable of ``(ServiceRequest, EmbeddedPath)``.
    Guaranteed pathlets are additionally checked against their advertised
    delay scaled by ``1 + policy.tolerance``. Comparisons are strict.
    """
    samples = list(samples)
    observed = {s.pathlet_id: s.observed_delay_ms for s in samples}
    epoch = samples[0].epoch if samples else 0
    events = []
    for request, path in sorted(live_paths, key=lambda rp: rp[0].id):
        missing = [pid for pid in path.pathlet_ids if pid not in observed]
        if missing:
            raise MissingSample(f"no sample for pathlet(s) {', '.join(missing)}")
        delay = observed_path_delay(path.pathlet_ids, observed, policy.switching_delay_ms)
        if delay > request.max_delay_ms:
            events.append(ViolationEvent(
                epoch, ViolationKind.PATH_DELAY, request.id, delay, request.max_delay_ms
            ))
    for pid in sorted(observed):
        p = pathlets.get(pid)
        if p is None or p.mode is not GuaranteeMode.GUARANTEED:
            continue
        bound = p.advertised_delay_ms * (1 + policy.tolerance)
        if observed[pid] > bound:
            events.append(ViolationEvent(
                epoch, ViolationKind.ADVERTISED_GUARANTEE, pid, observed[pid], bound
            ))
    return events


def reroute(topology: VirtualTopology, request_id: str, policy: StitchPolicy,
            observed: dict, violating_pathlets: Iterable[str] = ()) -> EmbeddedPath:
    """Move a violating request onto a path that meets its bound now.

    Best-effort pathlets are planned on their observed delay, guaranteed
    ones on their advertised delay; guaranteed pathlets currently breaking
    their guarantee are avoided. The swap is make-before-break. Raises
    :class:`Rejected` when no different feasible path exists, leaving the
    old reservation in place.
    """
    request = topology.requests[request_id]
    current = topology.reservations[request_id]

    def delay_of(pid):
        p = topology.pathlets[pid]
        if p.mode is GuaranteeMode.GUARANTEED:
            return p.advertised_delay_ms
        return observed[pid]

    new = plan(topology, request, policy, delay_of=delay_of,
               exclude=violating_pathlets, credit=topology.credit(request_id))
    if new.pathlet_ids == current.pathlet_ids:
        raise Rejected(RejectionReason.DELAY_INFEASIBLE, request_id)
    topology.replace(request_id, new)
    return new


# -- the event loop ----------------------------------------------------


@dataclass
class SimMetrics:
    admitted: int = 0
    rejected: Counter = field(default_factory=Counter)
    reroutes: int = 0
    migrations: int = 0
    violation_epochs: dict = field(default_factory=dict)
    lifetime_epochs: dict = field(default_factory=dict)

    @property
    def availability(self) -> dict:
        out = {}
        for rid, lifetime in self.lifetime_epochs.items():
            if lifetime == 0:
                out[rid] = 1.0
            else:
                out[rid] = 1.0 - self.violation_epochs.get(rid, 0) / lifetime
        return out

    def summary_rows(self) -> list:
        rows = [("admitted", self.admitted)]
        for reason in RejectionReason:
            rows.append((f"rejected_{reason.value}", self.rejected.get(reason, 0)))
        rows.append(("rejected_total", sum(self.rejected.values())))
        rows.append(("reroutes", self.reroutes))
        rows.append(("migrations", self.migrations))
        rows.append(("violation_epochs_total", sum(self.violation_epochs.values())))
        return rows


@dataclass
class SimResult:
    metrics: SimMetrics
    events: list
    topology: VirtualTopology

    def event_lines(self) -> list:
        return [json.dumps(e, sort_keys=True) for e in self.events]


def run_scenario(s: Scenario, policy: StitchPolicy = StitchPolicy(),
                 check_invariants: bool = False) -> SimResult:
    s.validate()
    topo = VirtualTopology(s.pathlets, s.backup_reservation)
    rng = random.Random(s.rng_seed)
    metrics = SimMetrics()
    events = []

    def emit(epoch, kind, **payload):
        events.append({"epoch": epoch, "kind": kind, "payload": payload})

    schedule: dict = {}
    for ev in s.events:
        schedule.setdefault(s.epoch_of(ev), []).append(ev)
    shocks: dict = {}  # pathlet id -> (value, first epoch past the shock)

    for epoch in range(s.epochs):
        for ev in schedule.get(epoch, ()):
            if isinstance(ev, Arrival):
                r = ev.request
                try:
                    got = admit(topo, r, policy)
                except Rejected as exc:
                    metrics.rejected[exc.reason] += 1
                    emit(epoch, "rejected", request_id=r.id, reason=exc.reason.value)
                    continue
                except UnknownIxp as exc:
                    raise MalformedScenario(str(exc)) from None
                metrics.admitted += 1
                metrics.lifetime_epochs[r.id] = 0
                metrics.violation_epochs[r.id] = 0
                metrics.migrations += len(got.migrated)
                emit(epoch, "admitted", request_id=r.id, pathlets=list(got.path.pathlet_ids),
                     backup=list(got.path.backup_pathlet_ids or ()),
                     delay_ms=got.path.path_delay_ms, migrated=list(got.migrated))
            elif isinstance(ev, Departure):
                if ev.request_id in topo.reservations:
                    topo.release(ev.request_id)
                    emit(epoch, "departed", request_id=ev.request_id)
            else:
                shocks[ev.pathlet_id] = (ev.observed_delay_ms, epoch + ev.duration_epochs)
                emit(epoch, "delay_shock", pathlet_id=ev.pathlet_id,
                     observed_delay_ms=ev.observed_delay_ms, duration_epochs=ev.duration_epochs)

        active = {pid: v for pid, (v, end) in shocks.items() if epoch < end}
        samples = measure_epoch(topo, epoch, s.noise_model, active, rng)
        observed = {smp.pathlet_id: smp.observed_delay_ms for smp in samples}
        live = [(topo.requests[rid], topo.reservations[rid]) for rid in sorted(topo.reservations)]
        violations = detect_violations(samples, live, topo.pathlets, policy)

        broken = set()
        for v in violations:
            if v.kind is ViolationKind.ADVERTISED_GUARANTEE:
                broken.add(v.subject_id)
            emit(epoch, v.kind.value, id=v.subject_id, observed_ms=v.observed_ms, bound_ms=v.bound_ms)
        for v in violations:
            if v.kind is not ViolationKind.PATH_DELAY:
                continue
            rid = v.subject_id
            metrics.violation_epochs[rid] += 1
            try:
                new = reroute(topo, rid, policy, observed, broken)
            except Rejected as exc:
                emit(epoch, "reroute_failed", request_id=rid, reason=exc.reason.value)
                continue
            metrics.reroutes += 1
            emit(epoch, "rerouted", request_id=rid, pathlets=list(new.pathlet_ids),
                 backup=list(new.backup_pathlet_ids or ()),
                 observed_delay_ms=observed_path_delay(
                     new.pathlet_ids, observed, policy.switching_delay_ms))

        for rid in topo.reservations:
            metrics.lifetime_epochs[rid] += 1
        if check_invariants:
            topo.check_invariants()

    log.debug("scenario finished: %d admitted, %d reroutes", metrics.admitted, metrics.reroutes)
    return SimResult(metrics, events, topo)
