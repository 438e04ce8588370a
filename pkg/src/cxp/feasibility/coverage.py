"""Greedy IP-address coverage by a growing set of IXP anchors."""

from __future__ import annotations

from typing import Iterable

from cxp.feasibility.dataset import CoverageDataset
from cxp.feasibility.intervals import IntervalSet


def expand_customer_cone(dataset: CoverageDataset, asns: Iterable[int]) -> frozenset:
    """The given ASes plus their direct customers (one hop, not transitive)."""
    base = set(asns)
    out = set(base)
    for asn in base:
        out |= dataset.customers(asn)
    return frozenset(out)


def address_set(dataset: CoverageDataset, asns: Iterable[int]) -> IntervalSet:
    prefixes = []
    for asn in asns:
        prefixes.extend(dataset.originations.get(asn, ()))
    return IntervalSet.from_prefixes(prefixes)


def ixp_address_sets(dataset: CoverageDataset, include_cone: bool = False) -> dict:
    out = {}
    for ixp in dataset.ixps:
        members = dataset.memberships[ixp]
        if include_cone:
            members = expand_customer_cone(dataset, members)
        out[ixp] = address_set(dataset, members)
    return out


def coverage_curve(dataset: CoverageDataset, k: int, include_cone: bool = False) -> list:
    """Pick ``k`` IXPs greedily by marginal address gain.

    Returns ``[(ixp_id, cumulative_addresses), ...]`` in pick order. Ties go
    to the lexicographically smallest IXP id.
    """
    sets = ixp_address_sets(dataset, include_cone)
    if not 1 <= k <= len(sets):
        raise ValueError(f"k must lie in [1, {len(sets)}], got {k}")
    covered = IntervalSet()
    remaining = sorted(sets)
    curve = []
    for _ in range(k):
        best, best_gain = None, -1
        for ixp in remaining:
            g = covered.gain(sets[ixp])
            if g > best_gain:
                best, best_gain = ixp, g
        remaining.remove(best)
        covered = covered | sets[best]
        curve.append((best, len(covered)))
    return curve


def marginal_gains(curve: list) -> list:
    prev = 0
    out = []
    for _, total in curve:
        out.append(total - prev)
        prev = total
    return out
