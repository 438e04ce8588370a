"""Exact address-space arithmetic over half-open integer intervals."""

from __future__ import annotations

import bisect
import ipaddress
from typing import Iterable, Sequence, Tuple

from cxp.errors import MalformedPrefix

IPV4_BITS = 32


class IntervalSet:
    """Sorted, pairwise disjoint, non-adjacent half-open intervals.

    Instances are immutable; set operations return new objects.

    >>> s = IntervalSet([(0, 4), (4, 8), (10, 12)])
    >>> s.intervals, len(s)
    (((0, 8), (10, 12)), 10)
    """

    __slots__ = ("_iv", "_starts")

    def __init__(self, intervals: Iterable[Tuple[int, int]] = ()):
        self._iv = _merge(intervals)
        self._starts = [a for a, _ in self._iv]

    @property
    def intervals(self) -> tuple:
        return self._iv

    def __len__(self) -> int:
        return sum(b - a for a, b in self._iv)

    @property
    def cardinality(self) -> int:
        return len(self)

    def __bool__(self) -> bool:
        return bool(self._iv)

    def __iter__(self):
        return iter(self._iv)

    def __contains__(self, x: int) -> bool:
        i = bisect.bisect_right(self._starts, x) - 1
        return i >= 0 and x < self._iv[i][1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self._iv == other._iv

    def __hash__(self) -> int:
        return hash(self._iv)

    def __repr__(self) -> str:
        return f"IntervalSet({list(self._iv)!r})"

    def union(self, *others: "IntervalSet") -> "IntervalSet":
        ivs = list(self._iv)
        for o in others:
            ivs.extend(o._iv)
        return IntervalSet(ivs)

    __or__ = union

    def gain(self, other: "IntervalSet") -> int:
        """Number of addresses of ``other`` not already in ``self``."""
        return len(self | other) - len(self)

    def is_canonical(self) -> bool:
        iv = self._iv
        return all(a < b for a, b in iv) and all(
            iv[i][1] < iv[i + 1][0] for i in range(len(iv) - 1)
        )

    @classmethod
    def from_prefixes(cls, prefixes: Iterable[Tuple[int, int]], bits: int = IPV4_BITS
                      ) -> "IntervalSet":
        """Union of ``(network_address, length)`` prefixes in a ``bits``-wide space."""
        ivs = []
        for addr, length in prefixes:
            if not 0 <= length <= bits:
                raise MalformedPrefix(f"prefix length {length} outside [0, {bits}]")
            size = 1 << (bits - length)
            if not 0 <= addr < (1 << bits):
                raise MalformedPrefix(f"address {addr} outside the {bits}-bit space")
            if addr % size:
                raise MalformedPrefix(f"address {addr} has host bits set for /{length}")
            ivs.append((addr, addr + size))
        return cls(ivs)


def _merge(intervals: Iterable[Tuple[int, int]]) -> tuple:
    out = []
    for a, b in sorted((int(a), int(b)) for a, b in intervals):
        if a >= b:
            continue
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1][1] = b
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def parse_prefix(text: str) -> Tuple[int, int]:
    """``"10.0.0.0/8"`` -> ``(167772160, 8)``. Host bits must be zero."""
    try:
        net = ipaddress.IPv4Network(text.strip(), strict=True)
    except (ipaddress.AddressValueError, ipaddress.NetmaskValueError, ValueError) as exc:
        raise MalformedPrefix(f"bad IPv4 prefix {text!r}: {exc}") from None
    return int(net.network_address), net.prefixlen


def prefix_union(prefixes: Sequence) -> IntervalSet:
    """Merged address set of IPv4 prefixes given as strings or ``(addr, len)``."""
    parsed = [parse_prefix(p) if isinstance(p, str) else tuple(p) for p in prefixes]
    return IntervalSet.from_prefixes(parsed, IPV4_BITS)
