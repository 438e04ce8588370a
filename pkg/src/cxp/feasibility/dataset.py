"""IXP membership, prefix origination and customer relationship datasets.

CSV schemas (header row required, extra columns rejected)::

    memberships.csv    ixp_id,asn
    originations.csv   asn,prefix          (prefix as dotted-quad/len)
    relationships.csv  provider_asn,customer_asn
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from cxp.errors import DatasetError
from cxp.feasibility.intervals import parse_prefix

MEMBERSHIP_COLUMNS = ("ixp_id", "asn")
ORIGINATION_COLUMNS = ("asn", "prefix")
RELATIONSHIP_COLUMNS = ("provider_asn", "customer_asn")


@dataclass
class CoverageDataset:
    memberships: dict  # ixp id -> frozenset of ASNs
    originations: dict = field(default_factory=dict)  # asn -> list of (addr, len)
    relationships: list = field(default_factory=list)  # (provider, customer)

    def __post_init__(self):
        self.memberships = {str(k): frozenset(v) for k, v in self.memberships.items()}
        for ixp, members in self.memberships.items():
            if not ixp:
                raise DatasetError("empty ixp id")
            if not members:
                raise DatasetError(f"ixp {ixp!r} has no members")
            for asn in members:
                _check_asn(asn, f"member of {ixp}")
        for asn, prefixes in self.originations.items():
            _check_asn(asn, "origin")
            for addr, length in prefixes:
                if not 0 <= length <= 32:
                    raise DatasetError(f"AS{asn}: prefix length {length} outside [0, 32]")
        for prov, cust in self.relationships:
            _check_asn(prov, "provider")
            _check_asn(cust, "customer")
        self._customers = None

    @property
    def ixps(self) -> list:
        return sorted(self.memberships)

    def customers(self, asn: int) -> frozenset:
        if self._customers is None:
            table: dict = {}
            for prov, cust in self.relationships:
                table.setdefault(prov, set()).add(cust)
            self._customers = {k: frozenset(v) for k, v in table.items()}
        return self._customers.get(asn, frozenset())

    @classmethod
    def from_csv(cls, memberships: Union[str, Path],
                 originations: Optional[Union[str, Path]] = None,
                 relationships: Optional[Union[str, Path]] = None) -> "CoverageDataset":
        members = read_memberships(Path(memberships).read_text())
        origins = read_originations(Path(originations).read_text()) if originations else {}
        rels = read_relationships(Path(relationships).read_text()) if relationships else []
        return cls(members, origins, rels)


def _check_asn(asn, what):
    if not isinstance(asn, int) or asn <= 0:
        raise DatasetError(f"invalid {what} ASN {asn!r}")


def _rows(text: str, columns: Iterable[str], name: str):
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames
    if header is None:
        raise DatasetError(f"{name}: empty file, expected header {','.join(columns)}")
    header = [h.strip() for h in header]
    missing = [c for c in columns if c not in header]
    if missing:
        raise DatasetError(f"{name}: missing column {missing[0]!r}")
    extra = [h for h in header if h not in columns]
    if extra:
        raise DatasetError(f"{name}: unexpected column {extra[0]!r}")
    reader.fieldnames = header
    for lineno, row in enumerate(reader, start=2):
        if None in row or any(row[c] is None for c in columns):
            raise DatasetError(f"{name} line {lineno}: wrong number of fields")
        yield lineno, {c: row[c].strip() for c in columns}


def _asn(value: str, name: str, lineno: int, column: str) -> int:
    text = value.upper().removeprefix("AS")
    try:
        asn = int(text)
    except ValueError:
        raise DatasetError(f"{name} line {lineno}: column {column!r} is not an ASN: {value!r}") from None
    if asn <= 0:
        raise DatasetError(f"{name} line {lineno}: column {column!r} must be positive")
    return asn


def read_memberships(text: str) -> dict:
    out: dict = {}
    for lineno, row in _rows(text, MEMBERSHIP_COLUMNS, "memberships.csv"):
        if not row["ixp_id"]:
            raise DatasetError(f"memberships.csv line {lineno}: empty column 'ixp_id'")
        out.setdefault(row["ixp_id"], set()).add(
            _asn(row["asn"], "memberships.csv", lineno, "asn")
        )
    return out


def read_originations(text: str) -> dict:
    out: dict = {}
    for lineno, row in _rows(text, ORIGINATION_COLUMNS, "originations.csv"):
        asn = _asn(row["asn"], "originations.csv", lineno, "asn")
        try:
            prefix = parse_prefix(row["prefix"])
        except DatasetError as exc:
            raise type(exc)(f"originations.csv line {lineno}: column 'prefix': {exc}") from None
        out.setdefault(asn, []).append(prefix)
    return out


def read_relationships(text: str) -> list:
    out = []
    for lineno, row in _rows(text, RELATIONSHIP_COLUMNS, "relationships.csv"):
        out.append((
            _asn(row["provider_asn"], "relationships.csv", lineno, "provider_asn"),
            _asn(row["customer_asn"], "relationships.csv", lineno, "customer_asn"),
        ))
    return out
