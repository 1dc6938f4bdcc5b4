"""Microdata round trip: matched worlds to delimited files and back.

Four files describe one matched world:

    census.csv   one row per census record (kind: person, imputed,
                 duplicate, fabricated), the full universe
    pes.csv      one row per survey-collected record: roster persons and
                 out-mover reports, sample only
    codes.csv    final code per record, one row per matched pair or
                 unmatched record (the census half of a pair is omitted to
                 keep ingest from double counting), plus household
                 exclusion markers (#, §, ¶)
    weights.csv  household weight for every sampled household; doubles as
                 the sample membership list

Ingest validates before it tallies and reports every problem at once, so
a bad delivery surfaces as one exception listing all issues.
"""

from __future__ import annotations

import csv
import math
import os

import numpy as np

from ..errors import ConfigError, SchemaError, ValidationError
from ..estimators import FCodeTallies, MoverTallies
from ..matching import (
    CELL_HASH,
    CELL_PILCROW,
    CELL_SECT,
    CODE_10,
    CODE_20,
    CODE_30,
    CODE_41,
    CODE_51,
    CODE_BY_LABEL,
    CODE_LABELS,
    CODE_NONE,
    CODE_PAIRED,
    EXCLUSION_MARKERS,
    MatchResult,
    MatchTallies,
)
from ..popsim import (
    PES_ABSENT,
    PES_NOT_LISTED,
    PES_VACANT,
    PES_VACANT_MISSED,
    PES_WITH_Q,
    SCOPE_BORN,
    SCOPE_DIED,
    CensusSim,
    PesSim,
    Population,
)

__all__ = ["write_microdata", "ingest_microdata"]

_CENSUS_HEADER = [
    "record_id", "person_id", "household_id", "district_id", "stratum", "kind", "target_scope",
]
_PES_HEADER = [
    "record_id", "person_id", "household_id", "district_id", "stratum", "roster",
    "reported_status",
]
_CODES_HEADER = ["record_id", "phase", "code", "exclusion"]
_WEIGHTS_HEADER = ["household_id", "weight"]

_PES_STATUS_LABELS = {
    PES_WITH_Q: "with_q",
    PES_ABSENT: "absent",
    PES_NOT_LISTED: "not_listed",
    PES_VACANT: "vacant",
    PES_VACANT_MISSED: "vacant_missed",
}

_KINDS = ("person", "imputed", "duplicate", "fabricated")
_ROSTERS = ("non_mover", "in_mover", "out_mover", "birth", "death")
_MARKERS = set(EXCLUSION_MARKERS.values())
_MARKER_CODES = ("#", "§", "¶")

_INITIAL_CODES = {"10", "20", "30", "42/1", "42/2"}


def _phase(code_label: str, recovered: bool) -> str:
    if recovered:
        return "followup"
    return "initial" if code_label in _INITIAL_CODES else "followup"


def write_microdata(
    out_dir: str,
    pop: Population,
    census: CensusSim,
    pes: PesSim,
    result: MatchResult,
    household_weight: np.ndarray | None = None,
) -> None:
    """Write the four-file microdata set for one matched world."""
    os.makedirs(out_dir, exist_ok=True)
    n_hh = pop.households.count
    weight = (
        np.ones(n_hh, dtype=np.float64)
        if household_weight is None
        else np.asarray(household_weight, dtype=np.float64)
    )
    mask = result.household_mask
    origin = np.where(pop.census_household >= 0, pop.census_household, 0)
    dest = np.where(pop.pes_household >= 0, pop.pes_household, 0)
    district = pop.households.district
    institutional = pop.households.institutional
    labels = pop.stratum_labels

    def hh_id(index: int) -> str:
        return f"h{index}"

    def district_id(hh: int) -> str:
        return f"d{district[hh]:04d}"

    with open(os.path.join(out_dir, "census.csv"), "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CENSUS_HEADER)
        for i in np.nonzero(census.captured)[0]:
            home = int(origin[i])
            writer.writerow(
                [
                    f"c{i}", f"{i}", hh_id(home), district_id(home),
                    labels[pop.post_stratum[i]],
                    "imputed" if census.imputed[i] else "person",
                    0 if institutional[home] else 1,
                ]
            )
        for i in np.nonzero(census.duplicated)[0]:
            home = int(origin[i])
            writer.writerow(
                [
                    f"d{i}", f"{i}", hh_id(home), district_id(home),
                    labels[pop.post_stratum[i]], "duplicate",
                    0 if institutional[home] else 1,
                ]
            )
        for j, source in enumerate(census.fab_person):
            home = int(origin[source])
            writer.writerow(
                [
                    f"f{j}", "", hh_id(home), district_id(home),
                    labels[pop.post_stratum[source]], "fabricated",
                    0 if institutional[home] else 1,
                ]
            )

    mover = pop.is_mover()

    with open(os.path.join(out_dir, "pes.csv"), "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(_PES_HEADER)
        for i in np.nonzero(result.pes_code != CODE_NONE)[0]:
            here = int(dest[i])
            if pop.scope[i] == SCOPE_BORN:
                roster = "birth"
            elif mover[i]:
                roster = "in_mover"
            else:
                roster = "non_mover"
            writer.writerow(
                [
                    f"p{i}", f"{i}", hh_id(here), district_id(here),
                    labels[pop.post_stratum[i]], roster,
                    _PES_STATUS_LABELS[int(pes.hh_status[here])],
                ]
            )
        report_codes = (421, 422, 424, CODE_41)
        reportish = np.isin(result.cen_code, report_codes) | (result.orphan_code != CODE_NONE)
        for i in np.nonzero(reportish)[0]:
            home = int(origin[i])
            if pop.scope[i] == SCOPE_DIED:
                roster = "death"
            elif mover[i]:
                roster = "out_mover"
            else:
                roster = "non_mover"
            writer.writerow(
                [
                    f"o{i}", f"{i}", hh_id(home), district_id(home),
                    labels[pop.post_stratum[i]], roster,
                    _PES_STATUS_LABELS[int(pes.hh_status[home])],
                ]
            )

    recovered_cells = (CELL_SECT, CELL_PILCROW)
    with open(os.path.join(out_dir, "codes.csv"), "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CODES_HEADER)
        for i in np.nonzero(result.pes_code != CODE_NONE)[0]:
            label = CODE_LABELS[int(result.pes_code[i])]
            recovered = result.hh_cell[dest[i]] in recovered_cells
            writer.writerow([f"p{i}", _phase(label, recovered), label, ""])
        report_mask = np.isin(result.cen_code, report_codes)
        for i in np.nonzero(report_mask)[0]:
            label = CODE_LABELS[int(result.cen_code[i])]
            writer.writerow([f"o{i}", "followup", label, ""])
        for i in np.nonzero(result.orphan_code != CODE_NONE)[0]:
            label = CODE_LABELS[int(result.orphan_code[i])]
            writer.writerow([f"o{i}", "followup", label, ""])
        census_side = ~np.isin(result.cen_code, (CODE_NONE, CODE_PAIRED)) & ~report_mask
        for i in np.nonzero(census_side)[0]:
            label = CODE_LABELS[int(result.cen_code[i])]
            writer.writerow([f"c{i}", _phase(label, False), label, ""])
        for i in np.nonzero(result.dup_code != CODE_NONE)[0]:
            label = CODE_LABELS[int(result.dup_code[i])]
            writer.writerow([f"d{i}", _phase(label, False), label, ""])
        for j in np.nonzero(result.fab_code != CODE_NONE)[0]:
            label = CODE_LABELS[int(result.fab_code[j])]
            writer.writerow([f"f{j}", _phase(label, False), label, ""])
        for marker_code, cell in zip(_MARKER_CODES, (CELL_HASH, CELL_SECT, CELL_PILCROW)):
            for hh in np.nonzero((result.hh_cell == cell) & mask)[0]:
                writer.writerow([hh_id(int(hh)), "initial", marker_code, EXCLUSION_MARKERS[cell]])

    with open(os.path.join(out_dir, "weights.csv"), "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(_WEIGHTS_HEADER)
        for hh in np.nonzero(mask)[0]:
            writer.writerow([hh_id(int(hh)), repr(float(weight[hh]))])


def _read_rows(path: str, header: list[str]) -> list[dict[str, str]]:
    if not os.path.exists(path):
        raise SchemaError("file is missing", path=path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            first = next(reader)
        except StopIteration:
            raise SchemaError("file is empty, expected a header", path=path) from None
        if first != header:
            raise SchemaError(
                f"header mismatch: expected {header}, found {first}", path=path
            )
        rows = []
        for number, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(
                    f"expected {len(header)} fields, found {len(row)}", path=path, row=number
                )
            rows.append(dict(zip(header, row)))
    return rows


def ingest_microdata(in_dir: str, level: str = "national") -> dict[str, MatchTallies]:
    """Rebuild estimation tallies from a microdata directory.

    `level` is "national" or "post_stratum"; finer geography is not in the
    file schema.  In-mover matching is not reconstructible from files, so
    the returned tallies always have m_in unset and procedure B needs the
    simulation path.
    """
    if level not in ("national", "post_stratum"):
        raise ConfigError(f"ingest supports national or post_stratum grouping, got {level!r}")

    census_rows = _read_rows(os.path.join(in_dir, "census.csv"), _CENSUS_HEADER)
    pes_rows = _read_rows(os.path.join(in_dir, "pes.csv"), _PES_HEADER)
    code_rows = _read_rows(os.path.join(in_dir, "codes.csv"), _CODES_HEADER)
    weight_rows = _read_rows(os.path.join(in_dir, "weights.csv"), _WEIGHTS_HEADER)

    issues: list[str] = []

    weights: dict[str, float] = {}
    for row in weight_rows:
        hh = row["household_id"]
        if hh in weights:
            issues.append(f"weights.csv: duplicate household {hh}")
            continue
        try:
            value = float(row["weight"])
        except ValueError:
            issues.append(f"weights.csv: weight for {hh} is not a number: {row['weight']!r}")
            continue
        if not math.isfinite(value) or value < 0:
            issues.append(f"weights.csv: weight for {hh} must be finite and non-negative")
            continue
        weights[hh] = value

    census_by_id: dict[str, dict[str, str]] = {}
    for row in census_rows:
        rid = row["record_id"]
        if rid in census_by_id:
            issues.append(f"census.csv: duplicate record_id {rid}")
            continue
        if row["kind"] not in _KINDS:
            issues.append(f"census.csv: record {rid} has unknown kind {row['kind']!r}")
            continue
        if row["target_scope"] not in ("0", "1"):
            issues.append(f"census.csv: record {rid} has bad target_scope {row['target_scope']!r}")
            continue
        census_by_id[rid] = row

    pes_by_id: dict[str, dict[str, str]] = {}
    for row in pes_rows:
        rid = row["record_id"]
        if rid in pes_by_id:
            issues.append(f"pes.csv: duplicate record_id {rid}")
            continue
        if row["roster"] not in _ROSTERS:
            issues.append(f"pes.csv: record {rid} has unknown roster {row['roster']!r}")
            continue
        pes_by_id[rid] = row

    def group_of(row: dict[str, str]) -> str:
        return "all" if level == "national" else row["stratum"]

    class _Acc:
        __slots__ = (
            "f10", "f30", "f42", "f52", "n_non", "n_in", "n_out", "m_non", "m_out",
            "census_count", "imputations", "e_sample", "erroneous",
        )

        def __init__(self) -> None:
            self.f10 = 0.0
            self.f30 = 0.0
            self.f42 = [0.0, 0.0, 0.0, 0.0]
            self.f52 = [0.0, 0.0, 0.0, 0.0]
            self.n_non = 0.0
            self.n_in = 0.0
            self.n_out = 0.0
            self.m_non = 0.0
            self.m_out = 0.0
            self.census_count = 0.0
            self.imputations = 0.0
            self.e_sample = 0.0
            self.erroneous = 0.0

    accs: dict[str, _Acc] = {}

    def acc_for(group: str) -> _Acc:
        if group not in accs:
            accs[group] = _Acc()
        return accs[group]

    for row in census_by_id.values():
        if row["target_scope"] != "1":
            continue
        acc = acc_for(group_of(row))
        acc.census_count += 1.0
        if row["kind"] == "imputed":
            acc.imputations += 1.0
        elif row["household_id"] in weights:
            acc.e_sample += weights[row["household_id"]]

    seen_codes: set[str] = set()
    valid_codes = set(CODE_BY_LABEL) | set(_MARKER_CODES)
    for number, row in enumerate(code_rows, start=2):
        rid = row["record_id"]
        code = row["code"]
        if rid in seen_codes:
            issues.append(f"codes.csv row {number}: duplicate record_id {rid}")
            continue
        seen_codes.add(rid)
        if code not in valid_codes:
            issues.append(f"codes.csv row {number}: unknown code {code!r}")
            continue
        if code in _MARKER_CODES:
            if row["exclusion"] not in _MARKERS:
                issues.append(
                    f"codes.csv row {number}: marker {code} needs an exclusion reason"
                )
            continue

        source = census_by_id.get(rid)
        side = "census"
        if source is None:
            source = pes_by_id.get(rid)
            side = "pes"
        if source is None:
            issues.append(f"codes.csv row {number}: record {rid} not found in census or pes files")
            continue
        hh = source["household_id"]
        if hh not in weights:
            issues.append(f"codes.csv row {number}: household {hh} has no weight")
            continue
        w = weights[hh]
        acc = acc_for(group_of(source))
        numeric = CODE_BY_LABEL[code]

        if numeric == CODE_10:
            acc.f10 += w
            acc.n_non += w
            acc.m_non += w
        elif numeric == CODE_20:
            if side == "census":
                issues.append(f"codes.csv row {number}: code 20 on a census record {rid}")
            elif source["roster"] != "birth":
                acc.n_in += w
        elif numeric == CODE_30:
            if side == "pes":
                issues.append(f"codes.csv row {number}: code 30 on a survey roster record {rid}")
            else:
                acc.f30 += w
                acc.n_out += w
                acc.m_out += w
        elif numeric == CODE_41:
            pass
        elif numeric == CODE_51:
            if side == "pes":
                issues.append(f"codes.csv row {number}: code 51 on a survey record {rid}")
            else:
                acc.erroneous += w
        elif 421 <= numeric <= 424:
            if side == "census":
                issues.append(f"codes.csv row {number}: code {code} on a census record {rid}")
                continue
            acc.f42[numeric - 421] += w
            roster = source["roster"]
            if roster in ("out_mover", "death"):
                acc.n_out += w
            elif roster == "non_mover":
                acc.n_non += w
            else:
                issues.append(
                    f"codes.csv row {number}: code {code} on an in-mover or birth record {rid}"
                )
        else:  # 52 family
            if side == "pes":
                issues.append(f"codes.csv row {number}: code {code} on a survey record {rid}")
            else:
                acc.f52[numeric - 521] += w

    if issues:
        raise ValidationError(issues)

    out: dict[str, MatchTallies] = {}
    for group in sorted(accs):
        acc = accs[group]
        fcode = FCodeTallies(
            f10=acc.f10, f30=acc.f30,
            f42_1=acc.f42[0], f42_2=acc.f42[1], f42_3=acc.f42[2], f42_4=acc.f42[3],
            f52_1=acc.f52[0], f52_2=acc.f52[1], f52_3=acc.f52[2], f52_4=acc.f52[3],
            post_stratum=group,
        )
        movers = MoverTallies(
            n_non=acc.n_non, n_in=acc.n_in, n_out=acc.n_out,
            m_non=acc.m_non, m_out=acc.m_out, m_in=None, post_stratum=group,
        )
        out[group] = MatchTallies(
            group=group,
            fcode=fcode,
            movers=movers,
            census_count=acc.census_count,
            imputations=acc.imputations,
            e_sample=acc.e_sample,
            erroneous=acc.erroneous,
        )
    return out
