"""Two-stage cluster sample of households for a post-enumeration survey.

Districts are the primary units, selected systematically within each
province by urban/rural stratum.  Households are the secondary units: a
contiguous run of the district's household listing is taken, walking the
listing in reverse order from a random start and wrapping around, which
mimics an enumerator walking a block anticlockwise.  Every household in a
district then has the same inclusion probability, and the design weight is
the reciprocal of

    p = (n_d / tn_d) * (n_h / tn_h).

Household noninterview is repaired by spreading the weight of
non-interviewed households across interviewed ones within adjustment cells
keyed by district and basic address type.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DesignError, DomainError, EmptyCell

__all__ = [
    "URBAN",
    "RURAL",
    "INTERVIEWED",
    "TEMPORARILY_ABSENT",
    "NOT_LISTED",
    "ADDRESS_TYPES",
    "District",
    "SampleDesign",
    "HouseholdTake",
    "SampledHousehold",
    "DrawnSample",
    "WeightedHousehold",
    "systematic_indices",
    "select_psus",
    "select_households",
    "selection_probability",
    "noninterview_adjust",
    "draw_sample",
    "read_district_frame",
    "write_district_frame",
]

URBAN = "urban"
RURAL = "rural"

INTERVIEWED = "interviewed"
TEMPORARILY_ABSENT = "temporarily_absent"
NOT_LISTED = "not_listed"

# Merge ladder for noninterview cells, in order.
ADDRESS_TYPES = ("single_unit", "multi_unit", "other")


@dataclass(frozen=True)
class District:
    """A primary sampling unit: an ordered household listing."""

    district_id: str
    province: str
    stratum: str
    households: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.stratum not in (URBAN, RURAL):
            raise DesignError(f"stratum must be {URBAN!r} or {RURAL!r}, got {self.stratum!r}")

    @property
    def household_count(self) -> int:
        return len(self.households)


@dataclass(frozen=True)
class SampleDesign:
    """Districts to draw per (province, stratum), plus household take sizes.

    The take sizes default to the classic 50 urban / 100 rural contiguous
    runs; both are configurable.
    """

    districts_per_stratum: Mapping[tuple[str, str], int]
    urban_take: int = 50
    rural_take: int = 100

    def __post_init__(self) -> None:
        for key, count in self.districts_per_stratum.items():
            if count <= 0:
                raise DesignError(f"district count for {key!r} must be positive, got {count}")
        if self.urban_take <= 0 or self.rural_take <= 0:
            raise DesignError("take sizes must be positive")

    def take_for(self, stratum: str) -> int:
        return self.urban_take if stratum == URBAN else self.rural_take


@dataclass(frozen=True)
class HouseholdTake:
    district_id: str
    households: tuple[str, ...]
    short_take: bool


@dataclass(frozen=True)
class SampledHousehold:
    household_id: str
    district_id: str
    province: str
    stratum: str
    probability: float
    weight: float


@dataclass(frozen=True)
class DrawnSample:
    households: tuple[SampledHousehold, ...]
    short_districts: tuple[str, ...]


@dataclass(frozen=True)
class WeightedHousehold:
    """A sampled household with its design weight and interview status."""

    household_id: str
    district_id: str
    base_weight: float
    adjusted_weight: float
    status: str = INTERVIEWED
    address_type: str = "single_unit"

    def __post_init__(self) -> None:
        if self.status not in (INTERVIEWED, TEMPORARILY_ABSENT, NOT_LISTED):
            raise DomainError(f"unknown interview status {self.status!r}")
        if self.address_type not in ADDRESS_TYPES:
            raise DomainError(f"unknown address type {self.address_type!r}")
        if not math.isfinite(self.base_weight) or self.base_weight <= 0:
            raise DomainError(f"base weight must be positive, got {self.base_weight!r}")


def systematic_indices(total: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Systematic selection of `count` indices out of `total`.

    A random start in [0, step) with step = total / count gives every index
    an inclusion probability of exactly count / total, whether or not the
    step divides evenly.
    """
    if count <= 0:
        raise DesignError(f"count must be positive, got {count}")
    if count > total:
        raise DesignError(f"cannot select {count} units from a frame of {total}")
    step = total / count
    start = rng.uniform(0.0, step)
    return np.floor(start + step * np.arange(count)).astype(np.int64)


def select_psus(
    frame: Sequence[District],
    design: SampleDesign,
    rng: np.random.Generator,
) -> list[District]:
    """Systematic district selection within each (province, stratum).

    Frame order within a stratum is preserved, so the selected districts
    form an arithmetic progression through the listing.
    """
    by_stratum: dict[tuple[str, str], list[District]] = {}
    for district in frame:
        by_stratum.setdefault((district.province, district.stratum), []).append(district)

    selected: list[District] = []
    for key in sorted(design.districts_per_stratum):
        wanted = design.districts_per_stratum[key]
        available = by_stratum.get(key, [])
        if wanted > len(available):
            raise DesignError(
                f"design asks for {wanted} districts in {key!r} but the frame holds "
                f"{len(available)}"
            )
        for index in systematic_indices(len(available), wanted, rng):
            selected.append(available[int(index)])
    return selected


def select_households(
    district: District,
    take: int,
    rng: np.random.Generator,
) -> HouseholdTake:
    """Contiguous wrap-around run of `take` households in reverse listing order.

    Districts smaller than the take are returned whole and flagged.
    """
    if take <= 0:
        raise DesignError(f"take must be positive, got {take}")
    listing = district.households
    n = len(listing)
    if n == 0:
        raise DesignError(f"district {district.district_id!r} has an empty listing")
    if n <= take:
        return HouseholdTake(district.district_id, listing, short_take=True)
    start = int(rng.integers(n))
    chosen = tuple(listing[(start - offset) % n] for offset in range(take))
    return HouseholdTake(district.district_id, chosen, short_take=False)


def selection_probability(n_d: int, tn_d: int, n_h: int, tn_h: int) -> float:
    """Two-stage inclusion probability (n_d / tn_d) * (n_h / tn_h)."""
    for name, value in (("n_d", n_d), ("tn_d", tn_d), ("n_h", n_h), ("tn_h", tn_h)):
        if value <= 0:
            raise DesignError(f"{name} must be positive, got {value}")
    if n_d > tn_d:
        raise DesignError(f"n_d={n_d} exceeds the district frame tn_d={tn_d}")
    if n_h > tn_h:
        raise DesignError(f"n_h={n_h} exceeds the household listing tn_h={tn_h}")
    return (n_d / tn_d) * (n_h / tn_h)


def draw_sample(
    frame: Sequence[District],
    design: SampleDesign,
    seed: int | np.random.SeedSequence,
) -> DrawnSample:
    """Run both stages and attach design weights.

    Deterministic: the same seed, frame and design reproduce the same
    sample exactly.  Short districts are taken whole with their true
    inclusion probability (the household factor becomes 1).
    """
    rng = np.random.default_rng(seed)
    totals = {
        key: sum(1 for d in frame if (d.province, d.stratum) == key)
        for key in design.districts_per_stratum
    }
    selected = select_psus(frame, design, rng)
    households: list[SampledHousehold] = []
    short: list[str] = []
    for district in selected:
        key = (district.province, district.stratum)
        take = design.take_for(district.stratum)
        chosen = select_households(district, take, rng)
        if chosen.short_take:
            short.append(district.district_id)
        probability = selection_probability(
            design.districts_per_stratum[key],
            totals[key],
            len(chosen.households),
            district.household_count,
        )
        weight = 1.0 / probability
        for household_id in chosen.households:
            households.append(
                SampledHousehold(
                    household_id=household_id,
                    district_id=district.district_id,
                    province=district.province,
                    stratum=district.stratum,
                    probability=probability,
                    weight=weight,
                )
            )
    return DrawnSample(households=tuple(households), short_districts=tuple(short))


def _default_cell_key(household: WeightedHousehold) -> tuple[str, str]:
    return (household.district_id, household.address_type)


def noninterview_adjust(
    households: Iterable[WeightedHousehold],
    cell_key: Callable[[WeightedHousehold], tuple] | None = None,
) -> list[WeightedHousehold]:
    """Spread non-interviewed households' weight within adjustment cells.

    Within each cell the interviewed households absorb the full base-weight
    total, so the weighted total is conserved; non-interviewed households
    end with zero adjusted weight.  A cell with no interviewed household is
    merged into the next address type on the ladder within the same
    district before adjustment; if a whole district has no interviewed
    household, EmptyCell is raised.
    """
    if cell_key is None:
        cell_key = _default_cell_key
    households = list(households)
    cells: dict[tuple, list[int]] = {}
    for position, household in enumerate(households):
        cells.setdefault(cell_key(household), []).append(position)

    def has_interview(key: tuple) -> bool:
        return any(households[i].status == INTERVIEWED for i in cells.get(key, []))

    # Merge ladder applies only to the default (district, address_type) key.
    merged: dict[tuple, list[int]] = {}
    for key, members in cells.items():
        target = key
        if not has_interview(key) and len(key) == 2 and key[1] in ADDRESS_TYPES:
            district, address_type = key
            ladder = ADDRESS_TYPES.index(address_type)
            for step in range(1, len(ADDRESS_TYPES)):
                candidate = (district, ADDRESS_TYPES[(ladder + step) % len(ADDRESS_TYPES)])
                if has_interview(candidate):
                    target = candidate
                    break
        merged.setdefault(target, []).extend(members)

    adjusted = list(households)
    for key, members in merged.items():
        base_total = sum(households[i].base_weight for i in members)
        interviewed = [i for i in members if households[i].status == INTERVIEWED]
        interviewed_total = sum(households[i].base_weight for i in interviewed)
        if interviewed_total == 0:
            raise EmptyCell(f"no interviewed household in adjustment cell {key!r}")
        factor = base_total / interviewed_total
        interviewed_set = set(interviewed)
        for i in members:
            household = households[i]
            weight = household.base_weight * factor if i in interviewed_set else 0.0
            adjusted[i] = replace(household, adjusted_weight=weight)
    return adjusted


def write_district_frame(path: str, frame: Sequence[District]) -> None:
    """Write a district frame as delimited text, one district per row."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["district_id", "province", "stratum", "household_count"])
        for district in frame:
            writer.writerow(
                [district.district_id, district.province, district.stratum,
                 district.household_count]
            )


def read_district_frame(path: str) -> list[District]:
    """Read a district frame written by :func:`write_district_frame`.

    Household identifiers are synthesized from the district identifier, in
    listing order.
    """
    frame: list[District] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"district_id", "province", "stratum", "household_count"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DesignError(f"district frame must carry columns {sorted(required)}")
        for row in reader:
            count = int(row["household_count"])
            households = tuple(f"{row['district_id']}-h{j:05d}" for j in range(count))
            frame.append(
                District(
                    district_id=row["district_id"],
                    province=row["province"],
                    stratum=row["stratum"],
                    households=households,
                )
            )
    return frame
