"""Synthetic closed populations and the two capture passes over them.

A world is a set of persons placed in households, households placed in
districts, districts split urban/rural across provinces.  Between census
time and survey time people may move house, die, or be born; the
population is closed otherwise, so every in-mover is the same person as
some out-mover and the national counts agree exactly.

The census pass captures each eligible person independently with a
post-stratum probability, then injects the field pathologies that coverage
estimation has to cope with: whole-person imputations (records that count
but cannot be matched), duplicate records, and fabricated records.  The
survey pass captures with its own probability, modified by two
assumption-violating knobs:

    dependence     log-odds penalty on survey capture after a census miss,
                   so positive values make misses correlate (doubly-missing
                   persons become more common than independence predicts)
    heterogeneity  scale of a per-person propensity shared by both passes,
                   so positive values correlate capture probabilities

Both knobs at zero give independent homogeneous captures, the model under
which dual-system estimation is exact.

All person-level state lives in parallel numpy arrays so that Monte Carlo
replication stays cheap at census-like sizes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "SCOPE_IN",
    "SCOPE_BORN",
    "SCOPE_DIED",
    "CEN_WITH_Q",
    "CEN_WITHOUT_Q",
    "CEN_NOT_LISTED",
    "PES_WITH_Q",
    "PES_ABSENT",
    "PES_NOT_LISTED",
    "PES_VACANT",
    "PES_VACANT_MISSED",
    "PopulationConfig",
    "CaptureProbabilities",
    "Districts",
    "Households",
    "Population",
    "CensusSim",
    "PesSim",
    "GroundTruthLedger",
    "synthesize_population",
    "simulate_census",
    "simulate_pes",
    "ground_truth_ledger",
    "group_labels",
    "person_groups",
    "write_population",
]

# Person scope relative to the census target population.
SCOPE_IN = 0      # alive at census time and at survey time
SCOPE_BORN = 1    # born after census time: outside the census target
SCOPE_DIED = 2    # died after census time: inside the target, gone at survey time

# Census household listing status.
CEN_WITH_Q = 0
CEN_WITHOUT_Q = 1
CEN_NOT_LISTED = 2

# Survey household listing status.
PES_WITH_Q = 0
PES_ABSENT = 1          # listed, interview not obtained
PES_NOT_LISTED = 2      # occupied but missed by the listing
PES_VACANT = 3          # empty at survey time, dwelling reached (proxies available)
PES_VACANT_MISSED = 4   # empty at survey time, dwelling missed

_ADDRESS_PROBS = (0.6, 0.3, 0.1)  # single_unit, multi_unit, other


def _logit(p: np.ndarray) -> np.ndarray:
    return np.log(p) - np.log1p(-p)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    expx = np.exp(x[~positive])
    out[~positive] = expx / (1.0 + expx)
    return out


@dataclass(frozen=True)
class PopulationConfig:
    """Shape of the synthetic world.

    `persons` is the census-time population size; births are drawn on top
    of it and deaths within it.  Post-strata are sex crossed with
    `age_groups` age bands.
    """

    persons: int = 10_000
    provinces: int = 2
    urban_districts: int = 4
    rural_districts: int = 2
    urban_share: float = 0.7
    mean_household_size: float = 3.5
    mover_rate: float = 0.0
    new_household_rate: float = 0.3
    birth_rate: float = 0.0
    death_rate: float = 0.0
    institutional_rate: float = 0.0
    age_groups: int = 5

    def __post_init__(self) -> None:
        if self.persons <= 0:
            raise ConfigError(f"persons must be positive, got {self.persons}")
        if self.provinces <= 0:
            raise ConfigError(f"provinces must be positive, got {self.provinces}")
        if self.urban_districts < 1 or self.rural_districts < 1:
            raise ConfigError("each province needs at least one urban and one rural district")
        if not 0.0 <= self.urban_share <= 1.0:
            raise ConfigError(f"urban_share must lie in [0, 1], got {self.urban_share}")
        if self.mean_household_size <= 0:
            raise ConfigError("mean_household_size must be positive")
        for name in ("mover_rate", "birth_rate", "death_rate", "institutional_rate"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {value}")
        if not 0.0 <= self.new_household_rate <= 1.0:
            raise ConfigError("new_household_rate must lie in [0, 1]")
        if self.age_groups < 1:
            raise ConfigError("age_groups must be at least 1")

    @property
    def n_post_strata(self) -> int:
        return 2 * self.age_groups


@dataclass(frozen=True)
class CaptureProbabilities:
    """Per-post-stratum capture model for both passes."""

    census: np.ndarray
    pes: np.ndarray
    dependence: np.ndarray
    heterogeneity: np.ndarray

    def __post_init__(self) -> None:
        arrays = {
            "census": np.asarray(self.census, dtype=np.float64),
            "pes": np.asarray(self.pes, dtype=np.float64),
            "dependence": np.asarray(self.dependence, dtype=np.float64),
            "heterogeneity": np.asarray(self.heterogeneity, dtype=np.float64),
        }
        size = arrays["census"].shape
        for name, arr in arrays.items():
            if arr.shape != size:
                raise ConfigError("capture arrays must share one shape per post-stratum")
            object.__setattr__(self, name, arr)
        for name in ("census", "pes"):
            arr = arrays[name]
            if np.any(arr <= 0.0) or np.any(arr >= 1.0):
                raise ConfigError(f"{name} capture probabilities must lie strictly inside (0, 1)")
        if np.any(arrays["heterogeneity"] < 0.0):
            raise ConfigError("heterogeneity must be non-negative")
        if not np.all(np.isfinite(arrays["dependence"])):
            raise ConfigError("dependence must be finite")

    @classmethod
    def uniform(
        cls,
        n_strata: int,
        census: float,
        pes: float,
        dependence: float = 0.0,
        heterogeneity: float = 0.0,
    ) -> "CaptureProbabilities":
        ones = np.ones(n_strata, dtype=np.float64)
        return cls(
            census=census * ones,
            pes=pes * ones,
            dependence=dependence * ones,
            heterogeneity=heterogeneity * ones,
        )


@dataclass(frozen=True)
class Districts:
    province: np.ndarray        # province index per district
    stratum: np.ndarray         # 0 urban, 1 rural
    province_labels: tuple[str, ...]

    @property
    def count(self) -> int:
        return int(self.province.shape[0])


@dataclass(frozen=True)
class Households:
    district: np.ndarray        # district index per household
    address_type: np.ndarray    # index into sampling.ADDRESS_TYPES
    institutional: np.ndarray   # outside the survey target universe

    @property
    def count(self) -> int:
        return int(self.district.shape[0])


@dataclass(frozen=True)
class Population:
    """One synthetic world, frozen after generation."""

    census_household: np.ndarray   # household index, -1 for persons born later
    pes_household: np.ndarray      # household index, -1 for persons who died
    post_stratum: np.ndarray
    scope: np.ndarray
    propensity: np.ndarray         # shared capture propensity, standard normal
    households: Households
    districts: Districts
    stratum_labels: tuple[str, ...]

    @property
    def size(self) -> int:
        return int(self.scope.shape[0])

    @property
    def n_post_strata(self) -> int:
        return len(self.stratum_labels)

    def household_non_institutional(self) -> np.ndarray:
        return ~self.households.institutional

    def in_target(self) -> np.ndarray:
        """Census target scope: existed at census time, in an ordinary
        (non-institutional) household."""
        home = np.where(self.census_household >= 0, self.census_household, 0)
        ordinary = ~self.households.institutional[home]
        return (self.scope != SCOPE_BORN) & ordinary

    def home_district(self) -> np.ndarray:
        """District of the census-time household, falling back to the
        survey-time household for persons born after the census."""
        home = np.where(self.census_household >= 0, self.census_household, self.pes_household)
        return self.households.district[home]

    def is_mover(self) -> np.ndarray:
        return (
            (self.scope == SCOPE_IN)
            & (self.census_household >= 0)
            & (self.pes_household >= 0)
            & (self.census_household != self.pes_household)
        )


@dataclass(frozen=True)
class CensusSim:
    """Census pass over one population."""

    captured: np.ndarray     # person has a census record (imputed ones included)
    imputed: np.ndarray      # the record is a whole-person imputation
    duplicated: np.ndarray   # an extra duplicate record exists for the person
    fab_person: np.ndarray   # source-person index per fabricated record
    hh_status: np.ndarray    # census listing status per household

    def record_count(self) -> int:
        return int(self.captured.sum() + self.duplicated.sum() + self.fab_person.shape[0])


@dataclass(frozen=True)
class PesSim:
    """Survey pass over one population.

    `listed` is the person-level capture draw; it only takes effect where
    the relevant household was actually interviewed or, for out-mover
    reports, reachable.  `proxy_ok` is the extra report-quality draw that
    out-mover and death reports must also pass.
    """

    listed: np.ndarray
    proxy_ok: np.ndarray
    hh_status: np.ndarray


@dataclass(frozen=True)
class GroundTruthLedger:
    """Exact coverage accounting for one estimation group."""

    true_total: float
    census_count: float
    undercount: float
    overcount: float

    def __post_init__(self) -> None:
        residual = self.true_total - (self.census_count + self.undercount - self.overcount)
        if abs(residual) > 1e-9:
            raise DomainError(
                f"ledger identity violated: T={self.true_total}, C={self.census_count}, "
                f"U={self.undercount}, O={self.overcount}"
            )

    @property
    def gross_error(self) -> float:
        return self.undercount + self.overcount

    @property
    def net_undercount(self) -> float:
        return self.undercount - self.overcount


def synthesize_population(
    config: PopulationConfig,
    seed: int | np.random.SeedSequence,
) -> Population:
    """Generate one world.  Deterministic in (config, seed)."""
    rng = np.random.default_rng(seed)

    district_per_province = config.urban_districts + config.rural_districts
    n_districts = config.provinces * district_per_province
    d_province = np.repeat(np.arange(config.provinces, dtype=np.int32), district_per_province)
    d_stratum = np.tile(
        np.concatenate(
            [
                np.zeros(config.urban_districts, dtype=np.int8),
                np.ones(config.rural_districts, dtype=np.int8),
            ]
        ),
        config.provinces,
    )
    province_labels = tuple(f"p{index:02d}" for index in range(config.provinces))
    districts = Districts(province=d_province, stratum=d_stratum, province_labels=province_labels)

    # Household placement: urban districts share urban_share of households.
    n_urban = int((d_stratum == 0).sum())
    n_rural = n_districts - n_urban
    district_weight = np.where(
        d_stratum == 0,
        config.urban_share / n_urban,
        (1.0 - config.urban_share) / n_rural,
    )
    district_weight = district_weight / district_weight.sum()

    n_households = max(1, round(config.persons / config.mean_household_size))
    hh_district = rng.choice(n_districts, size=n_households, p=district_weight).astype(np.int32)
    hh_address = rng.choice(3, size=n_households, p=_ADDRESS_PROBS).astype(np.int8)
    hh_institutional = rng.random(n_households) < config.institutional_rate
    if hh_institutional.all():
        raise ConfigError("institutional_rate left no ordinary household")

    census_hh = rng.integers(0, n_households, size=config.persons).astype(np.int64)
    scope = np.zeros(config.persons, dtype=np.int8)
    scope[rng.random(config.persons) < config.death_rate] = SCOPE_DIED

    pes_hh = census_hh.copy()
    pes_hh[scope == SCOPE_DIED] = -1

    movable = (scope == SCOPE_IN) & ~hh_institutional[census_hh]
    mover = movable & (rng.random(config.persons) < config.mover_rate)
    mover_idx = np.nonzero(mover)[0]
    forms_new = rng.random(mover_idx.shape[0]) < config.new_household_rate

    new_count = int(forms_new.sum())
    if new_count:
        new_district = rng.choice(n_districts, size=new_count, p=district_weight).astype(np.int32)
        new_address = rng.choice(3, size=new_count, p=_ADDRESS_PROBS).astype(np.int8)
        hh_district = np.concatenate([hh_district, new_district])
        hh_address = np.concatenate([hh_address, new_address])
        hh_institutional = np.concatenate([hh_institutional, np.zeros(new_count, dtype=bool)])
        pes_hh[mover_idx[forms_new]] = n_households + np.arange(new_count)

    joiners = mover_idx[~forms_new]
    ordinary = np.nonzero(~hh_institutional[:n_households])[0]
    if joiners.shape[0]:
        destination = ordinary[rng.integers(0, ordinary.shape[0], size=joiners.shape[0])]
        stuck = destination == census_hh[joiners]
        while stuck.any():
            destination[stuck] = ordinary[rng.integers(0, ordinary.shape[0], size=int(stuck.sum()))]
            stuck = destination == census_hh[joiners]
        pes_hh[joiners] = destination

    n_births = int(rng.binomial(config.persons, config.birth_rate)) if config.birth_rate else 0
    if n_births:
        ordinary_all = np.nonzero(~hh_institutional)[0]
        born_hh = ordinary_all[rng.integers(0, ordinary_all.shape[0], size=n_births)]
        census_hh = np.concatenate([census_hh, np.full(n_births, -1, dtype=np.int64)])
        pes_hh = np.concatenate([pes_hh, born_hh.astype(np.int64)])
        scope = np.concatenate([scope, np.full(n_births, SCOPE_BORN, dtype=np.int8)])

    n_total = census_hh.shape[0]
    sex = rng.integers(0, 2, size=n_total).astype(np.int16)
    age = rng.integers(0, config.age_groups, size=n_total).astype(np.int16)
    post_stratum = (sex * config.age_groups + age).astype(np.int16)
    stratum_labels = tuple(
        f"{sex_label}_a{band}"
        for sex_label in ("m", "f")
        for band in range(config.age_groups)
    )
    propensity = rng.standard_normal(n_total)

    households = Households(
        district=hh_district,
        address_type=hh_address,
        institutional=hh_institutional,
    )
    return Population(
        census_household=census_hh,
        pes_household=pes_hh,
        post_stratum=post_stratum,
        scope=scope,
        propensity=propensity,
        households=households,
        districts=districts,
        stratum_labels=stratum_labels,
    )


def simulate_census(
    pop: Population,
    probs: CaptureProbabilities,
    ee_rate: float = 0.0,
    ii_rate: float = 0.0,
    seed: int | np.random.SeedSequence = 0,
    listed_nonresponse_rate: float = 0.0,
) -> CensusSim:
    """Capture pass one.

    Each census-scope person is captured independently with the
    post-stratum probability on the heterogeneity-shifted logit scale.
    With probability ee_rate a person sources an erroneous record: a
    duplicate when the person was captured, a fabricated record in their
    household otherwise.  Captured persons' records are whole-person
    imputations with probability ii_rate.  Households listed without a
    questionnaire (rate `listed_nonresponse_rate`) yield no person records
    at all.
    """
    for name, rate in (
        ("ee_rate", ee_rate),
        ("ii_rate", ii_rate),
        ("listed_nonresponse_rate", listed_nonresponse_rate),
    ):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"{name} must lie in [0, 1), got {rate}")
    if probs.census.shape[0] != pop.n_post_strata:
        raise ConfigError("capture arrays do not cover the population's post-strata")

    rng = np.random.default_rng(seed)
    n = pop.size
    n_hh = pop.households.count
    ps = pop.post_stratum

    logits = _logit(probs.census[ps]) + probs.heterogeneity[ps] * pop.propensity
    p_capture = _sigmoid(logits)

    eligible = pop.scope != SCOPE_BORN
    home = np.where(pop.census_household >= 0, pop.census_household, 0)

    noq_hh = (
        rng.random(n_hh) < listed_nonresponse_rate
        if listed_nonresponse_rate
        else np.zeros(n_hh, dtype=bool)
    )
    responding_home = ~noq_hh[home]

    captured = (rng.random(n) < p_capture) & eligible & responding_home
    imputed = captured & (rng.random(n) < ii_rate) if ii_rate else np.zeros(n, dtype=bool)
    if ee_rate:
        erroneous = (rng.random(n) < ee_rate) & eligible & responding_home
        duplicated = erroneous & captured
        fab_person = np.nonzero(erroneous & ~captured)[0]
    else:
        duplicated = np.zeros(n, dtype=bool)
        fab_person = np.zeros(0, dtype=np.int64)

    occupied = np.bincount(home[eligible], minlength=n_hh) > 0
    record_hh = np.concatenate([home[captured], home[fab_person]])
    has_records = np.bincount(record_hh, minlength=n_hh) > 0

    hh_status = np.full(n_hh, CEN_NOT_LISTED, dtype=np.int8)
    hh_status[has_records] = CEN_WITH_Q
    hh_status[noq_hh & occupied] = CEN_WITHOUT_Q
    return CensusSim(
        captured=captured,
        imputed=imputed,
        duplicated=duplicated,
        fab_person=fab_person,
        hh_status=hh_status,
    )


def simulate_pes(
    pop: Population,
    census: CensusSim,
    probs: CaptureProbabilities,
    seed: int | np.random.SeedSequence = 0,
    proxy_miss: float = 0.0,
    absent_rate: float = 0.0,
    unlisted_rate: float = 0.0,
) -> PesSim:
    """Capture pass two.

    A person's survey logit is the post-stratum base, plus the shared
    propensity, minus `dependence` when the census missed them.  The same
    draws serve every mover procedure, so procedure comparisons on one
    world are paired: the census-time roster, the survey-time roster and
    their union see identical capture events.

    Household-level nonresponse: occupied households are temporarily
    absent with `absent_rate` and missed by the listing with
    `unlisted_rate`; vacated dwellings are missed with `unlisted_rate`,
    otherwise proxies remain reachable.
    """
    for name, rate in (
        ("proxy_miss", proxy_miss),
        ("absent_rate", absent_rate),
        ("unlisted_rate", unlisted_rate),
    ):
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"{name} must lie in [0, 1), got {rate}")
    if absent_rate + unlisted_rate >= 1.0:
        raise ConfigError("absent_rate + unlisted_rate must stay below 1")
    if probs.pes.shape[0] != pop.n_post_strata:
        raise ConfigError("capture arrays do not cover the population's post-strata")

    rng = np.random.default_rng(seed)
    n = pop.size
    n_hh = pop.households.count
    ps = pop.post_stratum

    logits = (
        _logit(probs.pes[ps])
        + probs.heterogeneity[ps] * pop.propensity
        - probs.dependence[ps] * (~census.captured)
    )
    listed = rng.random(n) < _sigmoid(logits)
    proxy_ok = rng.random(n) >= proxy_miss if proxy_miss else np.ones(n, dtype=bool)

    here = np.where(pop.pes_household >= 0, pop.pes_household, 0)
    pes_occupied = np.bincount(here[pop.pes_household >= 0], minlength=n_hh) > 0

    roll = rng.random(n_hh)
    hh_status = np.full(n_hh, PES_WITH_Q, dtype=np.int8)
    hh_status[roll < absent_rate + unlisted_rate] = PES_NOT_LISTED
    hh_status[roll < absent_rate] = PES_ABSENT
    vacant = ~pes_occupied
    hh_status[vacant] = PES_VACANT
    hh_status[vacant & (roll < unlisted_rate)] = PES_VACANT_MISSED
    return PesSim(listed=listed, proxy_ok=proxy_ok, hh_status=hh_status)


def group_labels(pop: Population, level: str) -> tuple[str, ...]:
    """Group labels for an estimation level."""
    if level == "national":
        return ("all",)
    if level == "post_stratum":
        return pop.stratum_labels
    if level == "province_stratum":
        labels = []
        for province in pop.districts.province_labels:
            for stratum in ("urban", "rural"):
                labels.append(f"{province}/{stratum}")
        return tuple(labels)
    raise ConfigError(f"unknown grouping level {level!r}")


def person_groups(pop: Population, level: str) -> np.ndarray:
    """Group index per person at an estimation level."""
    if level == "national":
        return np.zeros(pop.size, dtype=np.int32)
    if level == "post_stratum":
        return pop.post_stratum.astype(np.int32)
    if level == "province_stratum":
        district = pop.home_district()
        return (
            pop.districts.province[district].astype(np.int32) * 2
            + pop.districts.stratum[district].astype(np.int32)
        )
    raise ConfigError(f"unknown grouping level {level!r}")


def ground_truth_ledger(
    pop: Population,
    census: CensusSim,
    level: str = "national",
) -> dict[str, GroundTruthLedger]:
    """Exact per-group ledgers from the world itself.

    All quantities are target-scope: persons and records in institutional
    households are outside the survey universe and excluded throughout.
    """
    labels = group_labels(pop, level)
    groups = person_groups(pop, level)
    n_groups = len(labels)
    target = pop.in_target()

    true_total = np.bincount(groups[target], minlength=n_groups)
    captured = np.bincount(groups[target & census.captured], minlength=n_groups)
    undercount = true_total - captured
    duplicates = np.bincount(groups[target & census.duplicated], minlength=n_groups)
    fab_target = census.fab_person[target[census.fab_person]]
    fabrications = np.bincount(groups[fab_target], minlength=n_groups)
    overcount = duplicates + fabrications
    census_count = captured + overcount

    return {
        labels[g]: GroundTruthLedger(
            true_total=float(true_total[g]),
            census_count=float(census_count[g]),
            undercount=float(undercount[g]),
            overcount=float(overcount[g]),
        )
        for g in range(n_groups)
    }


def write_population(
    path: str,
    pop: Population,
    census: CensusSim | None = None,
    pes: PesSim | None = None,
) -> None:
    """Snapshot the world as delimited text, one person per row."""
    scope_names = {SCOPE_IN: "in_scope", SCOPE_BORN: "born_after", SCOPE_DIED: "died_after"}
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        header = [
            "person_id", "census_household", "pes_household", "district",
            "post_stratum", "scope", "mover",
        ]
        if census is not None:
            header += ["captured_census", "imputed", "duplicated"]
        if pes is not None:
            header += ["listed_pes", "proxy_ok"]
        writer.writerow(header)
        mover = pop.is_mover()
        district = pop.home_district()
        for i in range(pop.size):
            row = [
                i,
                int(pop.census_household[i]),
                int(pop.pes_household[i]),
                int(district[i]),
                pop.stratum_labels[pop.post_stratum[i]],
                scope_names[int(pop.scope[i])],
                int(mover[i]),
            ]
            if census is not None:
                row += [int(census.captured[i]), int(census.imputed[i]), int(census.duplicated[i])]
            if pes is not None:
                row += [int(pes.listed[i]), int(pes.proxy_ok[i])]
            writer.writerow(row)
