"""Record matching between the census and the survey, and final coding.

Matching is driven by the household grid: each household falls into a cell
of census listing status crossed with survey listing status, and the cell
decides how its records are handled.

    census WITH_Q   x survey WITH_Q        person-level matching
    census WITH_Q   x survey ABSENT        census records presumed matched
    census WITH_Q   x survey NOT_LISTED /
                      VACANT / VACANT_MISSED
                                           census records resolved as survey
                                           omissions unless an out-mover
                                           report reaches them
    census missed   x survey WITH_Q        whole household coded a census
                                           omission outright (bare 42), or a
                                           survey-only household when nobody
                                           lived there at census time
    census WITHOUT_Q x survey ABSENT       excluded, marker '#'
    census WITHOUT_Q x survey NOT_LISTED   excluded, marker '§'
    census NOT_LISTED x survey ABSENT      excluded, marker '¶'

Person-level outcomes use the field code taxonomy: 10 matched non-mover,
20 in-mover on the survey roster, 30 out-mover or death confirmed by proxy
report, 41 erroneous survey record, 51 erroneous census record, 42/1..4
census omissions and 52/1..4 survey omissions, subcoded by how the omission
arose (whole household missed, household known but unenumerated, resolved
from external sources, person-level within a processed household).  Codes
20, 41 and 51 never enter the population estimate.

Matching errors are injected after the truth is known, so every biased
outcome has a correct counterfactual: false nonmatches split a matched
pair into a 42/4 plus a 52/4, false matches turn an unmatched survey
record into a spurious 10, household false nonmatches split a household's
pairs into 42/2 plus 52/2, and resolution flips swap omission and
erroneous outcomes during follow-up.

Excluded cells are either left out (the carry-forward of the field rules,
`exclusion_mode="sci"`) or handled by a simulated full-information
follow-up (`exclusion_mode="adjusted"`): '#' households are covered by
reweighting interviewed survey households within district and address
type, '§' households have their census-time members recovered as 42/2,
and '¶' households are interviewed late, yielding 20s and 42/1s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .estimators import FCodeTallies, MoverTallies
from .popsim import (
    CEN_NOT_LISTED,
    CEN_WITH_Q,
    CEN_WITHOUT_Q,
    PES_ABSENT,
    PES_NOT_LISTED,
    PES_VACANT,
    PES_VACANT_MISSED,
    PES_WITH_Q,
    SCOPE_BORN,
    SCOPE_DIED,
    SCOPE_IN,
    CensusSim,
    PesSim,
    Population,
    group_labels,
)

__all__ = [
    "CODE_NONE",
    "CODE_PAIRED",
    "CODE_10",
    "CODE_20",
    "CODE_30",
    "CODE_41",
    "CODE_51",
    "CODE_42_1",
    "CODE_42_2",
    "CODE_42_3",
    "CODE_42_4",
    "CODE_52_1",
    "CODE_52_2",
    "CODE_52_3",
    "CODE_52_4",
    "CODE_LABELS",
    "CELL_NAMES",
    "EXCLUSION_MARKERS",
    "MatchErrorModel",
    "MatchResult",
    "MatchTallies",
    "match_and_code",
    "tally_groups",
]

CODE_NONE = 0
CODE_PAIRED = 1      # census record represented by its survey-side pair row
CODE_10 = 10
CODE_20 = 20
CODE_30 = 30
CODE_41 = 41
CODE_51 = 51
CODE_42_1 = 421
CODE_42_2 = 422
CODE_42_3 = 423
CODE_42_4 = 424
CODE_52_1 = 521
CODE_52_2 = 522
CODE_52_3 = 523
CODE_52_4 = 524

CODE_LABELS = {
    CODE_10: "10",
    CODE_20: "20",
    CODE_30: "30",
    CODE_41: "41",
    CODE_51: "51",
    CODE_42_1: "42/1",
    CODE_42_2: "42/2",
    CODE_42_3: "42/3",
    CODE_42_4: "42/4",
    CODE_52_1: "52/1",
    CODE_52_2: "52/2",
    CODE_52_3: "52/3",
    CODE_52_4: "52/4",
}
CODE_BY_LABEL = {label: code for code, label in CODE_LABELS.items()}

# Household grid cells.
CELL_DARK = 0
CELL_PAIR = 1
CELL_PRESUME = 2
CELL_CEN_NL = 3
CELL_CEN_VAC = 4
CELL_CEN_VACM = 5
CELL_BARE42 = 6
CELL_PES_ONLY = 7
CELL_HASH = 8
CELL_SECT = 9
CELL_PILCROW = 10
CELL_INSTITUTIONAL = 11

CELL_NAMES = {
    CELL_DARK: "dark",
    CELL_PAIR: "pair",
    CELL_PRESUME: "presume",
    CELL_CEN_NL: "census_only_not_listed",
    CELL_CEN_VAC: "census_only_vacated",
    CELL_CEN_VACM: "census_only_vacated_missed",
    CELL_BARE42: "bare_42",
    CELL_PES_ONLY: "survey_only",
    CELL_HASH: "#",
    CELL_SECT: "§",
    CELL_PILCROW: "¶",
    CELL_INSTITUTIONAL: "institutional",
}

EXCLUSION_MARKERS = {
    CELL_HASH: "temp-absent-no-questionnaire",
    CELL_SECT: "not-listed-no-questionnaire",
    CELL_PILCROW: "temp-absent-unlisted-census",
}


@dataclass(frozen=True)
class MatchErrorModel:
    """Independent per-record matching error rates.

    false_nonmatch breaks true links (pairs and out-mover links alike),
    false_match spuriously resolves unmatched survey records, and
    resolution_flip swaps the omission and erroneous outcomes of
    person-level follow-up.  household_false_nonmatch breaks every
    non-mover pair of an affected household at once.
    """

    false_nonmatch: float = 0.0
    false_match: float = 0.0
    resolution_flip: float = 0.0
    household_false_nonmatch: float = 0.0

    def __post_init__(self) -> None:
        for name in ("false_nonmatch", "false_match", "resolution_flip", "household_false_nonmatch"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {rate}")

    @property
    def any_error(self) -> bool:
        return bool(
            self.false_nonmatch or self.false_match
            or self.resolution_flip or self.household_false_nonmatch
        )


@dataclass(frozen=True)
class MatchResult:
    """Final codes for one matched world.

    Each person owns two slots: `pes_code` for their survey-side record
    (pair codes 10, roster codes 20/41/42/x) and `cen_code` for their
    census-side resolution (PAIRED sentinel, presumed 10, 30, 51, 52/x,
    plus 42/x for out-mover reports with no census record to land on).
    `orphan_code` carries the stranded report when a false nonmatch splits
    an out-mover link.  Duplicate and fabricated census records get their
    own code arrays.
    """

    pes_code: np.ndarray
    cen_code: np.ndarray
    orphan_code: np.ndarray
    birth: np.ndarray
    out_role: np.ndarray
    in_mover_matched: np.ndarray   # would match under a nationwide in-mover search
    dup_code: np.ndarray
    fab_code: np.ndarray
    hh_cell: np.ndarray
    exclusion_mode: str
    household_mask: np.ndarray

    def code_counts(self) -> dict[str, int]:
        """Unweighted tally of every emitted code, labels as keys."""
        counts: dict[str, int] = {}
        for code, label in CODE_LABELS.items():
            total = int(
                (self.pes_code == code).sum()
                + (self.cen_code == code).sum()
                + (self.orphan_code == code).sum()
                + (self.dup_code == code).sum()
                + (self.fab_code == code).sum()
            )
            if total:
                counts[label] = total
        return counts


@dataclass(frozen=True)
class MatchTallies:
    """Everything the estimators need for one estimation group."""

    group: str
    fcode: FCodeTallies
    movers: MoverTallies
    census_count: float
    imputations: float
    e_sample: float
    erroneous: float

    def census_correct(self) -> float:
        """(c - ii) * (1 - ee / ne); the deflation drops out when there is
        no E-sample mass to estimate it from."""
        base = self.census_count - self.imputations
        if self.e_sample == 0:
            return base
        return base * (1.0 - self.erroneous / self.e_sample)


def _classify_households(
    pop: Population,
    census: CensusSim,
    pes: PesSim,
) -> np.ndarray:
    n_hh = pop.households.count
    origin = np.where(pop.census_household >= 0, pop.census_household, 0)
    occupied_at_census = (
        np.bincount(origin[pop.scope != SCOPE_BORN], minlength=n_hh) > 0
    )

    cs = census.hh_status
    ss = pes.hh_status
    cell = np.full(n_hh, CELL_DARK, dtype=np.int8)

    with_q = cs == CEN_WITH_Q
    cell[with_q & (ss == PES_WITH_Q)] = CELL_PAIR
    cell[with_q & (ss == PES_ABSENT)] = CELL_PRESUME
    cell[with_q & (ss == PES_NOT_LISTED)] = CELL_CEN_NL
    cell[with_q & (ss == PES_VACANT)] = CELL_CEN_VAC
    cell[with_q & (ss == PES_VACANT_MISSED)] = CELL_CEN_VACM

    without_q = cs == CEN_WITHOUT_Q
    cell[without_q & (ss == PES_WITH_Q)] = CELL_BARE42
    cell[without_q & (ss == PES_ABSENT)] = CELL_HASH
    cell[without_q & (ss == PES_NOT_LISTED)] = CELL_SECT

    unlisted = cs == CEN_NOT_LISTED
    found = unlisted & (ss == PES_WITH_Q)
    cell[found & occupied_at_census] = CELL_BARE42
    cell[found & ~occupied_at_census] = CELL_PES_ONLY
    cell[unlisted & (ss == PES_ABSENT) & occupied_at_census] = CELL_PILCROW

    cell[pop.households.institutional] = CELL_INSTITUTIONAL
    return cell


def match_and_code(
    pop: Population,
    census: CensusSim,
    pes: PesSim,
    error_model: MatchErrorModel | None = None,
    seed: int | np.random.SeedSequence = 0,
    exclusion_mode: str = "sci",
    household_mask: np.ndarray | None = None,
) -> MatchResult:
    """Match the two record systems and assign final codes.

    Whole-person imputations are unmatchable by construction: their person
    behaves as census-missed during matching, which is the counterpart of
    subtracting imputations from the census count before estimation.

    `household_mask` restricts coding to a sampled household set; a
    record is coded only when the household it was collected at is in the
    sample.  Out-mover reports belong to the census-time household, roster
    records to the survey-time one.
    """
    if exclusion_mode not in ("sci", "adjusted"):
        raise ConfigError(f"exclusion_mode must be 'sci' or 'adjusted', got {exclusion_mode!r}")
    model = error_model if error_model is not None else MatchErrorModel()
    n = pop.size
    n_hh = pop.households.count
    if household_mask is None:
        hh_in = np.ones(n_hh, dtype=bool)
    else:
        hh_in = np.asarray(household_mask, dtype=bool)
        if hh_in.shape != (n_hh,):
            raise DomainError("household_mask must cover every household")
    adjusted = exclusion_mode == "adjusted"

    cell = _classify_households(pop, census, pes)
    rng = np.random.default_rng(seed)

    zeros = np.zeros(n, dtype=bool)
    fnm = rng.random(n) < model.false_nonmatch if model.false_nonmatch else zeros
    fm = rng.random(n) < model.false_match if model.false_match else zeros
    if model.resolution_flip:
        flip40 = rng.random(n) < model.resolution_flip
        flip50 = rng.random(n) < model.resolution_flip
    else:
        flip40 = zeros
        flip50 = zeros
    hh_fnm = (
        rng.random(n_hh) < model.household_false_nonmatch
        if model.household_false_nonmatch
        else np.zeros(n_hh, dtype=bool)
    )

    origin = np.where(pop.census_household >= 0, pop.census_household, 0)
    dest = np.where(pop.pes_household >= 0, pop.pes_household, 0)
    has_origin = pop.census_household >= 0
    has_dest = pop.pes_household >= 0
    ocell = np.where(has_origin, cell[origin], CELL_DARK)
    dcell = np.where(has_dest, cell[dest], CELL_DARK)
    o_status = pes.hh_status[origin]
    o_in = hh_in[origin] & has_origin
    d_in = hh_in[dest] & has_dest

    born = pop.scope == SCOPE_BORN
    mover = pop.is_mover()
    out_role = (mover | (pop.scope == SCOPE_DIED)) & has_origin
    in_role = (mover | born) & has_dest
    non_mover = (pop.scope == SCOPE_IN) & ~mover
    m_captured = census.captured & ~census.imputed
    listed = pes.listed

    pes_code = np.zeros(n, dtype=np.int16)
    cen_code = np.zeros(n, dtype=np.int16)
    orphan_code = np.zeros(n, dtype=np.int16)

    # --- non-movers: one household, both sides ---
    nm = non_mover & o_in
    pair = nm & (ocell == CELL_PAIR)

    would_match = pair & m_captured & listed
    hh_split = would_match & hh_fnm[origin]
    person_split = would_match & ~hh_split & fnm
    matched = would_match & ~hh_split & ~person_split
    pes_code[matched] = CODE_10
    cen_code[matched] = CODE_PAIRED
    pes_code[hh_split] = CODE_42_2
    cen_code[hh_split] = CODE_52_2
    pes_code[person_split] = np.where(flip40[person_split], CODE_41, CODE_42_4)
    cen_code[person_split] = np.where(flip50[person_split], CODE_51, CODE_52_4)

    survey_missed = pair & m_captured & ~listed
    cen_code[survey_missed] = np.where(flip50[survey_missed], CODE_51, CODE_52_4)

    census_missed = pair & ~m_captured & listed
    spurious = census_missed & fm
    pes_code[spurious] = CODE_10
    rest = census_missed & ~fm
    pes_code[rest] = np.where(flip40[rest], CODE_41, CODE_42_4)

    in_not_listed = nm & (ocell == CELL_CEN_NL) & m_captured
    cen_code[in_not_listed] = CODE_52_1

    bare = nm & (ocell == CELL_BARE42) & listed
    pes_code[bare] = np.where(
        census.hh_status[origin[bare]] == CEN_WITHOUT_Q, CODE_42_2, CODE_42_1
    )

    # --- presumption: survey-absent households with census records keep
    # every record as a match, the carry-forward of the field rule ---
    presumed = (ocell == CELL_PRESUME) & o_in & m_captured
    cen_code[presumed] = CODE_10

    # --- out-roles: movers-out and deaths, resolved at the origin ---
    avail = out_role & o_in & (ocell != CELL_INSTITUTIONAL) & (ocell != CELL_PRESUME)
    reported = (
        avail & listed & pes.proxy_ok
        & ((o_status == PES_WITH_Q) | (o_status == PES_VACANT))
    )
    linked = reported & m_captured & ~fnm
    cen_code[linked] = CODE_30
    link_fail = reported & m_captured & fnm
    orphan_code[link_fail] = np.where(flip40[link_fail], CODE_41, CODE_42_4)
    cen_code[link_fail] = np.where(flip50[link_fail], CODE_51, CODE_52_4)
    report_only = reported & ~m_captured
    cen_code[report_only] = np.where(flip40[report_only], CODE_41, CODE_42_4)

    unreported = avail & ~reported & m_captured
    at_home = unreported & (o_status == PES_WITH_Q)
    cen_code[at_home] = np.where(flip50[at_home], CODE_51, CODE_52_4)
    cen_code[unreported & (o_status == PES_VACANT)] = CODE_52_2
    cen_code[
        unreported & ((o_status == PES_NOT_LISTED) | (o_status == PES_VACANT_MISSED))
    ] = CODE_52_1

    # --- survey roster: in-movers and births at the destination ---
    roster_cell = (dcell == CELL_PAIR) | (dcell == CELL_BARE42) | (dcell == CELL_PES_ONLY)
    roster = in_role & d_in & listed & roster_cell
    pes_code[roster] = CODE_20

    if adjusted:
        # '§': recover every census-time member, none of whom has a record
        # on either side; '¶': late interview of the absent household.
        sect = (ocell == CELL_SECT) & o_in & ~born & (cen_code == CODE_NONE)
        cen_code[sect] = CODE_42_2
        pilcrow = (dcell == CELL_PILCROW) & d_in
        pes_code[pilcrow & non_mover] = CODE_42_1
        pes_code[pilcrow & in_role] = CODE_20

    # --- duplicate and fabricated census records ---
    dup_code = np.zeros(n, dtype=np.int16)
    dup = census.duplicated & o_in & (ocell != CELL_INSTITUTIONAL)
    dup_code[dup & (ocell == CELL_PRESUME)] = CODE_10
    dup_seen = dup & (ocell != CELL_PRESUME)
    if model.resolution_flip:
        dup_flip = rng.random(n) < model.resolution_flip
    else:
        dup_flip = zeros
    dup_code[dup_seen] = np.where(dup_flip[dup_seen], CODE_52_4, CODE_51)

    fab_home = origin[census.fab_person]
    fab_cell = cell[fab_home]
    fab_in = hh_in[fab_home] & (fab_cell != CELL_INSTITUTIONAL)
    fab_code = np.zeros(census.fab_person.shape[0], dtype=np.int16)
    fab_code[fab_in & (fab_cell == CELL_PRESUME)] = CODE_10
    fab_seen = fab_in & (fab_cell != CELL_PRESUME)
    if model.resolution_flip and fab_code.shape[0]:
        fab_flip = rng.random(fab_code.shape[0]) < model.resolution_flip
    else:
        fab_flip = np.zeros(fab_code.shape[0], dtype=bool)
    fab_code[fab_seen] = np.where(fab_flip[fab_seen], CODE_52_4, CODE_51)

    in_mover_matched = (pes_code == CODE_20) & ~born & m_captured & ~fnm

    return MatchResult(
        pes_code=pes_code,
        cen_code=cen_code,
        orphan_code=orphan_code,
        birth=born,
        out_role=out_role,
        in_mover_matched=in_mover_matched,
        dup_code=dup_code,
        fab_code=fab_code,
        hh_cell=cell,
        exclusion_mode=exclusion_mode,
        household_mask=hh_in,
    )


def _survey_weight_factor(
    pop: Population,
    result: MatchResult,
    weight: np.ndarray,
) -> np.ndarray:
    """Reweighting factor covering '#' households, by district and address
    type with district-wide then global fallback."""
    cell = result.hh_cell
    mask = result.household_mask
    interviewed = mask & (
        (cell == CELL_PAIR) | (cell == CELL_BARE42) | (cell == CELL_PES_ONLY)
    )
    missing = mask & (cell == CELL_HASH)
    factor = np.ones(pop.households.count, dtype=np.float64)
    if not missing.any():
        return factor

    district = pop.households.district.astype(np.int64)
    atype = pop.households.address_type.astype(np.int64)
    n_districts = pop.districts.count
    key = district * 3 + atype

    def spread(keys: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        base = np.bincount(keys[interviewed], weights=weight[interviewed], minlength=size)
        extra = np.bincount(keys[missing], weights=weight[missing], minlength=size)
        with np.errstate(invalid="ignore", divide="ignore"):
            f = np.where(base > 0, (base + extra) / np.maximum(base, 1e-300), 1.0)
        return f, base > 0, extra

    f_fine, covered_fine, extra_fine = spread(key, n_districts * 3)
    factor[interviewed] = f_fine[key[interviewed]]

    # Cells with '#' mass but nothing interviewed fall back to the district.
    orphan_fine = (~covered_fine) & (extra_fine > 0)
    if orphan_fine.any():
        carry = np.zeros(n_districts, dtype=np.float64)
        np.add.at(carry, np.nonzero(orphan_fine)[0] // 3, extra_fine[orphan_fine])
        base_d = np.bincount(
            district[interviewed], weights=weight[interviewed] * factor[interviewed],
            minlength=n_districts,
        )
        with np.errstate(invalid="ignore", divide="ignore"):
            f_d = np.where(base_d > 0, (base_d + carry) / np.maximum(base_d, 1e-300), 1.0)
        factor[interviewed] *= f_d[district[interviewed]]
        left = carry[base_d == 0].sum()
        if left > 0:
            total = (weight[interviewed] * factor[interviewed]).sum()
            if total > 0:
                factor[interviewed] *= (total + left) / total
    return factor


def _row_groups(pop: Population, level: str) -> tuple[np.ndarray, np.ndarray, int]:
    """Group index per person for survey-side rows (by destination) and
    census-side rows (by origin)."""
    n_groups = len(group_labels(pop, level))
    if level == "national":
        g = np.zeros(pop.size, dtype=np.int64)
        return g, g, n_groups
    if level == "post_stratum":
        g = pop.post_stratum.astype(np.int64)
        return g, g, n_groups

    district = pop.households.district
    prov = pop.districts.province.astype(np.int64)
    strat = pop.districts.stratum.astype(np.int64)

    def by_household(hh: np.ndarray) -> np.ndarray:
        safe = np.where(hh >= 0, hh, 0)
        d = district[safe]
        return prov[d] * 2 + strat[d]

    return by_household(pop.pes_household), by_household(pop.census_household), n_groups


def tally_groups(
    pop: Population,
    census: CensusSim,
    result: MatchResult,
    level: str = "national",
    household_weight: np.ndarray | None = None,
    with_in_mover_matching: bool = False,
) -> dict[str, MatchTallies]:
    """Weighted code tallies per estimation group.

    Survey-side rows carry the weight of the household they were collected
    at (after the '#' reweighting in adjusted mode), census-side rows the
    weight of the census household.  The census count and imputation count
    are whole-universe constants, never masked or weighted: they come from
    census processing, not from the survey sample.
    """
    n_hh = pop.households.count
    if household_weight is None:
        weight = np.ones(n_hh, dtype=np.float64)
    else:
        weight = np.asarray(household_weight, dtype=np.float64)
        if weight.shape != (n_hh,):
            raise DomainError("household_weight must cover every household")
        if np.any(weight < 0) or not np.all(np.isfinite(weight)):
            raise DomainError("household weights must be finite and non-negative")

    if result.exclusion_mode == "adjusted":
        survey_weight = weight * _survey_weight_factor(pop, result, weight)
    else:
        survey_weight = weight

    labels = group_labels(pop, level)
    g_pes, g_cen, n_groups = _row_groups(pop, level)

    origin = np.where(pop.census_household >= 0, pop.census_household, 0)
    dest = np.where(pop.pes_household >= 0, pop.pes_household, 0)
    w_pes_row = survey_weight[dest]
    w_cen_row = weight[origin]

    pes_code = result.pes_code
    cen_code = result.cen_code
    orphan = result.orphan_code
    out_role = result.out_role

    def acc(mask: np.ndarray, groups: np.ndarray, w: np.ndarray) -> np.ndarray:
        if not mask.any():
            return np.zeros(n_groups, dtype=np.float64)
        return np.bincount(groups[mask], weights=w[mask], minlength=n_groups)

    pes10 = acc(pes_code == CODE_10, g_pes, w_pes_row)
    presume10 = acc(cen_code == CODE_10, g_cen, w_cen_row)
    f30 = acc(cen_code == CODE_30, g_cen, w_cen_row)

    f42_1 = acc(pes_code == CODE_42_1, g_pes, w_pes_row)
    f42_2_pes = acc(pes_code == CODE_42_2, g_pes, w_pes_row)
    f42_2_cen = acc(cen_code == CODE_42_2, g_cen, w_cen_row)
    f42_4_pes = acc(pes_code == CODE_42_4, g_pes, w_pes_row)
    f42_4_cen = acc(cen_code == CODE_42_4, g_cen, w_cen_row)
    f42_4_orphan = acc(orphan == CODE_42_4, g_cen, w_cen_row)

    f52_1 = acc(cen_code == CODE_52_1, g_cen, w_cen_row)
    f52_2 = acc(cen_code == CODE_52_2, g_cen, w_cen_row)
    f52_4 = acc(cen_code == CODE_52_4, g_cen, w_cen_row)

    # Duplicate and fabricated records live at the census household.
    dup_mask = result.dup_code != CODE_NONE
    fab_groups = g_cen[census.fab_person]
    fab_w = w_cen_row[census.fab_person]

    def acc_fab(mask: np.ndarray) -> np.ndarray:
        if not mask.any():
            return np.zeros(n_groups, dtype=np.float64)
        return np.bincount(fab_groups[mask], weights=fab_w[mask], minlength=n_groups)

    dup10 = acc(result.dup_code == CODE_10, g_cen, w_cen_row)
    fab10 = acc_fab(result.fab_code == CODE_10)
    dup51 = acc(result.dup_code == CODE_51, g_cen, w_cen_row)
    fab51 = acc_fab(result.fab_code == CODE_51)
    dup524 = acc(result.dup_code == CODE_52_4, g_cen, w_cen_row)
    fab524 = acc_fab(result.fab_code == CODE_52_4)

    f10 = pes10 + presume10 + dup10 + fab10
    f42_4 = f42_4_pes + f42_4_cen + f42_4_orphan
    f52_4_all = f52_4 + dup524 + fab524

    # Mover tallies: survey totals by role and their matched parts.
    nm_42 = (
        acc((pes_code == CODE_42_1) | (pes_code == CODE_42_2) | (pes_code == CODE_42_4),
            g_pes, w_pes_row)
        + acc((cen_code == CODE_42_2) & ~out_role, g_cen, w_cen_row)
    )
    n_non = pes10 + presume10 + dup10 + fab10 + nm_42
    m_non = pes10 + presume10 + dup10 + fab10
    out_42 = (
        acc(cen_code == CODE_42_4, g_cen, w_cen_row)
        + acc(orphan == CODE_42_4, g_cen, w_cen_row)
        + acc((cen_code == CODE_42_2) & out_role, g_cen, w_cen_row)
    )
    n_out = f30 + out_42
    m_out = f30
    in_roster = (pes_code == CODE_20) & ~result.birth
    n_in = acc(in_roster, g_pes, w_pes_row)
    m_in = acc(in_roster & result.in_mover_matched, g_pes, w_pes_row)

    # Census-side universe quantities.
    hh_in = result.household_mask
    universe = result.hh_cell != CELL_INSTITUTIONAL
    rec_universe = census.captured & universe[origin]
    c_person = acc(rec_universe, g_cen, np.ones(pop.size))
    c_dup = acc(census.duplicated & universe[origin], g_cen, np.ones(pop.size))
    fab_universe = universe[origin[census.fab_person]]
    c_fab = (
        np.bincount(fab_groups[fab_universe], minlength=n_groups).astype(np.float64)
        if fab_universe.any()
        else np.zeros(n_groups)
    )
    census_count = c_person + c_dup + c_fab
    imputations = acc(census.imputed & universe[origin], g_cen, np.ones(pop.size))

    sampled = rec_universe & ~census.imputed & hh_in[origin]
    e_sample = (
        acc(sampled, g_cen, w_cen_row)
        + acc(census.duplicated & universe[origin] & hh_in[origin], g_cen, w_cen_row)
        + acc_fab(fab_universe & hh_in[origin[census.fab_person]])
    )
    erroneous = acc(cen_code == CODE_51, g_cen, w_cen_row) + dup51 + fab51

    out: dict[str, MatchTallies] = {}
    for g, label in enumerate(labels):
        fcode = FCodeTallies(
            f10=float(f10[g]),
            f30=float(f30[g]),
            f42_1=float(f42_1[g]),
            f42_2=float(f42_2_pes[g] + f42_2_cen[g]),
            f42_4=float(f42_4[g]),
            f52_1=float(f52_1[g]),
            f52_2=float(f52_2[g]),
            f52_4=float(f52_4_all[g]),
            post_stratum=label,
        )
        movers = MoverTallies(
            n_non=float(n_non[g]),
            n_in=float(n_in[g]),
            n_out=float(n_out[g]),
            m_non=float(m_non[g]),
            m_out=float(m_out[g]),
            m_in=float(m_in[g]) if with_in_mover_matching else None,
            post_stratum=label,
        )
        out[label] = MatchTallies(
            group=label,
            fcode=fcode,
            movers=movers,
            census_count=float(census_count[g]),
            imputations=float(imputations[g]),
            e_sample=float(e_sample[g]),
            erroneous=float(erroneous[g]),
        )
    return out
