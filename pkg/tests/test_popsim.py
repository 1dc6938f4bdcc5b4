"""Synthetic worlds: generation invariants and both capture passes."""

import csv

import numpy as np
import pytest

from covlab.errors import ConfigError
from covlab.popsim import (
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
    CaptureProbabilities,
    PopulationConfig,
    ground_truth_ledger,
    group_labels,
    person_groups,
    simulate_census,
    simulate_pes,
    synthesize_population,
    write_population,
)


def _world(seed=11, **overrides):
    defaults = dict(
        persons=4000,
        mover_rate=0.05,
        birth_rate=0.02,
        death_rate=0.02,
        institutional_rate=0.02,
    )
    defaults.update(overrides)
    config = PopulationConfig(**defaults)
    return config, synthesize_population(config, seed=seed)


def test_synthesis_is_deterministic():
    config, pop = _world()
    again = synthesize_population(config, seed=11)
    assert np.array_equal(pop.census_household, again.census_household)
    assert np.array_equal(pop.pes_household, again.pes_household)
    assert np.array_equal(pop.propensity, again.propensity)
    other = synthesize_population(config, seed=12)
    assert not np.array_equal(pop.propensity, other.propensity)


def test_population_scopes_and_sizes():
    config, pop = _world()
    assert pop.size >= config.persons
    born = pop.scope == SCOPE_BORN
    died = pop.scope == SCOPE_DIED
    assert born.sum() == pop.size - config.persons
    assert np.all(pop.census_household[born] == -1)
    assert np.all(pop.census_household[~born] >= 0)
    assert np.all(pop.pes_household[died] == -1)
    assert np.all(pop.pes_household[~died] >= 0)


def test_no_births_or_deaths_when_rates_zero():
    config, pop = _world(birth_rate=0.0, death_rate=0.0)
    assert pop.size == config.persons
    assert np.all(pop.scope == SCOPE_IN)


def test_movers_change_household_within_scope():
    _, pop = _world(mover_rate=0.2)
    mover = pop.is_mover()
    assert mover.sum() > 0
    assert np.all(pop.scope[mover] == SCOPE_IN)
    assert np.all(pop.census_household[mover] != pop.pes_household[mover])
    stayers = (pop.scope == SCOPE_IN) & ~mover
    assert np.all(pop.census_household[stayers] == pop.pes_household[stayers])
    # Destinations are ordinary households.
    assert not pop.households.institutional[pop.pes_household[mover]].any()


def test_in_target_excludes_born_and_institutional():
    _, pop = _world(institutional_rate=0.1)
    target = pop.in_target()
    assert not target[pop.scope == SCOPE_BORN].any()
    home = np.where(pop.census_household >= 0, pop.census_household, 0)
    institutional = pop.households.institutional[home] & (pop.scope != SCOPE_BORN)
    assert not target[institutional].any()
    assert target[pop.scope == SCOPE_DIED].sum() > 0  # deaths stay in scope


def test_home_district_covers_everyone():
    _, pop = _world()
    district = pop.home_district()
    assert district.shape == (pop.size,)
    assert district.min() >= 0
    assert district.max() < pop.districts.count


def test_post_strata_shapes():
    config, pop = _world(age_groups=4)
    assert pop.n_post_strata == 8
    assert len(pop.stratum_labels) == 8
    assert pop.post_stratum.min() >= 0
    assert pop.post_stratum.max() < 8
    assert config.n_post_strata == 8


def test_config_validation():
    with pytest.raises(ConfigError):
        PopulationConfig(persons=0)
    with pytest.raises(ConfigError):
        PopulationConfig(urban_share=1.5)
    with pytest.raises(ConfigError):
        PopulationConfig(mover_rate=1.0)
    with pytest.raises(ConfigError):
        PopulationConfig(age_groups=0)


def test_capture_probabilities_validation():
    with pytest.raises(ConfigError):
        CaptureProbabilities.uniform(4, census=1.0, pes=0.9)
    with pytest.raises(ConfigError):
        CaptureProbabilities.uniform(4, census=0.9, pes=0.9, heterogeneity=-1.0)
    with pytest.raises(ConfigError):
        CaptureProbabilities(
            census=np.full(3, 0.9),
            pes=np.full(4, 0.9),
            dependence=np.zeros(4),
            heterogeneity=np.zeros(4),
        )
    probs = CaptureProbabilities.uniform(4, census=0.9, pes=0.8)
    assert probs.census.shape == (4,)
    assert float(probs.dependence.max()) == 0.0


def test_census_capture_invariants():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.9, pes=0.9)
    census = simulate_census(pop, probs, ee_rate=0.03, ii_rate=0.02, seed=3)
    born = pop.scope == SCOPE_BORN
    assert not census.captured[born].any()
    assert not census.imputed[~census.captured].any()
    assert not census.duplicated[~census.captured].any()
    assert not census.captured[census.fab_person].any()
    assert not born[census.fab_person].any()
    expected = int(census.captured.sum() + census.duplicated.sum()) + len(census.fab_person)
    assert census.record_count() == expected


def test_census_is_deterministic_and_clean_without_error_rates():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.9, pes=0.9)
    census = simulate_census(pop, probs, seed=3)
    again = simulate_census(pop, probs, seed=3)
    assert np.array_equal(census.captured, again.captured)
    assert not census.imputed.any()
    assert not census.duplicated.any()
    assert len(census.fab_person) == 0


def test_census_household_status():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.9, pes=0.9)
    census = simulate_census(pop, probs, seed=3, listed_nonresponse_rate=0.1)
    home = np.where(pop.census_household >= 0, pop.census_household, 0)
    eligible = pop.scope != SCOPE_BORN
    with_records = np.zeros(pop.households.count, dtype=bool)
    with_records[home[census.captured]] = True
    assert np.all(census.hh_status[with_records] == CEN_WITH_Q)
    # Nonresponding households yield no person records.
    noq = census.hh_status == CEN_WITHOUT_Q
    assert noq.sum() > 0
    assert not (with_records & noq).any()
    occupied = np.zeros(pop.households.count, dtype=bool)
    occupied[home[eligible]] = True
    assert np.all(census.hh_status[~occupied & ~with_records] == CEN_NOT_LISTED)


def test_census_rejects_bad_rates_and_shapes():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.9, pes=0.9)
    with pytest.raises(ConfigError):
        simulate_census(pop, probs, ee_rate=1.0)
    wrong = CaptureProbabilities.uniform(pop.n_post_strata + 2, census=0.9, pes=0.9)
    with pytest.raises(ConfigError):
        simulate_census(pop, wrong)


def test_pes_household_status_partition():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.9, pes=0.9)
    census = simulate_census(pop, probs, seed=3)
    pes = simulate_pes(pop, census, probs, seed=4, absent_rate=0.05, unlisted_rate=0.05)
    here = pop.pes_household[pop.pes_household >= 0]
    occupied = np.zeros(pop.households.count, dtype=bool)
    occupied[here] = True
    occupied_statuses = set(np.unique(pes.hh_status[occupied]).tolist())
    assert occupied_statuses <= {PES_WITH_Q, PES_ABSENT, PES_NOT_LISTED}
    vacant_statuses = set(np.unique(pes.hh_status[~occupied]).tolist())
    assert vacant_statuses <= {PES_VACANT, PES_VACANT_MISSED}


def test_pes_clean_settings_interview_everything():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.9, pes=0.9)
    census = simulate_census(pop, probs, seed=3)
    pes = simulate_pes(pop, census, probs, seed=4)
    assert pes.proxy_ok.all()
    here = pop.pes_household[pop.pes_household >= 0]
    occupied = np.zeros(pop.households.count, dtype=bool)
    occupied[here] = True
    assert np.all(pes.hh_status[occupied] == PES_WITH_Q)
    assert np.all(pes.hh_status[~occupied] == PES_VACANT)


def test_pes_rejects_conflicting_household_rates():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.9, pes=0.9)
    census = simulate_census(pop, probs, seed=3)
    with pytest.raises(ConfigError):
        simulate_pes(pop, census, probs, absent_rate=0.6, unlisted_rate=0.5)


def test_dependence_lowers_survey_capture_of_census_misses():
    config = PopulationConfig(persons=30_000)
    pop = synthesize_population(config, seed=21)
    probs = CaptureProbabilities.uniform(
        pop.n_post_strata, census=0.6, pes=0.6, dependence=1.5
    )
    census = simulate_census(pop, probs, seed=1)
    pes = simulate_pes(pop, census, probs, seed=2)
    rate_hit = pes.listed[census.captured].mean()
    rate_missed = pes.listed[~census.captured].mean()
    assert rate_missed < rate_hit - 0.1


def test_heterogeneity_correlates_the_two_passes():
    config = PopulationConfig(persons=30_000)
    pop = synthesize_population(config, seed=22)
    plain = CaptureProbabilities.uniform(pop.n_post_strata, census=0.6, pes=0.6)
    spread = CaptureProbabilities.uniform(
        pop.n_post_strata, census=0.6, pes=0.6, heterogeneity=1.5
    )
    census_plain = simulate_census(pop, plain, seed=1)
    pes_plain = simulate_pes(pop, census_plain, plain, seed=2)
    census_spread = simulate_census(pop, spread, seed=1)
    pes_spread = simulate_pes(pop, census_spread, spread, seed=2)

    def capture_correlation(census, pes):
        a = census.captured.astype(float)
        b = pes.listed.astype(float)
        return float(np.corrcoef(a, b)[0, 1])

    assert abs(capture_correlation(census_plain, pes_plain)) < 0.05
    assert capture_correlation(census_spread, pes_spread) > 0.15


def test_ground_truth_ledger_clean_world():
    _, pop = _world(institutional_rate=0.05)
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.85, pes=0.85)
    census = simulate_census(pop, probs, seed=5)
    ledger = ground_truth_ledger(pop, census)["all"]
    target = pop.in_target()
    assert ledger.true_total == target.sum()
    assert ledger.census_count == (target & census.captured).sum()
    assert ledger.overcount == 0.0
    assert ledger.undercount == ledger.true_total - ledger.census_count
    assert ledger.net_undercount == ledger.undercount
    assert ledger.gross_error == ledger.undercount


def test_ground_truth_ledger_counts_erroneous_records():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.85, pes=0.85)
    census = simulate_census(pop, probs, ee_rate=0.05, seed=5)
    ledger = ground_truth_ledger(pop, census)["all"]
    target = pop.in_target()
    dup = (target & census.duplicated).sum()
    fab = target[census.fab_person].sum()
    assert ledger.overcount == dup + fab
    assert ledger.census_count == (target & census.captured).sum() + dup + fab


def test_ground_truth_ledger_groups_sum_to_national():
    _, pop = _world()
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.85, pes=0.85)
    census = simulate_census(pop, probs, ee_rate=0.02, seed=5)
    national = ground_truth_ledger(pop, census)["all"]
    for level in ("post_stratum", "province_stratum"):
        parts = ground_truth_ledger(pop, census, level=level)
        assert len(parts) == len(group_labels(pop, level))
        assert sum(p.true_total for p in parts.values()) == national.true_total
        assert sum(p.census_count for p in parts.values()) == national.census_count


def test_group_labels_and_person_groups_agree():
    _, pop = _world()
    for level in ("national", "post_stratum", "province_stratum"):
        labels = group_labels(pop, level)
        groups = person_groups(pop, level)
        assert groups.min() >= 0
        assert groups.max() < len(labels)
    with pytest.raises(ConfigError):
        group_labels(pop, "county")
    with pytest.raises(ConfigError):
        person_groups(pop, "county")


def test_write_population_snapshot(tmp_path):
    _, pop = _world(persons=300)
    probs = CaptureProbabilities.uniform(pop.n_post_strata, census=0.9, pes=0.9)
    census = simulate_census(pop, probs, seed=6)
    pes = simulate_pes(pop, census, probs, seed=7)
    path = tmp_path / "world.csv"
    write_population(str(path), pop, census, pes)
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == pop.size
    assert rows[0].keys() >= {"person_id", "scope", "captured_census", "listed_pes"}
    listed = sum(int(r["listed_pes"]) for r in rows)
    assert listed == int(pes.listed.sum())
