import csv

import pytest

from softcircuit.config import ElectromechSettings, RunConfig
from softcircuit.repro import (
    AcceptanceRunner,
    REPORT_FILENAME,
    ReproSize,
    differing_files,
    impulse_train,
    run_repro,
)


def test_sizes():
    full, quick = ReproSize.full(), ReproSize.quick()
    assert full.geometries == 1000
    assert full.random_samples == 100_000
    assert full.failure_seeds == 20
    assert quick.failure_seeds < full.failure_seeds


def test_impulse_train():
    train = impulse_train(630, 3, 1000.0)
    assert train.size == 630 * 4
    assert train.nonzero()[0].tolist() == [315, 945, 1575]


def test_deterministic_checks_pass():
    runner = AcceptanceRunner(RunConfig(), quick=True)
    for number, (name, check) in enumerate(runner.checks(), start=1):
        if name in ("failure_strain_calibration", "gesture_classification"):
            continue
        row = check(number)
        assert row.name == name
        assert row.passed, f"{name}: {row.observed}"


def test_checks_are_reproducible():
    first = AcceptanceRunner(RunConfig(seed=5), quick=True)
    second = AcceptanceRunner(RunConfig(seed=5), quick=True)
    assert first.check_cold_chain(9) == second.check_cold_chain(9)
    assert first.check_filters(10) == second.check_filters(10)


def test_run_repro_writes_report_and_artifacts(tmp_path):
    outcome = run_repro(RunConfig(), tmp_path, quick=True)
    assert len(outcome.rows) == 15
    assert [row.number for row in outcome.rows] == list(range(1, 16))
    assert outcome.artifacts[0] == tmp_path / REPORT_FILENAME
    names = {path.name for path in outcome.artifacts}
    assert names == {
        REPORT_FILENAME,
        "curve_ag_wpu.csv",
        "curve_ag_egain_wpu.csv",
        "failure_strains.csv",
        "gesture_distances.csv",
        "thermistor_curve.json",
    }

    with (tmp_path / REPORT_FILENAME).open(newline="") as file:
        report = list(csv.reader(file))
    assert report[0] == ["number", "name", "observed", "expected", "status"]
    assert len(report) == 16
    assert all(row[4] in ("PASS", "FAIL") for row in report[1:])
    assert {row.name for row in outcome.rows if row.passed} >= {
        "stoichiometry",
        "separation_ledger",
        "wash_ledger",
        "conductivity_retention",
        "conductivity_round_trip",
        "network_solver_oracle",
        "cold_chain_latch",
        "dsp_oracles",
        "ecg_features",
        "gesture_classification",
        "thermistor_round_trip",
        "reproducibility",
    }

    with (tmp_path / "failure_strains.csv").open(newline="") as file:
        failure_rows = list(csv.reader(file))
    assert failure_rows[0] == ["seed", "ag_wpu", "ag_egain_wpu"]
    assert len(failure_rows) == ReproSize.quick().failure_seeds + 1


def test_repeated_runs_write_identical_bytes(tmp_path):
    only = ["stoichiometry", "cold_chain_latch", "gesture_classification", "thermistor_round_trip"]
    first = run_repro(RunConfig(seed=3), tmp_path / "first", quick=True, only=only)
    second = run_repro(RunConfig(seed=3), tmp_path / "second", quick=True, only=only)
    assert [row.number for row in first.rows] == [1, 9, 13, 14]
    assert [path.name for path in first.artifacts] == [path.name for path in second.artifacts]
    assert differing_files(tmp_path / "first", tmp_path / "second") == []


def test_differing_files_reports_changed_and_missing(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    first.mkdir()
    second.mkdir()
    (first / "same.csv").write_bytes(b"1,2\n")
    (second / "same.csv").write_bytes(b"1,2\n")
    (first / "changed.csv").write_bytes(b"1,2\n")
    (second / "changed.csv").write_bytes(b"1,2\r\n")
    (first / "only_first.json").write_text("{}")
    assert differing_files(first, second) == ["changed.csv", "only_first.json"]


def test_failure_studies_use_the_configured_preset():
    settings = ElectromechSettings(ink="ag_wpu", strain_step=0.05, seeds=(7, 8))
    runner = AcceptanceRunner(RunConfig(electromech=settings), quick=True)
    plain, biphasic = runner._failure_studies()
    assert plain.seeds == [7, 8]
    assert len(runner.artifacts["curve_ag_wpu.csv"][1]) == 13
    assert len(biphasic.seeds) == ReproSize.quick().failure_seeds
    assert len(runner.artifacts["curve_ag_egain_wpu.csv"][1]) == 401


@pytest.mark.slow
def test_full_size_percolation_anchors():
    row = AcceptanceRunner(RunConfig()).check_percolation_anchors(7)
    assert row.passed, row.observed


@pytest.mark.slow
def test_full_size_failure_strain_calibration():
    row = AcceptanceRunner(RunConfig()).check_failure_strains(8)
    assert row.passed, row.observed
