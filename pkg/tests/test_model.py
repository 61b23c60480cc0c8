from math import isclose

import pytest

from softcircuit import AgEGaInWpuInk, AgWpuInk, InkModel
from softcircuit.model import calibrate_break_strain_median


def _small(model: InkModel, size: int = 12) -> InkModel:
    model.rows = size
    model.cols = size
    return model


def test_invalid_ink():
    with pytest.raises(ValueError) as err:
        InkModel("copper_paste")
    assert "Valid inks are ['ag_egain_wpu', 'ag_wpu']" in str(err.value)


def test_ag_wpu_preset():
    model = AgWpuInk()
    assert model.ink == "ag_wpu"
    assert isclose(model.occupancy, 0.7672, abs_tol=1e-9)
    assert (model.rows, model.cols) == (32, 32)
    assert model.damage_params.lm_bridge_fraction == 0.0
    assert model.strain_grid[0] == 0.0
    assert model.strain_grid[-1] == 0.6
    assert len(model.strain_grid) == 121
    assert model.failure_threshold == 100.0
    assert model.seeds == list(range(1, 21))
    assert model.geometry.length_m == 0.08


def test_biphasic_preset():
    model = AgEGaInWpuInk()
    assert model.ink == "ag_egain_wpu"
    assert model.damage_params.lm_bridge_fraction == 0.85
    assert model.strain_grid[-1] == 4.0
    assert len(model.strain_grid) == 401
    # occupancy counts the Ag flake network only, so both inks share it
    assert model.occupancy == AgWpuInk().occupancy
    # the biphasic grid is a subset of the Ag-WPU grid
    assert set(model.strain_grid[:61]) <= set(AgWpuInk().strain_grid)


def test_build_is_reproducible():
    model = _small(AgWpuInk())
    assert model.build(7) == model.build(7)


def test_sweep_starts_at_unit_resistance():
    model = AgWpuInk()
    curve = model.sweep(1)
    assert curve.points[0].strain == 0.0
    assert curve.points[0].normalized_resistance == 1.0
    assert curve.strains() == model.strain_grid


def test_failure_strain_study_shape():
    model = _small(AgWpuInk(), 8)
    study = model.failure_strain_study([1, 2, 3, 4, 5])
    assert study.ink == "ag_wpu"
    assert study.seeds == [1, 2, 3, 4, 5]
    assert len(study.failure_strains) == 5
    assert len(study.onset_strains) == 5
    assert study.unfailed_seeds == study.failure_strains.count(None)
    for failure, onset in zip(study.failure_strains, study.onset_strains):
        if failure is not None and onset is not None:
            assert onset <= failure


def test_failure_strain_study_records_non_conducting_seed():
    model = _small(AgWpuInk(), 8)
    model.occupancy = 0.0
    study = model.failure_strain_study([1, 2])
    assert study.failure_strains == [0.0, 0.0]
    assert study.median_failure_strain == 0.0
    assert study.unfailed_seeds == 0


def test_biphasic_never_fails_before_ag_wpu():
    seeds = [1, 2, 3]
    plain = _small(AgWpuInk()).failure_strain_study(seeds)
    biphasic = _small(AgEGaInWpuInk()).failure_strain_study(seeds)
    plain_grid_end = AgWpuInk().strain_grid[-1]
    for a, b in zip(plain.failure_strains, biphasic.failure_strains):
        if b is None:
            continue
        if a is None:
            assert b > plain_grid_end
        else:
            assert b >= a


def test_calibration_is_monotone():
    rows = calibrate_break_strain_median("ag_wpu", [0.1, 0.2, 0.3], seeds=[1, 2, 3], rows=8, cols=8)
    assert [row.break_strain_median for row in rows] == [0.1, 0.2, 0.3]
    medians = [row.median_failure_strain for row in rows]
    assert all(median is not None for median in medians)
    assert medians[0] <= medians[1] <= medians[2]


def test_preset_overrides():
    model = InkModel("ag_wpu", preset_overrides={"rows": 10, "ag_wt_fraction": 0.95, "seeds": [4]})
    assert (model.rows, model.cols) == (10, 32)
    assert isclose(model.occupancy, 1.0)
    assert model.seeds == [4]
    assert InkModel("ag_wpu", preset_overrides={"occupancy": 0.5}).occupancy == 0.5
    with pytest.raises(ValueError):
        InkModel("ag_wpu", preset_overrides={"occupancy": 1.5})
