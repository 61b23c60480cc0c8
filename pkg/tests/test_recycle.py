import json
from math import isclose

import pytest

from softcircuit import InkFormulation, MassLedger
from softcircuit.exceptions import ConservationError, ValidationError
from softcircuit.recycle import (
    ag_dry_weight_fraction,
    batches_from_powder,
    conductivity_retention,
    cured_ag_fraction,
    dry_composition,
    ipa_required,
    separation_ledger,
    wash_ledger,
)


def test_ag_wpu_recipe_dry_fraction():
    formulation = InkFormulation.preset("ag_wpu")
    assert isclose(formulation.pu_solids_g, 0.5)
    assert isclose(formulation.wet_mass_g, 5.87)
    # water evaporates, only Ag and PU solids count
    assert isclose(ag_dry_weight_fraction(formulation), 0.8918, abs_tol=5e-5)
    assert dry_composition(formulation) == {"ag_g": 4.12, "pu_g": 0.5, "egain_g": 0.0}


def test_biphasic_recipe_counts_liquid_metal_as_solid():
    formulation = InkFormulation.preset("ag_egain_wpu")
    assert isclose(ag_dry_weight_fraction(formulation), 4.12 / 10.82)


def test_water_does_not_change_dry_fraction():
    dry = InkFormulation(4.12, 1.25, 0.40, 0.0)
    wet = InkFormulation(4.12, 1.25, 0.40, 3.0)
    assert ag_dry_weight_fraction(dry) == ag_dry_weight_fraction(wet)


def test_cured_sample_fraction():
    assert isclose(cured_ag_fraction(10.701, 1.298), 0.8918, abs_tol=1e-4)
    with pytest.raises(ValidationError):
        cured_ag_fraction(0.0, 0.0)


def test_formulation_validation():
    with pytest.raises(ValidationError):
        InkFormulation(-1.0, 1.25)
    with pytest.raises(ValidationError):
        InkFormulation(4.12, 1.25, wpu_solid_fraction=1.5)
    with pytest.raises(ValidationError) as err:
        InkFormulation.from_dict({"ag_mass_g": 4.12, "wpu_dispersion_mass_g": 1.25, "silver": 1})
    assert "silver" in str(err.value)
    with pytest.raises(ValidationError):
        ag_dry_weight_fraction(InkFormulation(0.0, 0.0))


def test_unknown_recipe():
    with pytest.raises(ValueError) as err:
        InkFormulation.preset("carbon_black")
    assert "Valid inks are" in str(err.value)


def test_separation_ledger():
    ledger = separation_ledger(100.0, 91.18, 1.04)
    assert isclose(ledger.mass("lost"), 7.78, abs_tol=1e-9)
    assert [label for label, _ in ledger.outputs] == ["recovered", "lost", "substrate_bound"]
    assert isclose(sum(ledger.fractions().values()), 100.0, abs_tol=1e-9)
    assert "total" in ledger.table()
    assert "100.00 %" in ledger.table()


def test_separation_ledger_rejects_overrecovery():
    with pytest.raises(ConservationError):
        separation_ledger(10.0, 9.0, 2.0)


def test_wash_ledger():
    ledger = wash_ledger(12.0, 9.62, 0.73)
    assert isclose(ledger.mass("recovered_powder"), 8.89, abs_tol=1e-9)
    assert isclose(ledger.mass("process_loss"), 2.38, abs_tol=1e-9)
    assert isclose(ledger.fractions()["process_loss"], 19.83, abs_tol=0.01)
    assert isclose(ledger.total_output_g, 12.0, abs_tol=1e-9)


def test_wash_ledger_conservation():
    with pytest.raises(ConservationError):
        wash_ledger(12.0, 12.5, 0.73)
    with pytest.raises(ConservationError):
        wash_ledger(12.0, 9.62, 9.7)


def test_mass_ledger_tolerance():
    MassLedger(10.0, (("a", 5.0), ("b", 4.995)))
    with pytest.raises(ConservationError):
        MassLedger(10.0, (("a", 5.0), ("b", 4.0)))
    with pytest.raises(ConservationError):
        MassLedger(10.0, (("a", 11.0), ("b", -1.0)))


def test_mass_ledger_json():
    data = json.loads(separation_ledger(100.0, 91.18, 1.04).to_json())
    assert data["input_mass_g"] == 100.0
    assert data["outputs"][0] == {"label": "recovered", "mass_g": 91.18}
    assert isclose(data["fractions_percent"]["substrate_bound"], 1.04)


def test_conductivity_retention():
    report = conductivity_retention(1.16e5, 1.13e5)
    assert isclose(report.retention_fraction, 0.9741, abs_tol=1e-4)
    assert isclose(report.decay_fraction, 0.0259, abs_tol=1e-4)
    with pytest.raises(ValidationError):
        conductivity_retention(0.0, 1.13e5)


def test_ipa_and_batches():
    formulation = InkFormulation.preset("ag_wpu")
    assert isclose(ipa_required(formulation.wet_mass_g), 117.4)
    assert isclose(ipa_required(2.0, ratio=3.0, washes=2), 12.0)
    assert batches_from_powder(8.89, formulation) == 2
    assert batches_from_powder(8.24, formulation) == 2
    assert batches_from_powder(4.0, formulation) == 0
    with pytest.raises(ValidationError):
        ipa_required(2.0, washes=0)
