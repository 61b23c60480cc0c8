import dataclasses
from math import isclose

import pytest

from softcircuit import MaterialReference, TraceGeometry
from softcircuit.electromech import (
    conductivity_constant_volume,
    measure_conductivity,
    occupancy_from_ag_weight,
    resistance_of_trace,
    stretch,
    volume,
)
from softcircuit.exceptions import ValidationError

REFERENCE_TRACE = TraceGeometry(0.08, 0.005, 0.000102)


def test_reference_trace_volume():
    assert isclose(volume(REFERENCE_TRACE), 4.08e-8, rel_tol=1e-12)
    assert REFERENCE_TRACE.volume() == volume(REFERENCE_TRACE)


def test_reference_trace_resistance():
    assert isclose(resistance_of_trace(REFERENCE_TRACE, 1.16e5), 1.352, abs_tol=0.001)


def test_constant_volume_conductivity():
    sigma = conductivity_constant_volume(0.08, 1.3523, 4.08e-8)
    assert isclose(sigma, 1.16e5, abs_tol=0.01e5)


def test_conductivity_round_trip():
    geom = TraceGeometry(0.013, 0.0021, 3.3e-5)
    for sigma in (1e2, 4.5e4, 1.16e5, 6.3e7):
        resistance = resistance_of_trace(geom, sigma)
        assert isclose(measure_conductivity(geom, resistance).sigma_s_per_m, sigma, rel_tol=1e-12)
        assert isclose(
            conductivity_constant_volume(geom.length_m, resistance, volume(geom)),
            sigma,
            rel_tol=1e-12,
        )


def test_stretch():
    state = stretch(REFERENCE_TRACE, 0.5)
    assert isclose(state.stretched_length_m, 0.12)
    assert stretch(REFERENCE_TRACE, 0.0).stretched_length_m == REFERENCE_TRACE.length_m
    with pytest.raises(ValidationError):
        stretch(REFERENCE_TRACE, -0.1)


def test_invalid_inputs():
    with pytest.raises(ValidationError):
        TraceGeometry(0.08, 0.0, 0.000102)
    with pytest.raises(ValidationError):
        TraceGeometry(float("nan"), 0.005, 0.000102)
    with pytest.raises(ValidationError):
        conductivity_constant_volume(0.08, 0.0, 4.08e-8)
    with pytest.raises(ValidationError):
        resistance_of_trace(REFERENCE_TRACE, -1.0)


def test_occupancy_map():
    assert isclose(occupancy_from_ag_weight(0.8918), 0.7672, abs_tol=1e-9)
    assert isclose(occupancy_from_ag_weight(0.75), 0.2, abs_tol=1e-9)
    assert occupancy_from_ag_weight(0.5) == 0.0
    assert occupancy_from_ag_weight(1.0) == 1.0
    assert occupancy_from_ag_weight(0.75) < 0.5 < occupancy_from_ag_weight(0.8918)
    with pytest.raises(ValidationError):
        occupancy_from_ag_weight(1.2)


def test_material_reference():
    reference = MaterialReference.load()
    assert reference.sigma_day0 == 116000.0
    assert reference.sigma_recycled == 113000.0
    assert reference.sigma_day30_vial > reference.sigma_day30_print > reference.sigma_day0
    assert reference.agwpu_failure_strain_range == (0.283, 0.335)
    assert reference.reference_trace == REFERENCE_TRACE
    assert all(reference.notes.values())
    with pytest.raises(dataclasses.FrozenInstanceError):
        reference.sigma_day0 = 1.0
