from math import isclose

import numpy as np
import pytest

from softcircuit import DamageModelParams, PercolationNetwork, TraceGeometry
from softcircuit.exceptions import ValidationError
from softcircuit.network import (
    DISCONNECTED,
    build_network,
    conductivity_curve,
    connected_fraction,
    is_connected,
    lattice_bonds,
    onset_strain,
    solve_conductance,
    strain_sweep,
    terminal_map,
)
from softcircuit.repro import dense_conductance
from softcircuit.utilities import uniform_grid

GEOMETRY = TraceGeometry(0.08, 0.005, 0.000102)


def test_lattice_bonds():
    node_a, node_b = lattice_bonds(2, 3)
    pairs = list(zip(node_a.tolist(), node_b.tolist()))
    assert pairs == [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)]
    node_a, _ = lattice_bonds(32, 32)
    assert node_a.size == 2 * 32 * 31
    with pytest.raises(ValidationError):
        lattice_bonds(1, 3)


def test_terminal_map():
    assert terminal_map(2, 3).tolist() == [0, 2, 1, 0, 3, 1]
    assert terminal_map(2, 2).tolist() == [0, 1, 0, 1]


def test_series_and_parallel():
    series = PercolationNetwork.from_bonds(2, 3, [(0, 1), (1, 2)])
    parallel = PercolationNetwork.from_bonds(2, 3, [(0, 1), (1, 2), (3, 4), (4, 5)])
    assert isclose(solve_conductance(series).relative_conductance, 0.5, abs_tol=1e-12)
    assert isclose(solve_conductance(parallel).relative_conductance, 1.0, abs_tol=1e-12)


def test_unit_bond_conductance_scales_siemens():
    series = PercolationNetwork.from_bonds(2, 3, [(0, 1), (1, 2)], unit_bond_conductance=2.0)
    solution = solve_conductance(series)
    assert isclose(solution.conductance_s, 1.0, abs_tol=1e-12)
    assert solution.state == solution.conductance_s


def test_direct_bonds_between_bus_bars():
    single = PercolationNetwork.from_bonds(2, 2, [(0, 1)])
    double = PercolationNetwork.from_bonds(2, 2, [(0, 1), (2, 3)])
    assert solve_conductance(single).relative_conductance == 1.0
    assert solve_conductance(double).relative_conductance == 2.0


def test_disconnected_network():
    dangling = PercolationNetwork.from_bonds(2, 3, [(0, 1)])
    solution = solve_conductance(dangling)
    assert solution.disconnected
    assert solution.relative_conductance == 0.0
    assert solution.state == DISCONNECTED
    assert not is_connected(dangling)
    # a bond inside the source bus bar is shorted out
    assert not is_connected(PercolationNetwork.from_bonds(2, 2, [(0, 2)]))


def test_from_bonds_rejects_non_lattice_bond():
    with pytest.raises(ValidationError):
        PercolationNetwork.from_bonds(2, 3, [(0, 4)])


def test_solver_matches_dense_nodal_analysis():
    for seed in range(10):
        net = build_network(4, 5, 0.7, DamageModelParams(), seed)
        assert isclose(
            solve_conductance(net).relative_conductance,
            dense_conductance(net),
            rel_tol=1e-9,
            abs_tol=1e-12,
        )


def test_build_network_is_deterministic():
    params = DamageModelParams()
    first = build_network(8, 8, 0.77, params, 42)
    assert first == build_network(8, 8, 0.77, params, 42)
    assert first != build_network(8, 8, 0.77, params, 43)
    assert first.to_bytes() == build_network(8, 8, 0.77, params, 42).to_bytes()


def test_bridging_does_not_change_shared_draws():
    plain = build_network(16, 16, 0.77, DamageModelParams(lm_bridge_fraction=0.0), 5)
    bridged = build_network(16, 16, 0.77, DamageModelParams(lm_bridge_fraction=0.85), 5)
    assert np.array_equal(plain.occupied, bridged.occupied)
    assert np.array_equal(plain.break_strain, bridged.break_strain)
    assert not plain.lm_bridged.any()
    assert bridged.lm_bridged.any()
    assert np.all(bridged.lm_break_strain >= bridged.break_strain)
    assert np.all(bridged.failure_strains() >= plain.failure_strains())


def test_build_network_validation():
    with pytest.raises(ValidationError):
        build_network(8, 8, 1.5, DamageModelParams(), 1)
    with pytest.raises(ValidationError):
        build_network(8, 8, 0.5, DamageModelParams(), -1)
    with pytest.raises(ValidationError):
        DamageModelParams(lm_bridge_fraction=2.0)


def test_strain_sweep_uniform_bonds():
    net = PercolationNetwork.from_bonds(2, 3, [(0, 1), (1, 2)], break_strain=1.0)
    curve = strain_sweep(net, GEOMETRY, [0.0, 0.5, 1.0, 1.5])
    assert curve.points[0].normalized_resistance == 1.0
    # only the constant-volume factor (1 + strain)**2 until the bonds break
    assert isclose(curve.points[1].normalized_resistance, 2.25)
    assert curve.points[2].disconnected
    assert curve.failure_strain == 1.0
    assert onset_strain(curve) == 0.5
    assert curve.to_rows()[2] == (1.0, DISCONNECTED)
    assert curve.strains() == [0.0, 0.5, 1.0, 1.5]


def test_strain_sweep_threshold_failure():
    net = PercolationNetwork.from_bonds(2, 2, [(0, 1)])
    curve = strain_sweep(net, GEOMETRY, [0.0, 1.0, 2.0], failure_threshold=5.0)
    assert [point.normalized_resistance for point in curve.points] == [1.0, 4.0, 9.0]
    assert curve.failure_strain == 2.0


def test_strain_sweep_never_failing():
    net = PercolationNetwork.from_bonds(2, 2, [(0, 1)])
    curve = strain_sweep(net, GEOMETRY, [0.0, 0.1])
    assert curve.failure_strain is None
    assert onset_strain(curve) is None


def test_strain_sweep_validation():
    net = PercolationNetwork.from_bonds(2, 2, [(0, 1)])
    with pytest.raises(ValidationError):
        strain_sweep(net, GEOMETRY, [0.1, 0.2])
    with pytest.raises(ValidationError):
        strain_sweep(net, GEOMETRY, [0.0, 0.2, 0.2])
    with pytest.raises(ValidationError):
        strain_sweep(PercolationNetwork.from_bonds(2, 3, [(0, 1)]), GEOMETRY, [0.0, 0.1])


def test_strain_sweep_workers_give_identical_curves():
    net = build_network(16, 16, 1.0, DamageModelParams(), 11)
    grid = uniform_grid(0.6, 0.01)
    sequential = strain_sweep(net, GEOMETRY, grid)
    threaded = strain_sweep(net, GEOMETRY, grid, workers=3)
    assert sequential.to_rows() == threaded.to_rows()
    assert sequential.failure_strain == threaded.failure_strain


def test_resistance_never_decreases_with_damage():
    net = build_network(16, 16, 1.0, DamageModelParams(), 3)
    curve = strain_sweep(net, GEOMETRY, uniform_grid(0.6, 0.01))
    values = [p.normalized_resistance for p in curve.points if not p.disconnected]
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))


def test_conductivity_curve_constant_volume():
    net = PercolationNetwork.from_bonds(2, 3, [(0, 1), (1, 2)], break_strain=1.0)
    curve = strain_sweep(net, GEOMETRY, [0.0, 0.5, 1.0])
    sigmas = conductivity_curve(curve, GEOMETRY, 1.16e5)
    assert isclose(sigmas[0][1], 1.16e5, rel_tol=1e-12)
    # purely geometric thinning leaves the constant-volume estimate unchanged
    assert isclose(sigmas[1][1], 1.16e5, rel_tol=1e-12)
    assert sigmas[2] == (1.0, None)


def test_connected_fraction():
    assert connected_fraction(8, 8, 1.0, [1, 2, 3]) == 1.0
    assert connected_fraction(8, 8, 0.0, [1, 2, 3]) == 0.0
    with pytest.raises(ValidationError):
        connected_fraction(8, 8, 0.5, [])
