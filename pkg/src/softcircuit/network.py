"""
Percolation resistor network model of a stretched printed trace.

The trace is a rows x cols square lattice of nodes joined by nearest-neighbour bonds.
The left node column is merged into the source terminal and the right column into the
sink terminal (bus bars). Each bond is occupied independently with the occupancy
probability and carries a lognormal break strain; a fraction of occupied bonds is
bridged by liquid metal and survives up to a larger break strain.

Conductance is dimensionless relative to unit_bond_conductance; absolute resistance
only enters through the unstrained trace resistance R0.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .electromech import TraceGeometry, conductivity_constant_volume, resistance_of_trace, volume
from .exceptions import ValidationError
from .utilities import require_fraction, require_positive

logger = logging.getLogger(__name__)

SOURCE = 0
SINK = 1
DISCONNECTED = "disconnected"


@dataclass(frozen=True)
class DamageModelParams:
    """
    Per-bond break strain law.

    Attributes:
        break_strain_median (float): Median break strain of a plain bond.
        break_strain_shape (float): Lognormal sigma parameter of plain break strains.
        lm_bridge_fraction (float): Fraction q of occupied bonds bridged by liquid metal.
        lm_break_strain_median (float): Median break strain of a bridged bond.
        lm_break_strain_shape (float): Lognormal sigma parameter of bridged break strains.
    """

    break_strain_median: float = 0.34
    break_strain_shape: float = 0.35
    lm_bridge_fraction: float = 0.0
    lm_break_strain_median: float = 3.5
    lm_break_strain_shape: float = 0.35

    def __post_init__(self):
        require_positive("break_strain_median", self.break_strain_median)
        require_positive("break_strain_shape", self.break_strain_shape)
        require_fraction("lm_bridge_fraction", self.lm_bridge_fraction)
        require_positive("lm_break_strain_median", self.lm_break_strain_median)
        require_positive("lm_break_strain_shape", self.lm_break_strain_shape)


@dataclass(frozen=True, eq=False)
class PercolationNetwork:
    """
    A realized bond lattice. Bond arrays are index aligned: bond k joins node_a[k] and
    node_b[k], where node id = row * cols + col.

    Unoccupied bonds still carry drawn break strains so that the random stream does not
    depend on occupancy; they never conduct.
    """

    rows: int
    cols: int
    bond_occupancy_p: float
    unit_bond_conductance: float
    seed: int
    node_a: np.ndarray = field(repr=False)
    node_b: np.ndarray = field(repr=False)
    occupied: np.ndarray = field(repr=False)
    break_strain: np.ndarray = field(repr=False)
    lm_bridged: np.ndarray = field(repr=False)
    lm_break_strain: np.ndarray = field(repr=False)

    @property
    def bond_count(self) -> int:
        return int(self.node_a.size)

    @property
    def merged_node_count(self) -> int:
        return 2 + self.rows * (self.cols - 2)

    def failure_strains(self) -> np.ndarray:
        """
        Strain at which each bond stops conducting; -1 for unoccupied bonds.
        """
        strains = np.where(self.lm_bridged, self.lm_break_strain, self.break_strain)
        return np.where(self.occupied, strains, -1.0)

    def alive(self, strain: float) -> np.ndarray:
        """
        Boolean mask of bonds still conducting at the given strain. A bond breaks once
        the strain reaches its break strain.
        """
        return self.occupied & (self.failure_strains() > strain)

    def to_bytes(self) -> bytes:
        arrays = (
            self.node_a,
            self.node_b,
            self.occupied,
            self.break_strain,
            self.lm_bridged,
            self.lm_break_strain,
        )
        return b"".join(np.ascontiguousarray(array).tobytes() for array in arrays)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PercolationNetwork):
            return NotImplemented
        return (
            (self.rows, self.cols, self.bond_occupancy_p, self.unit_bond_conductance, self.seed)
            == (other.rows, other.cols, other.bond_occupancy_p, other.unit_bond_conductance, other.seed)
            and self.to_bytes() == other.to_bytes()
        )

    __hash__ = None

    @classmethod
    def from_bonds(
        cls,
        rows: int,
        cols: int,
        bonds: Sequence[Tuple[int, int]],
        unit_bond_conductance: float = 1.0,
        break_strain: float = 1.0e6,
    ) -> "PercolationNetwork":
        """
        Build a network on a rows x cols lattice where only the listed bonds are occupied.
        Used to set up hand-checkable circuits.

        Args:
            rows (int): Node rows.
            cols (int): Node columns.
            bonds (Sequence[Tuple[int, int]]): Occupied bonds as (node_a, node_b) pairs; each
                                               must be a lattice bond.
            unit_bond_conductance (float): Conductance of one bond in siemens.
            break_strain (float): Break strain assigned to every bond.
        """
        node_a, node_b = lattice_bonds(rows, cols)
        lookup = {
            frozenset((int(a), int(b))): index for index, (a, b) in enumerate(zip(node_a, node_b))
        }
        occupied = np.zeros(node_a.size, dtype=bool)
        for a, b in bonds:
            key = frozenset((a, b))
            if key not in lookup:
                raise ValidationError(f"({a}, {b}) is not a bond of a {rows}x{cols} lattice")
            occupied[lookup[key]] = True
        strains = np.full(node_a.size, float(break_strain))
        return cls(
            rows=rows,
            cols=cols,
            bond_occupancy_p=float(occupied.mean()),
            unit_bond_conductance=require_positive(
                "unit_bond_conductance", unit_bond_conductance
            ),
            seed=0,
            node_a=node_a,
            node_b=node_b,
            occupied=occupied,
            break_strain=strains,
            lm_bridged=np.zeros(node_a.size, dtype=bool),
            lm_break_strain=strains.copy(),
        )


@dataclass(frozen=True)
class NetworkSolution:
    """
    Result of a nodal analysis.

    Attributes:
        relative_conductance (float): Source-sink conductance in units of one bond, 0 when
                                      disconnected.
        conductance_s (float): Source-sink conductance in siemens, 0 when disconnected.
        disconnected (bool): True when no conducting path joins the terminals.
        alive_bonds (int): Number of bonds conducting when the solution was computed.
    """

    relative_conductance: float
    conductance_s: float
    disconnected: bool
    alive_bonds: int

    @property
    def state(self) -> Union[float, str]:
        return DISCONNECTED if self.disconnected else self.conductance_s


@dataclass(frozen=True)
class CurvePoint:
    strain: float
    # None once the network is disconnected
    normalized_resistance: Union[float, None]

    @property
    def disconnected(self) -> bool:
        return self.normalized_resistance is None


@dataclass(frozen=True)
class ResistanceCurve:
    """
    Normalized resistance R/R0 along a strain grid.

    Attributes:
        points (Tuple[CurvePoint, ...]): Strictly increasing strains; R/R0 = 1 at strain 0.
        failure_strain (float): Smallest grid strain with R/R0 >= failure_threshold or a
                                disconnected network; None if the trace never fails.
        failure_threshold (float): R/R0 value defining electrical failure.
    """

    points: Tuple[CurvePoint, ...]
    failure_strain: Union[float, None]
    failure_threshold: float = 100.0

    def strains(self) -> List[float]:
        return [point.strain for point in self.points]

    def to_rows(self) -> List[Tuple[float, Union[float, str]]]:
        """
        Rows for the `strain,normalized_resistance` CSV; disconnected points are written
        as the word "disconnected".
        """
        return [
            (
                point.strain,
                DISCONNECTED if point.disconnected else point.normalized_resistance,
            )
            for point in self.points
        ]


def lattice_bonds(rows: int, cols: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Enumerate the bonds of a rows x cols square lattice: horizontal bonds row by row,
    then vertical bonds row by row. The order is part of the determinism contract.

    Raises:
        ValidationError: If the lattice is smaller than 2 x 2.
    """
    if rows < 2 or cols < 2:
        raise ValidationError(f"lattice must be at least 2x2, got {rows}x{cols}")
    ids = np.arange(rows * cols).reshape(rows, cols)
    horizontal_a = ids[:, :-1].ravel()
    horizontal_b = ids[:, 1:].ravel()
    vertical_a = ids[:-1, :].ravel()
    vertical_b = ids[1:, :].ravel()
    return (
        np.concatenate([horizontal_a, vertical_a]),
        np.concatenate([horizontal_b, vertical_b]),
    )


def terminal_map(rows: int, cols: int) -> np.ndarray:
    """
    Map lattice node ids to merged node ids: the left column becomes SOURCE (0), the
    right column SINK (1), interior nodes are numbered from 2 in row-major order.
    """
    mapping = np.empty((rows, cols), dtype=np.int64)
    mapping[:, 0] = SOURCE
    mapping[:, -1] = SINK
    if cols > 2:
        mapping[:, 1:-1] = 2 + np.arange(rows * (cols - 2)).reshape(rows, cols - 2)
    return mapping.ravel()


def build_network(
    rows: int,
    cols: int,
    occupancy: float,
    params: DamageModelParams,
    seed: int,
    unit_bond_conductance: float = 1.0,
) -> PercolationNetwork:
    """
    Realize a percolation network. Identical arguments give bit-identical networks.

    Random draws happen in a fixed order for every bond (occupancy, plain break strain,
    bridging, bridged break strain) so that networks differing only in
    lm_bridge_fraction share occupancy and plain break strains.

    Args:
        rows (int): Node rows, >= 2.
        cols (int): Node columns, >= 2.
        occupancy (float): Bond occupancy probability p in [0, 1].
        params (DamageModelParams): Break strain law.
        seed (int): Non-negative seed for numpy's default generator.
        unit_bond_conductance (float): Conductance of one bond in siemens.

    Returns:
        PercolationNetwork: The realized network.

    Raises:
        ValidationError: For a lattice below 2 x 2, occupancy outside [0, 1] or a negative seed.
    """
    node_a, node_b = lattice_bonds(rows, cols)
    require_fraction("occupancy", occupancy)
    require_positive("unit_bond_conductance", unit_bond_conductance)
    if seed < 0:
        raise ValidationError(f"seed must be non-negative, got {seed}")

    rng = np.random.default_rng(seed)
    n_bonds = node_a.size
    occupied = rng.random(n_bonds) < occupancy
    break_strain = params.break_strain_median * np.exp(
        params.break_strain_shape * rng.standard_normal(n_bonds)
    )
    bridge_draw = rng.random(n_bonds)
    lm_strain = params.lm_break_strain_median * np.exp(
        params.lm_break_strain_shape * rng.standard_normal(n_bonds)
    )
    lm_bridged = occupied & (bridge_draw < params.lm_bridge_fraction)
    lm_break_strain = np.maximum(lm_strain, break_strain)

    return PercolationNetwork(
        rows=rows,
        cols=cols,
        bond_occupancy_p=occupancy,
        unit_bond_conductance=unit_bond_conductance,
        seed=seed,
        node_a=node_a,
        node_b=node_b,
        occupied=occupied,
        break_strain=break_strain,
        lm_bridged=lm_bridged,
        lm_break_strain=lm_break_strain,
    )


def _merged_edges(network: PercolationNetwork, strain: float) -> Tuple[np.ndarray, np.ndarray]:
    alive = network.alive(strain)
    mapping = terminal_map(network.rows, network.cols)
    a = mapping[network.node_a[alive]]
    b = mapping[network.node_b[alive]]
    # bonds inside a bus bar are shorted out
    keep = a != b
    return a[keep], b[keep]


def _component_labels(n_nodes: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    graph = coo_matrix((np.ones(a.size), (a, b)), shape=(n_nodes, n_nodes))
    _, labels = connected_components(graph, directed=False)
    return labels


def is_connected(network: PercolationNetwork, strain: float = 0.0) -> bool:
    """
    True when a path of conducting bonds joins the two terminals at the given strain.
    """
    a, b = _merged_edges(network, strain)
    labels = _component_labels(network.merged_node_count, a, b)
    return bool(labels[SOURCE] == labels[SINK])


def solve_conductance(network: PercolationNetwork, strain: float = 0.0) -> NetworkSolution:
    """
    Effective source-sink conductance by nodal analysis.

    The source is held at unit potential and the sink at zero. Only the cluster that
    contains both terminals is kept, which makes the reduced graph Laplacian non-singular;
    it is solved directly with scipy's sparse LU. The total current leaving the source is
    the effective conductance.

    Args:
        network (PercolationNetwork): The network to solve.
        strain (float): Bonds whose failure strain is <= strain are removed first.

    Returns:
        NetworkSolution: Conductance, or a disconnected solution. Never raises for
                         disconnected networks.
    """
    a, b = _merged_edges(network, strain)
    alive_bonds = int(network.alive(strain).sum())
    n_nodes = network.merged_node_count
    labels = _component_labels(n_nodes, a, b)
    if labels[SOURCE] != labels[SINK]:
        return NetworkSolution(0.0, 0.0, True, alive_bonds)

    in_cluster = labels == labels[SOURCE]
    keep = in_cluster[a]
    a, b = a[keep], b[keep]

    ones = np.ones(a.size)
    laplacian = coo_matrix(
        (
            np.concatenate([ones, ones, -ones, -ones]),
            (np.concatenate([a, b, a, b]), np.concatenate([a, b, b, a])),
        ),
        shape=(n_nodes, n_nodes),
    ).tocsr()

    potentials = np.zeros(n_nodes)
    potentials[SOURCE] = 1.0
    unknown = np.flatnonzero(in_cluster)
    unknown = unknown[unknown > SINK]
    if unknown.size:
        reduced = laplacian[unknown][:, unknown].tocsc()
        rhs = -laplacian[unknown][:, SOURCE].toarray().ravel()
        potentials[unknown] = np.atleast_1d(spsolve(reduced, rhs))

    current = float((laplacian @ potentials)[SOURCE])
    return NetworkSolution(
        relative_conductance=current,
        conductance_s=current * network.unit_bond_conductance,
        disconnected=False,
        alive_bonds=alive_bonds,
    )


def _validate_grid(strain_grid: Sequence[float]) -> List[float]:
    grid = [float(strain) for strain in strain_grid]
    if not grid or grid[0] != 0.0:
        raise ValidationError("strain grid must start at 0")
    if not all(np.isfinite(grid)):
        raise ValidationError("strain grid must be finite")
    if any(later <= earlier for earlier, later in zip(grid, grid[1:])):
        raise ValidationError("strain grid must be strictly increasing")
    return grid


def _sequential_solutions(
    network: PercolationNetwork, grid: List[float]
) -> List[NetworkSolution]:
    solutions = []
    previous = None
    for strain in grid:
        alive_count = int(network.alive(strain).sum())
        if previous is not None and (
            previous.disconnected or previous.alive_bonds == alive_count
        ):
            # bond removal is monotone: same count means same bond set, and a
            # disconnected network stays disconnected
            solutions.append(previous)
            continue
        previous = solve_conductance(network, strain)
        if previous.disconnected:
            logger.debug("network seed=%s disconnected at strain %s", network.seed, strain)
        solutions.append(previous)
    return solutions


def strain_sweep(
    network: PercolationNetwork,
    geom: TraceGeometry,
    strain_grid: Sequence[float],
    failure_threshold: float = 100.0,
    workers: int = 1,
) -> ResistanceCurve:
    """
    Normalized resistance along a strain grid.

    R(eps) / R0 = (1 + eps)**2 * G(0) / G(eps). The affine factor is the constant-volume
    geometric term; G(eps) is the network conductance after removing every bond whose
    break strain is <= eps (bridged bonds persist until their own break strain).

    Args:
        network (PercolationNetwork): Network conducting at zero strain.
        geom (TraceGeometry): Unstrained trace geometry. The ratio does not depend on it; it
                              is validated so that curves can be turned into resistances.
        strain_grid (Sequence[float]): Strictly increasing strains starting at 0.
        failure_threshold (float): R/R0 value at which the trace counts as failed.
        workers (int): Threads used to evaluate grid points. The curve is identical for
                       any value.

    Returns:
        ResistanceCurve: The curve with its failure strain.

    Raises:
        ValidationError: For an invalid grid or a network that does not conduct at zero strain.
    """
    if not isinstance(geom, TraceGeometry):
        raise ValidationError("geom must be a TraceGeometry")
    require_positive("failure_threshold", failure_threshold)
    grid = _validate_grid(strain_grid)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solutions = list(pool.map(lambda strain: solve_conductance(network, strain), grid))
    else:
        solutions = _sequential_solutions(network, grid)

    base = solutions[0]
    if base.disconnected:
        raise ValidationError("network does not conduct at zero strain")

    points = []
    failure_strain = None
    for strain, solution in zip(grid, solutions):
        if solution.disconnected:
            ratio = None
        else:
            ratio = (1.0 + strain) ** 2 * (
                base.relative_conductance / solution.relative_conductance
            )
        points.append(CurvePoint(strain, ratio))
        if failure_strain is None and (ratio is None or ratio >= failure_threshold):
            failure_strain = strain

    return ResistanceCurve(
        points=tuple(points),
        failure_strain=failure_strain,
        failure_threshold=failure_threshold,
    )


def onset_strain(curve: ResistanceCurve, level: float = 2.0) -> Union[float, None]:
    """
    First grid strain where R/R0 exceeds level (or the network is disconnected).
    """
    for point in curve.points:
        if point.disconnected or point.normalized_resistance > level:
            return point.strain
    return None


def conductivity_curve(
    curve: ResistanceCurve, geom: TraceGeometry, sigma0: float
) -> List[Tuple[float, Union[float, None]]]:
    """
    Constant-volume conductivity estimate at each point of a resistance curve.

    R0 is the resistance of the unstrained trace at conductivity sigma0, the trace length
    at strain eps is l0 * (1 + eps) and the volume is held at l0 * w0 * t0.

    Returns:
        List[Tuple[float, float]]: (strain, sigma) pairs; sigma is None where the network
                                   is disconnected.
    """
    r0 = resistance_of_trace(geom, sigma0)
    trace_volume = volume(geom)
    result = []
    for point in curve.points:
        if point.disconnected:
            result.append((point.strain, None))
            continue
        length = geom.length_m * (1.0 + point.strain)
        sigma = conductivity_constant_volume(
            length, r0 * point.normalized_resistance, trace_volume
        )
        result.append((point.strain, sigma))
    return result


def connected_fraction(
    rows: int,
    cols: int,
    occupancy: float,
    seeds: Sequence[int],
    params: Union[DamageModelParams, None] = None,
) -> float:
    """
    Fraction of seeds whose unstrained network connects the terminals.
    """
    params = params or DamageModelParams()
    if not seeds:
        raise ValidationError("at least one seed is required")
    connected = sum(
        is_connected(build_network(rows, cols, occupancy, params, seed)) for seed in seeds
    )
    return connected / len(seeds)
