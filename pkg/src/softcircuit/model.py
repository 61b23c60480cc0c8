import logging
from statistics import median
from typing import List, Mapping, Sequence, Union

from .electromech import MaterialReference, TraceGeometry, occupancy_from_ag_weight
from .network import (
    DamageModelParams,
    PercolationNetwork,
    ResistanceCurve,
    build_network,
    is_connected,
    onset_strain,
    strain_sweep,
)
from .reference_files_loader import ReferenceFilesLoader, default_reference_files
from .result import CalibrationRow, FailureStudy
from .utilities import require_fraction, uniform_grid

logger = logging.getLogger(__name__)


class InkModel:
    """
    Represents the percolation model of one conductive ink. This is the base class; use
    AgWpuInk or AgEGaInWpuInk, or pass a preset name.

    How this class works:
    1.  Instantiate with a preset name. The preset (lattice size, occupancy, break strain
        law, strain grid, seeds) is read from the packaged damage_presets.json; any
        preset_overrides replace single preset keys.
    2.  `sweep` realizes one network per seed and returns its resistance curve.
    3.  `failure_strain_study` repeats the sweep over the preset seeds.

    Attributes:
        ink (str): Preset name.
        reference_files (ReferenceFilesLoader): Loader for the reference files.
        description (str): Human readable ink description.
        ag_wt_fraction (float): Dry Ag weight fraction of the ink.
        occupancy (float): Bond occupancy, derived from ag_wt_fraction unless overridden.
        rows (int), cols (int): Lattice dimensions.
        damage_params (DamageModelParams): Break strain law.
        strain_grid (List[float]): Default strain grid.
        failure_threshold (float): R/R0 defining electrical failure.
        seeds (List[int]): Default seeds.
        geometry (TraceGeometry): Reference trace geometry.
    """

    def __init__(
        self,
        ink: str,
        reference_files: Union[ReferenceFilesLoader, None] = None,
        damage_params: Union[DamageModelParams, None] = None,
        preset_overrides: Union[Mapping, None] = None,
    ):
        self.reference_files = reference_files or default_reference_files()
        self.ink = ink
        preset = {**self._get_preset(), **(preset_overrides or {})}
        self.description = preset["description"]
        self.ag_wt_fraction = float(preset["ag_wt_fraction"])
        if preset.get("occupancy") is not None:
            # a direct occupancy wins over the weight fraction
            self.occupancy = require_fraction("occupancy", float(preset["occupancy"]))
        else:
            self.occupancy = occupancy_from_ag_weight(self.ag_wt_fraction)
        self.rows = int(preset["rows"])
        self.cols = int(preset["cols"])
        self.damage_params = damage_params or DamageModelParams(
            break_strain_median=preset["break_strain_median"],
            break_strain_shape=preset["break_strain_shape"],
            lm_bridge_fraction=preset["lm_bridge_fraction"],
            lm_break_strain_median=preset["lm_break_strain_median"],
            lm_break_strain_shape=preset["lm_break_strain_shape"],
        )
        self.strain_grid = uniform_grid(preset["strain_stop"], preset["strain_step"])
        self.failure_threshold = float(preset["failure_threshold"])
        self.seeds = [int(seed) for seed in preset["seeds"]]
        self.geometry = MaterialReference.load(self.reference_files).reference_trace

    def _get_preset(self) -> dict:
        """
        Look up the preset for this ink.

        Returns:
            dict: The preset entry.

        Raises:
            ValueError: If the ink is not one of the packaged presets.
        """
        presets = self.reference_files.damage_presets
        if self.ink not in presets:
            raise ValueError(
                f"Input ink is not valid: {self.ink}. Valid inks are {sorted(presets)}"
            )
        return presets[self.ink]

    def build(self, seed: int) -> PercolationNetwork:
        return build_network(self.rows, self.cols, self.occupancy, self.damage_params, seed)

    def sweep(
        self,
        seed: int,
        strain_grid: Union[Sequence[float], None] = None,
        geometry: Union[TraceGeometry, None] = None,
        workers: int = 1,
    ) -> ResistanceCurve:
        """
        Resistance curve of one realized network.

        Args:
            seed (int): Network seed.
            strain_grid (Sequence[float], optional): Overrides the preset grid.
            geometry (TraceGeometry, optional): Overrides the reference trace.
            workers (int): Threads for grid evaluation.

        Returns:
            ResistanceCurve: The curve for this seed.
        """
        return strain_sweep(
            self.build(seed),
            geometry or self.geometry,
            strain_grid if strain_grid is not None else self.strain_grid,
            failure_threshold=self.failure_threshold,
            workers=workers,
        )

    def failure_strain_study(
        self, seeds: Union[Sequence[int], None] = None, workers: int = 1
    ) -> FailureStudy:
        """
        Failure and onset strains over several seeds.

        Args:
            seeds (Sequence[int], optional): Seeds to simulate; the preset seeds by default.
            workers (int): Threads for grid evaluation within each sweep.

        Returns:
            FailureStudy: Per-seed strains and their median.
        """
        seeds = list(seeds) if seeds is not None else list(self.seeds)
        failures, onsets = [], []
        for seed in seeds:
            network = self.build(seed)
            if not is_connected(network):
                # a trace that never conducted has failed before any strain is applied
                logger.warning("%s seed %d does not conduct at zero strain", self.ink, seed)
                failures.append(0.0)
                onsets.append(0.0)
                continue
            curve = strain_sweep(
                network,
                self.geometry,
                self.strain_grid,
                failure_threshold=self.failure_threshold,
                workers=workers,
            )
            failures.append(curve.failure_strain)
            onsets.append(onset_strain(curve))
        failed = [strain for strain in failures if strain is not None]
        study = FailureStudy(
            ink=self.ink,
            seeds=seeds,
            failure_strains=failures,
            onset_strains=onsets,
            median_failure_strain=median(failed) if failed else None,
            unfailed_seeds=len(failures) - len(failed),
        )
        logger.info(
            "%s: median failure strain %s over %d seeds",
            self.ink,
            study.median_failure_strain,
            len(seeds),
        )
        return study


class AgWpuInk(InkModel):
    """
    Silver flake / waterborne polyurethane ink without liquid metal.
    """

    def __init__(self, reference_files: Union[ReferenceFilesLoader, None] = None):
        super().__init__("ag_wpu", reference_files)


class AgEGaInWpuInk(InkModel):
    """
    Biphasic ink: the Ag-WPU ink with EGaIn added. A fraction of the flake contacts is
    bridged by liquid metal and keeps conducting to much larger strains.
    """

    def __init__(self, reference_files: Union[ReferenceFilesLoader, None] = None):
        super().__init__("ag_egain_wpu", reference_files)


def calibrate_break_strain_median(
    ink: str,
    candidates: Sequence[float],
    seeds: Union[Sequence[int], None] = None,
    rows: Union[int, None] = None,
    cols: Union[int, None] = None,
) -> List[CalibrationRow]:
    """
    Parameter sweep used to choose the shipped break strain medians.

    For each candidate plain-bond median (all other preset values fixed) the preset ink is
    simulated over the seeds and the median failure strain recorded. The shipped default is
    the candidate whose median failure strain lands inside the measured failure range.
    Larger candidates never fail earlier: scaling every break strain up only keeps more
    bonds alive at each strain.

    Args:
        ink (str): Preset name.
        candidates (Sequence[float]): Candidate medians, any order.
        seeds (Sequence[int], optional): Seeds; the preset seeds by default.
        rows (int, optional), cols (int, optional): Override the preset lattice, e.g. to
                                                    calibrate quickly on a small lattice.

    Returns:
        List[CalibrationRow]: One row per candidate, in the order given.
    """
    rows_out = []
    for candidate in candidates:
        model = InkModel(ink)
        params = model.damage_params
        model.damage_params = DamageModelParams(
            break_strain_median=candidate,
            break_strain_shape=params.break_strain_shape,
            lm_bridge_fraction=params.lm_bridge_fraction,
            lm_break_strain_median=params.lm_break_strain_median,
            lm_break_strain_shape=params.lm_break_strain_shape,
        )
        model.rows = rows or model.rows
        model.cols = cols or model.cols
        study = model.failure_strain_study(seeds)
        rows_out.append(CalibrationRow(candidate, study.median_failure_strain))
    return rows_out
