"""
Printed-trace geometry and conductivity.

The constant-volume relations used throughout:

    V = l * t * w                    (volume of the conductive trace)
    sigma = l / (R * w * t)          (bulk conductivity)
    sigma = l**2 / (R * V)           (same, with t * w = V / l under incompressibility)

The last form is only an approximate estimate for a stretched trace; it assumes the
conductor keeps its volume while it elongates.
"""

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Tuple, Union

from .exceptions import ValidationError
from .reference_files_loader import ReferenceFilesLoader, default_reference_files
from .utilities import require_fraction, require_positive

# Linear wt% -> bond occupancy calibration anchors. 70 wt% maps to an empty lattice and
# 95 wt% to a full one, which puts 75 wt% below and 89.18 wt% above the 0.5 bond
# percolation threshold of the square lattice.
OCCUPANCY_ANCHOR_LOW = 0.70
OCCUPANCY_ANCHOR_HIGH = 0.95
SQUARE_LATTICE_BOND_THRESHOLD = 0.5


@dataclass(frozen=True)
class TraceGeometry:
    """
    Dimensions of a printed trace, in meters.

    Attributes:
        length_m (float): Trace length l.
        width_m (float): Trace width w.
        thickness_m (float): Trace thickness t.
    """

    length_m: float
    width_m: float
    thickness_m: float

    def __post_init__(self):
        require_positive("length_m", self.length_m)
        require_positive("width_m", self.width_m)
        require_positive("thickness_m", self.thickness_m)

    def cross_section_m2(self) -> float:
        return self.width_m * self.thickness_m

    def volume(self) -> float:
        return volume(self)


@dataclass(frozen=True)
class ConductivityMeasurement:
    """
    A resistance reading and the conductivity it implies for a given geometry.

    Attributes:
        resistance_ohm (float): Measured resistance R.
        sigma_s_per_m (float): Conductivity sigma.
    """

    resistance_ohm: float
    sigma_s_per_m: float

    def __post_init__(self):
        require_positive("resistance_ohm", self.resistance_ohm)
        require_positive("sigma_s_per_m", self.sigma_s_per_m)


@dataclass(frozen=True)
class StretchState:
    """
    Engineering strain of a trace and its stretched length.

    Attributes:
        strain (float): Engineering strain (l - l0) / l0, >= 0.
        stretched_length_m (float): l0 * (1 + strain).
    """

    strain: float
    stretched_length_m: float

    def __post_init__(self):
        if not math.isfinite(self.strain) or self.strain < 0:
            raise ValidationError(f"strain must be finite and >= 0, got {self.strain!r}")
        require_positive("stretched_length_m", self.stretched_length_m)


@dataclass(frozen=True)
class MaterialReference:
    """
    Measured reference values used by acceptance checks. Read-only; every value carries a
    note naming the measurement it comes from.
    """

    sigma_day0: float
    sigma_day30_print: float
    sigma_day30_vial: float
    sigma_recycled: float
    agwpu_failure_strain_range: Tuple[float, float]
    biphasic_failure_strain_range: Tuple[float, float]
    reference_trace: TraceGeometry
    notes: Mapping[str, str] = field(compare=False, hash=False)

    @classmethod
    def load(
        cls, reference_files: Union[ReferenceFilesLoader, None] = None
    ) -> "MaterialReference":
        """
        Build the reference from the packaged material_reference.json.

        Args:
            reference_files (ReferenceFilesLoader, optional): Loader to read from. Defaults to
                                                              the packaged reference data.

        Returns:
            MaterialReference: The immutable reference values.
        """
        reference_files = reference_files or default_reference_files()
        data = reference_files.material_reference
        return cls(
            sigma_day0=float(data["sigma_day0"]["value"]),
            sigma_day30_print=float(data["sigma_day30_print"]["value"]),
            sigma_day30_vial=float(data["sigma_day30_vial"]["value"]),
            sigma_recycled=float(data["sigma_recycled"]["value"]),
            agwpu_failure_strain_range=tuple(data["agwpu_failure_strain_range"]["value"]),
            biphasic_failure_strain_range=tuple(
                data["biphasic_failure_strain_range"]["value"]
            ),
            reference_trace=TraceGeometry(**data["reference_trace"]["value"]),
            notes=MappingProxyType({name: entry["note"] for name, entry in data.items()}),
        )


def volume(geom: TraceGeometry) -> float:
    """
    Volume of the trace, V = l * t * w, in cubic meters.
    """
    return geom.length_m * geom.thickness_m * geom.width_m


def conductivity_constant_volume(
    stretched_length_m: float, resistance_ohm: float, volume_m3: float
) -> float:
    """
    Conductivity of a stretched trace assuming its volume is conserved,
    sigma = l**2 / (R * V).

    This is only an approximate estimate: real inks are not perfectly incompressible.

    Args:
        stretched_length_m (float): Current trace length l.
        resistance_ohm (float): Measured resistance R at that length.
        volume_m3 (float): Trace volume V, normally the unstretched l0 * w0 * t0.

    Returns:
        float: Conductivity in S/m.

    Raises:
        ValidationError: If any argument is not strictly positive.
    """
    require_positive("stretched_length_m", stretched_length_m)
    require_positive("resistance_ohm", resistance_ohm)
    require_positive("volume_m3", volume_m3)
    return stretched_length_m**2 / (resistance_ohm * volume_m3)


def resistance_of_trace(geom: TraceGeometry, sigma: float) -> float:
    """
    Resistance of a trace of uniform conductivity, R = l / (sigma * w * t).

    Raises:
        ValidationError: If sigma is not strictly positive.
    """
    require_positive("sigma", sigma)
    return geom.length_m / (sigma * geom.width_m * geom.thickness_m)


def measure_conductivity(geom: TraceGeometry, resistance_ohm: float) -> ConductivityMeasurement:
    """
    Convert a resistance reading on an unstretched trace into a ConductivityMeasurement.
    """
    require_positive("resistance_ohm", resistance_ohm)
    sigma = geom.length_m / (resistance_ohm * geom.cross_section_m2())
    return ConductivityMeasurement(resistance_ohm=resistance_ohm, sigma_s_per_m=sigma)


def stretch(geom: TraceGeometry, strain: float) -> StretchState:
    """
    Stretch state of the trace at the given engineering strain.
    """
    return StretchState(strain=strain, stretched_length_m=geom.length_m * (1.0 + strain))


def occupancy_from_ag_weight(ag_wt_fraction: float) -> float:
    """
    Map the dry Ag weight fraction of an ink to a lattice bond occupancy probability.

    The map is piecewise linear, p(w) = clamp((w - 0.70) / 0.25, 0, 1). Only qualitative
    anchors are available: inks below 75 wt% Ag do not conduct and conductivity rises
    steeply above 90 wt%. With this map p(0.75) = 0.2 sits well below the square-lattice
    threshold of 0.5 and p(0.8918) = 0.767 well above it.

    Args:
        ag_wt_fraction (float): Dry Ag weight fraction in [0, 1].

    Returns:
        float: Occupancy probability in [0, 1].

    Raises:
        ValidationError: If the fraction lies outside [0, 1].
    """
    require_fraction("ag_wt_fraction", ag_wt_fraction)
    span = OCCUPANCY_ANCHOR_HIGH - OCCUPANCY_ANCHOR_LOW
    return min(1.0, max(0.0, (ag_wt_fraction - OCCUPANCY_ANCHOR_LOW) / span))
