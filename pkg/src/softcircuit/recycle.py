"""
Ink stoichiometry and recycling mass balances.

Every ledger checks conservation when it is built: the outputs must add up to the input
within LEDGER_TOLERANCE_G, the two-decimal precision the balances are weighed to.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple, Union

from .exceptions import ConservationError, ValidationError
from .reference_files_loader import ReferenceFilesLoader, default_reference_files
from .utilities import require_fraction, require_positive

logger = logging.getLogger(__name__)

LEDGER_TOLERANCE_G = 0.01
IPA_TO_INK_RATIO = 5.0
IPA_WASHES = 4


def _require_mass(name: str, value: float) -> float:
    if not math.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class InkFormulation:
    """
    Wet recipe of an ink, in grams.

    Attributes:
        ag_mass_g (float): Silver flakes.
        wpu_dispersion_mass_g (float): Waterborne polyurethane dispersion as supplied.
        wpu_solid_fraction (float): Solids content of the dispersion.
        water_mass_g (float): Added deionized water.
        egain_mass_g (float): Liquid metal. Counted as a solid since it never evaporates.
    """

    ag_mass_g: float
    wpu_dispersion_mass_g: float
    wpu_solid_fraction: float = 0.40
    water_mass_g: float = 0.0
    egain_mass_g: float = 0.0

    def __post_init__(self):
        _require_mass("ag_mass_g", self.ag_mass_g)
        _require_mass("wpu_dispersion_mass_g", self.wpu_dispersion_mass_g)
        require_fraction("wpu_solid_fraction", self.wpu_solid_fraction)
        _require_mass("water_mass_g", self.water_mass_g)
        _require_mass("egain_mass_g", self.egain_mass_g)

    @property
    def pu_solids_g(self) -> float:
        return self.wpu_dispersion_mass_g * self.wpu_solid_fraction

    @property
    def dry_solids_g(self) -> float:
        return self.ag_mass_g + self.pu_solids_g + self.egain_mass_g

    @property
    def wet_mass_g(self) -> float:
        return (
            self.ag_mass_g + self.wpu_dispersion_mass_g + self.water_mass_g + self.egain_mass_g
        )

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "InkFormulation":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown formulation keys {unknown}, valid keys are {sorted(known)}")
        try:
            return cls(**{key: float(value) for key, value in data.items()})
        except TypeError as err:
            raise ValidationError(str(err)) from None

    @classmethod
    def preset(
        cls, ink: str, reference_files: Union[ReferenceFilesLoader, None] = None
    ) -> "InkFormulation":
        """
        Packaged recipe by ink name.

        Raises:
            ValueError: If the ink is not a packaged recipe.
        """
        recipes = (reference_files or default_reference_files()).ink_recipes
        if ink not in recipes:
            raise ValueError(f"Input ink is not valid: {ink}. Valid inks are {sorted(recipes)}")
        return cls.from_dict(recipes[ink])


@dataclass(frozen=True)
class MassLedger:
    """
    A mass balance: one input split into labelled outputs.

    Attributes:
        input_mass_g (float): Mass going in, > 0.
        outputs (Tuple[Tuple[str, float], ...]): (label, grams) pairs, each >= 0.

    Raises:
        ConservationError: If the outputs do not sum to the input within 0.01 g.
    """

    input_mass_g: float
    outputs: Tuple[Tuple[str, float], ...] = field(default=())

    def __post_init__(self):
        require_positive("input_mass_g", self.input_mass_g)
        object.__setattr__(self, "outputs", tuple((str(k), float(v)) for k, v in self.outputs))
        for label, mass in self.outputs:
            if not math.isfinite(mass) or mass < 0:
                raise ConservationError(f"output {label!r} has invalid mass {mass!r}")
        imbalance = self.total_output_g - self.input_mass_g
        if abs(imbalance) > LEDGER_TOLERANCE_G:
            raise ConservationError(
                f"outputs sum to {self.total_output_g:.4f} g but input is "
                f"{self.input_mass_g:.4f} g (imbalance {imbalance:+.4f} g)"
            )

    @property
    def total_output_g(self) -> float:
        return math.fsum(mass for _, mass in self.outputs)

    def mass(self, label: str) -> float:
        for name, mass in self.outputs:
            if name == label:
                return mass
        raise KeyError(label)

    def fractions(self) -> Dict[str, float]:
        """
        Share of the input carried by each output, in percent.
        """
        return {label: 100.0 * mass / self.input_mass_g for label, mass in self.outputs}

    def table(self) -> str:
        """
        Aligned plain-text table of the ledger with a total row.
        """
        width = max([len("input")] + [len(label) for label, _ in self.outputs])
        lines = [f"{'input':<{width}}  {self.input_mass_g:>9.2f} g  {100.0:>7.2f} %"]
        for label, percent in self.fractions().items():
            lines.append(f"{label:<{width}}  {self.mass(label):>9.2f} g  {percent:>7.2f} %")
        total_percent = math.fsum(self.fractions().values())
        lines.append(f"{'total':<{width}}  {self.total_output_g:>9.2f} g  {total_percent:>7.2f} %")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "input_mass_g": self.input_mass_g,
            "outputs": [{"label": label, "mass_g": mass} for label, mass in self.outputs],
            "fractions_percent": self.fractions(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


@dataclass(frozen=True)
class RetentionReport:
    """
    Attributes:
        sigma_pristine (float): Conductivity of fresh ink, S/m.
        sigma_recycled (float): Conductivity of ink made from recovered powder, S/m.
        retention_fraction (float): sigma_recycled / sigma_pristine.
    """

    sigma_pristine: float
    sigma_recycled: float
    retention_fraction: float

    @property
    def decay_fraction(self) -> float:
        return 1.0 - self.retention_fraction


def ag_dry_weight_fraction(formulation: InkFormulation) -> float:
    """
    Silver share of the dry ink, ag / (ag + pu_solids + egain). Water evaporates and
    does not count.

    Raises:
        ValidationError: If the formulation has no solids.
    """
    if formulation.dry_solids_g <= 0:
        raise ValidationError("formulation has no dry solids")
    return formulation.ag_mass_g / formulation.dry_solids_g


def dry_composition(formulation: InkFormulation) -> Dict[str, float]:
    """
    Grams of each solid left after curing.
    """
    return {
        "ag_g": formulation.ag_mass_g,
        "pu_g": formulation.pu_solids_g,
        "egain_g": formulation.egain_mass_g,
    }


def cured_ag_fraction(ag_g: float, pu_g: float) -> float:
    """
    Silver share of a cured ink sample weighed as its silver and polyurethane parts.
    """
    _require_mass("ag_g", ag_g)
    _require_mass("pu_g", pu_g)
    if ag_g + pu_g <= 0:
        raise ValidationError("cured sample has no mass")
    return ag_g / (ag_g + pu_g)


def separation_ledger(
    initial_ink_mass_g: float, recovered_g: float, substrate_bound_g: float
) -> MassLedger:
    """
    Balance of the substrate separation step: ink recovered from the dissolved substrate,
    ink still bound to substrate residue, and the remainder lost.

    Raises:
        ConservationError: If recovered + bound exceeds the input.
    """
    require_positive("initial_ink_mass_g", initial_ink_mass_g)
    _require_mass("recovered_g", recovered_g)
    _require_mass("substrate_bound_g", substrate_bound_g)
    lost = initial_ink_mass_g - recovered_g - substrate_bound_g
    logger.debug("Separation of %.3f g: %.3f g unaccounted", initial_ink_mass_g, lost)
    if lost < -LEDGER_TOLERANCE_G:
        raise ConservationError(
            f"recovered {recovered_g} g + bound {substrate_bound_g} g exceed input "
            f"{initial_ink_mass_g} g"
        )
    return MassLedger(
        initial_ink_mass_g,
        (("recovered", recovered_g), ("lost", max(lost, 0.0)), ("substrate_bound", substrate_bound_g)),
    )


def wash_ledger(initial_g: float, post_wash_solids_g: float, discarded_pu_g: float) -> MassLedger:
    """
    Balance of the isopropanol wash that strips polyurethane from recovered ink.

    recovered_powder = post_wash - discarded_pu and process_loss = initial - post_wash.

    Args:
        initial_g (float): Dried ink going into the wash.
        post_wash_solids_g (float): Solids left after washing and drying.
        discarded_pu_g (float): Polyurethane-rich fraction removed from the solids.

    Returns:
        MassLedger: Outputs recovered_powder, discarded_pu and process_loss.

    Raises:
        ConservationError: If post_wash > initial or discarded > post_wash.
    """
    require_positive("initial_g", initial_g)
    logger.debug("Wash of %.3f g down to %.3f g solids", initial_g, post_wash_solids_g)
    _require_mass("post_wash_solids_g", post_wash_solids_g)
    _require_mass("discarded_pu_g", discarded_pu_g)
    if post_wash_solids_g > initial_g + LEDGER_TOLERANCE_G:
        raise ConservationError(
            f"post-wash solids {post_wash_solids_g} g exceed initial {initial_g} g"
        )
    if discarded_pu_g > post_wash_solids_g + LEDGER_TOLERANCE_G:
        raise ConservationError(
            f"discarded {discarded_pu_g} g exceeds post-wash solids {post_wash_solids_g} g"
        )
    return MassLedger(
        initial_g,
        (
            ("recovered_powder", max(post_wash_solids_g - discarded_pu_g, 0.0)),
            ("discarded_pu", discarded_pu_g),
            ("process_loss", max(initial_g - post_wash_solids_g, 0.0)),
        ),
    )


def conductivity_retention(sigma_pristine: float, sigma_recycled: float) -> RetentionReport:
    require_positive("sigma_pristine", sigma_pristine)
    require_positive("sigma_recycled", sigma_recycled)
    return RetentionReport(sigma_pristine, sigma_recycled, sigma_recycled / sigma_pristine)


def ipa_required(
    ink_mass_g: float, ratio: float = IPA_TO_INK_RATIO, washes: int = IPA_WASHES
) -> float:
    """
    Isopropanol needed to wash an ink batch, in grams: ratio times the ink mass for each
    of the washes.
    """
    require_positive("ink_mass_g", ink_mass_g)
    require_positive("ratio", ratio)
    if washes < 1:
        raise ValidationError(f"washes must be >= 1, got {washes}")
    return ink_mass_g * ratio * washes


def batches_from_powder(powder_g: float, formulation: InkFormulation) -> int:
    """
    Number of whole ink batches the recovered silver powder can make.
    """
    _require_mass("powder_g", powder_g)
    require_positive("ag_mass_g", formulation.ag_mass_g)
    # tolerate float noise at exact multiples
    return int(math.floor(powder_g / formulation.ag_mass_g + 1e-9))
