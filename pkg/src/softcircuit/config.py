"""
Run configuration: one JSON document with a block per library module, a global seed and
an output directory. Every key is optional; omitted keys take the documented defaults.

    {
        "seed": 0,
        "out_dir": "out",
        "electromech": {"ink": "ag_wpu", "workers": 1, "rows": 32, "cols": 32,
                        "ag_wt_fraction": 0.8918, "failure_threshold": 100.0},
        "coldchain": {"threshold_c": 5.0, "latch_duration_s": 3600, "max_gap_s": 600},
        "thermistor": {"r25_ohm": 10000.0, "beta_k": 3435.0, "r_fixed_ohm": 10000.0,
                       "vcc_v": 3.3, "adc_bits": 10, "thermistor_position": "low-side",
                       "window_samples": 60},
        "biosignal": {"sample_rate_hz": 250.0, "gain": 24.0, "notch_hz": 60.0,
                      "notch_q": 30.0, "ecg_band_hz": [5.0, 55.0],
                      "emg_band_hz": [2.0, 100.0], "envelope_window": 50,
                      "metric": "dtw"},
        "recycle": {"ink": "ag_wpu", "ipa_ratio": 5.0, "ipa_washes": 4}
    }

Besides ink and workers, the electromech block accepts any key of the ink's damage preset
(rows, cols, ag_wt_fraction or occupancy, the break strain law, seeds, strain_stop,
strain_step and failure_threshold). Those keys override the preset of the configured ink.

The document is checked against the packaged run_config.schema.json first. Unknown keys
and wrongly typed values are rejected with a ConfigError carrying the JSON pointer of the
offending value; values that pass the schema but not a block's own checks carry the
pointer of the block.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping, Tuple, Union

from jsonschema import Draft202012Validator
from jsonschema.exceptions import ValidationError as SchemaError
from jsonschema.exceptions import best_match

from .biosignal import ECG_BAND_HZ, EMG_BAND_HZ, FilterSpec
from .classify import Metric
from .coldchain import ColdChainConfig
from .exceptions import ConfigError, ValidationError
from .model import InkModel
from .reference_files_loader import default_reference_files
from .thermistor import DEFAULT_WINDOW_SAMPLES, DividerConfig, NtcParams
from .utilities import require_positive

logger = logging.getLogger(__name__)

SEED_ENVIRONMENT_VARIABLE = "SOFTCIRCUIT_SEED"

PRESET_OVERRIDE_KEYS = (
    "rows",
    "cols",
    "occupancy",
    "ag_wt_fraction",
    "break_strain_median",
    "break_strain_shape",
    "lm_bridge_fraction",
    "lm_break_strain_median",
    "lm_break_strain_shape",
    "seeds",
    "strain_stop",
    "strain_step",
    "failure_threshold",
)


def _require_count(name: str, value: int) -> None:
    if value < 1:
        raise ValidationError(f"{name} must be >= 1, got {value}")


@dataclass(frozen=True)
class ElectromechSettings:
    """
    Ink choice for the percolation model plus optional overrides of its damage preset.
    Overrides left at None keep the packaged preset value.

    Attributes:
        ink (str): Damage preset name.
        workers (int): Threads for strain grid evaluation.
        occupancy (float): Bond occupancy; excludes ag_wt_fraction.
        seeds (Tuple[int, ...]): Seeds of a failure strain study.
        rows, cols, ag_wt_fraction, break_strain_*, lm_*, strain_stop, strain_step,
        failure_threshold: Same meaning as in damage_presets.json.
    """

    ink: str = "ag_wpu"
    workers: int = 1
    rows: Union[int, None] = None
    cols: Union[int, None] = None
    occupancy: Union[float, None] = None
    ag_wt_fraction: Union[float, None] = None
    break_strain_median: Union[float, None] = None
    break_strain_shape: Union[float, None] = None
    lm_bridge_fraction: Union[float, None] = None
    lm_break_strain_median: Union[float, None] = None
    lm_break_strain_shape: Union[float, None] = None
    seeds: Union[Tuple[int, ...], None] = None
    strain_stop: Union[float, None] = None
    strain_step: Union[float, None] = None
    failure_threshold: Union[float, None] = None

    def __post_init__(self):
        presets = default_reference_files().damage_presets
        if self.ink not in presets:
            raise ValidationError(f"unknown ink {self.ink!r}, valid inks are {sorted(presets)}")
        _require_count("workers", self.workers)
        if self.occupancy is not None and self.ag_wt_fraction is not None:
            raise ValidationError("set occupancy or ag_wt_fraction, not both")
        if self.seeds is not None:
            object.__setattr__(self, "seeds", tuple(self.seeds))
        self.ink_model()

    def preset_overrides(self) -> dict:
        values = {key: getattr(self, key) for key in PRESET_OVERRIDE_KEYS}
        return {key: value for key, value in values.items() if value is not None}

    def ink_model(self, ink: Union[str, None] = None) -> InkModel:
        """
        Build the percolation model of an ink.

        Args:
            ink (str, optional): Preset name, the configured ink by default. The overrides
                                 only apply to the configured ink; other inks get their
                                 packaged preset.

        Returns:
            InkModel: The model.
        """
        ink = ink or self.ink
        overrides = self.preset_overrides() if ink == self.ink else None
        return InkModel(ink, preset_overrides=overrides)


@dataclass(frozen=True)
class ThermistorSettings:
    r25_ohm: float = 10_000.0
    beta_k: float = 3435.0
    r_fixed_ohm: float = 10_000.0
    vcc_v: float = 3.3
    adc_bits: int = 10
    thermistor_position: str = "low-side"
    window_samples: int = DEFAULT_WINDOW_SAMPLES

    def __post_init__(self):
        self.ntc()
        self.divider()
        _require_count("window_samples", self.window_samples)

    def ntc(self) -> NtcParams:
        return NtcParams(self.r25_ohm, self.beta_k)

    def divider(self) -> DividerConfig:
        try:
            return DividerConfig(self.r_fixed_ohm, self.vcc_v, self.adc_bits, self.thermistor_position)
        except ValueError as err:
            raise ValidationError(str(err)) from None


@dataclass(frozen=True)
class BiosignalSettings:
    sample_rate_hz: float = 250.0
    gain: float = 24.0
    notch_hz: float = 60.0
    notch_q: float = 30.0
    ecg_band_hz: Tuple[float, float] = ECG_BAND_HZ
    emg_band_hz: Tuple[float, float] = EMG_BAND_HZ
    envelope_window: int = 50
    metric: str = "dtw"

    def __post_init__(self):
        require_positive("sample_rate_hz", self.sample_rate_hz)
        require_positive("gain", self.gain)
        nyquist = self.sample_rate_hz / 2
        for name in ("ecg_band_hz", "emg_band_hz"):
            band = tuple(float(edge) for edge in getattr(self, name))
            if len(band) != 2:
                raise ValidationError(f"{name} needs two band edges, got {band}")
            object.__setattr__(self, name, band)
            FilterSpec.bandpass(*band)
            if band[1] >= nyquist:
                raise ValidationError(f"{name} upper edge {band[1]} Hz is not below {nyquist} Hz")
        FilterSpec.notch(self.notch_hz, self.notch_q)
        if not 0 < self.notch_hz < nyquist:
            raise ValidationError(f"notch_hz {self.notch_hz} must be in (0, {nyquist}) Hz")
        _require_count("envelope_window", self.envelope_window)
        if self.metric not in {metric.value for metric in Metric}:
            raise ValidationError(f"metric must be 'dtw' or 'euclidean', got {self.metric!r}")


@dataclass(frozen=True)
class RecycleSettings:
    ink: str = "ag_wpu"
    ipa_ratio: float = 5.0
    ipa_washes: int = 4

    def __post_init__(self):
        recipes = default_reference_files().ink_recipes
        if self.ink not in recipes:
            raise ValidationError(f"unknown ink {self.ink!r}, valid inks are {sorted(recipes)}")
        require_positive("ipa_ratio", self.ipa_ratio)
        _require_count("ipa_washes", self.ipa_washes)


_BLOCKS = {
    "electromech": ElectromechSettings,
    "coldchain": ColdChainConfig,
    "thermistor": ThermistorSettings,
    "biosignal": BiosignalSettings,
    "recycle": RecycleSettings,
}


@dataclass(frozen=True)
class RunConfig:
    """
    Validated run configuration.

    Attributes:
        seed (int): Global seed, overridden by the SOFTCIRCUIT_SEED environment variable.
        out_dir (str): Directory for output artifacts.
        electromech, coldchain, thermistor, biosignal, recycle: Per-module settings.
    """

    seed: int = 0
    out_dir: str = "out"
    electromech: ElectromechSettings = field(default_factory=ElectromechSettings)
    coldchain: ColdChainConfig = field(default_factory=ColdChainConfig)
    thermistor: ThermistorSettings = field(default_factory=ThermistorSettings)
    biosignal: BiosignalSettings = field(default_factory=BiosignalSettings)
    recycle: RecycleSettings = field(default_factory=RecycleSettings)

    def to_dict(self) -> dict:
        """
        The configuration as a document that validates against the schema. Unset preset
        overrides are left out.
        """
        data = asdict(self)
        for block in _BLOCKS:
            data[block] = {
                key: list(value) if isinstance(value, tuple) else value
                for key, value in data[block].items()
                if value is not None
            }
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _json_pointer(error: SchemaError) -> str:
    path = [str(part) for part in error.absolute_path]
    if error.validator == "additionalProperties":
        unexpected = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        path.append(unexpected[0])
    return "".join("/" + part.replace("~", "~0").replace("/", "~1") for part in path)


def _coerce(value, schema: dict, root: dict):
    """
    Convert a validated JSON value to the Python types of the settings dataclasses:
    numbers to float, integers to int and arrays to tuples.
    """
    if "$ref" in schema:
        schema = root["$defs"][schema["$ref"].rsplit("/", 1)[-1]]
    kind = schema.get("type")
    if kind == "object":
        return {key: _coerce(item, schema["properties"][key], root) for key, item in value.items()}
    if kind == "array":
        return tuple(_coerce(item, schema["items"], root) for item in value)
    if kind == "number":
        return float(value)
    if kind == "integer":
        return int(value)
    return value


def validate_document(data) -> dict:
    """
    Check a parsed JSON document against the packaged run configuration schema.

    Returns:
        dict: The document with values converted to the settings' Python types.

    Raises:
        ConfigError: For the most relevant schema violation.
    """
    schema = default_reference_files().run_config_schema
    error = best_match(Draft202012Validator(schema).iter_errors(data))
    if error is not None:
        raise ConfigError(error.message, _json_pointer(error))
    return _coerce(data, schema, schema)


def config_from_dict(data: Mapping) -> RunConfig:
    """
    Build a RunConfig from a parsed JSON document.

    Raises:
        ConfigError: On a schema violation, or when a block's values are inconsistent
                     (an unknown ink, a band edge above Nyquist).
    """
    document = validate_document(data)
    blocks = {}
    for name, cls in _BLOCKS.items():
        try:
            blocks[name] = cls(**document.get(name, {}))
        except ValueError as err:
            raise ConfigError(str(err), f"/{name}") from None
    return RunConfig(seed=document.get("seed", 0), out_dir=document.get("out_dir", "out"), **blocks)


def parse_config(path: Union[str, Path, None] = None, environ: Union[Mapping, None] = None) -> RunConfig:
    """
    Read and validate a configuration file, then apply the environment seed override.

    Args:
        path (str | Path, optional): JSON file. None gives the default configuration.
        environ (Mapping, optional): Environment to read SOFTCIRCUIT_SEED from, os.environ
                                     by default.

    Returns:
        RunConfig: The validated configuration.

    Raises:
        OSError: If the file cannot be read.
        ConfigError: If the document is not valid JSON or does not match the schema.
    """
    if path is None:
        config = RunConfig()
    else:
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON at line {err.lineno}: {err.msg}", "") from None
        config = config_from_dict(data)
    return apply_environment(config, os.environ if environ is None else environ)


def apply_environment(config: RunConfig, environ: Mapping) -> RunConfig:
    """
    Override the seed from SOFTCIRCUIT_SEED when it is set.
    """
    raw = environ.get(SEED_ENVIRONMENT_VARIABLE)
    if raw is None or raw == "":
        return config
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENVIRONMENT_VARIABLE}={raw!r} is not an integer", "/seed") from None
    if seed < 0:
        raise ConfigError(f"{SEED_ENVIRONMENT_VARIABLE} must be >= 0", "/seed")
    logger.info("Seed %d taken from %s", seed, SEED_ENVIRONMENT_VARIABLE)
    return replace(config, seed=seed)
