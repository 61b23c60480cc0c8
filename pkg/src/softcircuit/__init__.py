from .coldchain import ColdChainConfig, ColdChainState, TemperatureSample
from .electromech import MaterialReference, TraceGeometry
from .model import AgEGaInWpuInk, AgWpuInk, InkModel
from .network import DamageModelParams, PercolationNetwork
from .recycle import InkFormulation, MassLedger
from .thermistor import CalibrationCurve, DividerConfig, NtcParams

__all__ = [
    "AgEGaInWpuInk",
    "AgWpuInk",
    "CalibrationCurve",
    "ColdChainConfig",
    "ColdChainState",
    "DamageModelParams",
    "DividerConfig",
    "InkFormulation",
    "InkModel",
    "MassLedger",
    "MaterialReference",
    "NtcParams",
    "PercolationNetwork",
    "TemperatureSample",
    "TraceGeometry",
]
