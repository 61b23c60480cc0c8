from dataclasses import dataclass
from typing import List, Union


@dataclass
class FailureStudy:
    """
    Represents the failure strains of one ink over several seeds, each seed standing in for
    a separately prepared ink batch.

    Attributes:
        ink (str): Preset name of the ink, e.g. "ag_wpu".
        seeds (List[int]): Seeds that were simulated, in order.
        failure_strains (List[float]): Failure strain per seed, None where the trace did not
                                       fail within the strain grid.
        onset_strains (List[float]): First strain per seed where R/R0 exceeds 2, None if never.
        median_failure_strain (float): Median over the seeds that failed, None if none did.
        unfailed_seeds (int): Number of seeds that never failed within the grid.
    """

    ink: str
    seeds: List[int]
    failure_strains: List[Union[float, None]]
    onset_strains: List[Union[float, None]]
    median_failure_strain: Union[float, None]
    unfailed_seeds: int


@dataclass
class CalibrationRow:
    """
    One candidate of the break strain calibration sweep.

    Attributes:
        break_strain_median (float): Candidate median plain-bond break strain.
        median_failure_strain (float): Median failure strain it produces, None if no seed failed.
    """

    break_strain_median: float
    median_failure_strain: Union[float, None]


@dataclass
class AcceptanceRow:
    """
    Represents the outcome of one acceptance check of the reproduction run.

    Attributes:
        number (int): Check number, 1-based.
        name (str): Short name of the check.
        observed (str): Observed value, formatted for the report.
        expected (str): Expected value or range, formatted for the report.
        passed (bool): Whether the observed value meets the expectation.

    Notes:
        - Values are preformatted strings so the report file is byte-reproducible.
    """

    number: int
    name: str
    observed: str
    expected: str
    passed: bool

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"
