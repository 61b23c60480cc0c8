"""
Acceptance runner. Each check reproduces one measured or derived figure and is reported as
a row of repro_report.csv. Alongside the report, plot-ready artifacts are written:

    repro_report.csv              number,name,observed,expected,status
    curve_ag_wpu.csv              strain,normalized_resistance for the first seed
    curve_ag_egain_wpu.csv        same for the biphasic ink
    failure_strains.csv           seed,ag_wpu,ag_egain_wpu
    thermistor_curve.json         linear calibration of the default sensor
    gesture_distances.csv         distance matrix of one gesture trial

Nothing written depends on the clock or on thread scheduling, so two runs with the same
seed produce identical files. The reproducibility check runs every other check twice in
quick mode, into two temporary directories, and compares the files byte for byte.
"""

import io
import logging
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Collection, List, Tuple, Union

import numpy as np
from scipy.signal import sosfreqz

from . import biosignal, classify, coldchain, electromech, network, recycle, thermistor
from .config import RunConfig
from .csvio import write_csv
from .result import AcceptanceRow, FailureStudy

logger = logging.getLogger(__name__)

REPORT_FILENAME = "repro_report.csv"
REPORT_HEADER = ("number", "name", "observed", "expected", "status")


@dataclass(frozen=True)
class ReproSize:
    """
    Sample counts of the randomized checks. The quick size is for smoke runs only; the
    full size is what the acceptance thresholds are stated for.
    """

    geometries: int
    lattices: int
    percolation_seeds: int
    failure_seeds: int
    random_samples: int
    random_states: int
    filter_specs: int
    dsp_signals: int
    gesture_trials: int

    @classmethod
    def full(cls) -> "ReproSize":
        return cls(1000, 200, 50, 20, 100_000, 1000, 200, 1000, 100)

    @classmethod
    def quick(cls) -> "ReproSize":
        return cls(100, 30, 10, 5, 5_000, 50, 30, 50, 20)


@dataclass
class ReproOutcome:
    rows: List[AcceptanceRow]
    artifacts: List[Path]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


class AcceptanceRunner:
    """
    Runs the acceptance checks for one configuration.

    Attributes:
        config (RunConfig): Run configuration; its seed drives every random draw.
        size (ReproSize): Sample counts.
        reference (electromech.MaterialReference): Measured reference values.
    """

    def __init__(self, config: RunConfig, quick: bool = False):
        self.config = config
        self.size = ReproSize.quick() if quick else ReproSize.full()
        self.reference = electromech.MaterialReference.load()
        self.artifacts: dict = {}

    def _rng(self, check: int) -> np.random.Generator:
        # one independent stream per check so checks can be reordered
        return np.random.default_rng([self.config.seed, check])

    def checks(self) -> List[Tuple[str, Callable[[int], AcceptanceRow]]]:
        return [
            ("stoichiometry", self.check_stoichiometry),
            ("separation_ledger", self.check_separation_ledger),
            ("wash_ledger", self.check_wash_ledger),
            ("conductivity_retention", self.check_retention),
            ("conductivity_round_trip", self.check_conductivity_round_trip),
            ("network_solver_oracle", self.check_network_oracle),
            ("percolation_anchors", self.check_percolation_anchors),
            ("failure_strain_calibration", self.check_failure_strains),
            ("cold_chain_latch", self.check_cold_chain),
            ("filter_design", self.check_filters),
            ("dsp_oracles", self.check_dsp_oracles),
            ("ecg_features", self.check_ecg),
            ("gesture_classification", self.check_classification),
            ("thermistor_round_trip", self.check_thermistor),
            ("reproducibility", self.check_reproducibility),
        ]

    def run(self, only: Union[Collection[str], None] = None) -> List[AcceptanceRow]:
        """
        Run the checks in order. With `only`, the other checks are skipped; the rows keep
        their full-run numbers.
        """
        rows = []
        for number, (name, check) in enumerate(self.checks(), start=1):
            if only is not None and name not in only:
                continue
            logger.info("Acceptance check %d: %s", number, name)
            row = check(number)
            logger.info("  %s observed=%s expected=%s", row.status, row.observed, row.expected)
            rows.append(row)
        return rows

    # recycling and stoichiometry

    def check_stoichiometry(self, number: int) -> AcceptanceRow:
        fraction = recycle.ag_dry_weight_fraction(recycle.InkFormulation.preset("ag_wpu"))
        cured = recycle.cured_ag_fraction(10.701, 1.298)
        passed = abs(100 * fraction - 89.18) <= 0.01 and abs(100 * cured - 89.18) <= 0.01
        return AcceptanceRow(
            number,
            "stoichiometry",
            f"recipe {100 * fraction:.2f}%; cured {100 * cured:.2f}%",
            "89.18% +/- 0.01 pp",
            passed,
        )

    def check_separation_ledger(self, number: int) -> AcceptanceRow:
        ledger = recycle.separation_ledger(100.0, 91.18, 1.04)
        total = math.fsum(ledger.fractions().values())
        lost = ledger.mass("lost")
        passed = abs(lost - 7.78) <= 0.01 and abs(total - 100.0) <= 0.01
        return AcceptanceRow(
            number,
            "separation_ledger",
            f"lost {lost:.2f} g; total {total:.2f}%",
            "lost 7.78 g; total 100.00%",
            passed,
        )

    def check_wash_ledger(self, number: int) -> AcceptanceRow:
        ledger = recycle.wash_ledger(12.0, 9.62, 0.73)
        recovered = ledger.mass("recovered_powder")
        loss = ledger.fractions()["process_loss"]
        passed = abs(recovered - 8.89) <= 0.01 and abs(loss - 19.83) <= 0.02
        return AcceptanceRow(
            number,
            "wash_ledger",
            f"recovered {recovered:.2f} g; loss {loss:.2f}%",
            "recovered 8.89 g; loss 19.83% +/- 0.02 pp",
            passed,
        )

    def check_retention(self, number: int) -> AcceptanceRow:
        report = recycle.conductivity_retention(
            self.reference.sigma_day0, self.reference.sigma_recycled
        )
        return AcceptanceRow(
            number,
            "conductivity_retention",
            f"{report.retention_fraction:.4f} (decay {100 * report.decay_fraction:.2f}%)",
            "0.9741 +/- 1e-4",
            abs(report.retention_fraction - 0.9741) <= 1e-4,
        )

    # conductivity and the network model

    def check_conductivity_round_trip(self, number: int) -> AcceptanceRow:
        rng = self._rng(number)
        worst = 0.0
        for _ in range(self.size.geometries):
            geom = electromech.TraceGeometry(*np.exp(rng.uniform(np.log(1e-5), np.log(1.0), 3)))
            sigma = float(np.exp(rng.uniform(np.log(1e2), np.log(1e8))))
            resistance = electromech.resistance_of_trace(geom, sigma)
            recovered = electromech.conductivity_constant_volume(
                geom.length_m, resistance, electromech.volume(geom)
            )
            worst = max(worst, abs(recovered - sigma) / sigma)
        r_ref = electromech.resistance_of_trace(
            self.reference.reference_trace, self.reference.sigma_day0
        )
        return AcceptanceRow(
            number,
            "conductivity_round_trip",
            f"max rel err {worst:.1e}; R_ref {r_ref:.4f} ohm",
            "rel err <= 1e-9; R_ref 1.352 +/- 0.001 ohm",
            worst <= 1e-9 and abs(r_ref - 1.352) <= 0.001,
        )

    def check_network_oracle(self, number: int) -> AcceptanceRow:
        rng = self._rng(number)
        worst = 0.0
        for _ in range(self.size.lattices):
            rows, cols = (int(n) for n in rng.integers(2, 5, size=2))
            occupancy = float(rng.uniform(0.4, 1.0))
            net = network.build_network(
                rows, cols, occupancy, network.DamageModelParams(), int(rng.integers(0, 2**31))
            )
            solved = network.solve_conductance(net).relative_conductance
            dense = dense_conductance(net)
            error = abs(solved - dense) / dense if dense > 1e-12 else abs(solved)
            worst = max(worst, error)
        series, parallel = _series_parallel_conductances()
        exact = abs(series - 0.5) <= 1e-12 and abs(parallel - 1.0) <= 1e-12
        return AcceptanceRow(
            number,
            "network_solver_oracle",
            f"max rel err {worst:.1e}; series {series:.6f}; parallel {parallel:.6f}",
            "rel err <= 1e-9; series 0.5; parallel 1",
            worst <= 1e-9 and exact,
        )

    def check_percolation_anchors(self, number: int) -> AcceptanceRow:
        seeds = [self.config.seed * 1000 + k for k in range(1, self.size.percolation_seeds + 1)]
        low = network.connected_fraction(
            32, 32, electromech.occupancy_from_ag_weight(0.75), seeds
        )
        high = network.connected_fraction(
            32, 32, electromech.occupancy_from_ag_weight(0.8918), seeds
        )
        return AcceptanceRow(
            number,
            "percolation_anchors",
            f"p(0.75)={electromech.occupancy_from_ag_weight(0.75):.3f} connected {100 * low:.0f}%; "
            f"p(0.8918)={electromech.occupancy_from_ag_weight(0.8918):.3f} connected {100 * high:.0f}%",
            "< 5% and > 95%",
            low < 0.05 and high > 0.95,
        )

    def _failure_studies(self) -> Tuple[FailureStudy, FailureStudy]:
        studies = []
        for ink in ("ag_wpu", "ag_egain_wpu"):
            model = self.config.electromech.ink_model(ink)
            seeds = [seed + self.config.seed for seed in model.seeds[: self.size.failure_seeds]]
            studies.append(
                model.failure_strain_study(seeds, workers=self.config.electromech.workers)
            )
            curve = model.sweep(seeds[0], workers=self.config.electromech.workers)
            self.artifacts[f"curve_{ink}.csv"] = (
                ("strain", "normalized_resistance"),
                curve.to_rows(),
            )
        return studies[0], studies[1]

    def check_failure_strains(self, number: int) -> AcceptanceRow:
        plain, biphasic = self._failure_studies()
        self.artifacts["failure_strains.csv"] = (
            ("seed", "ag_wpu", "ag_egain_wpu"),
            list(zip(plain.seeds, plain.failure_strains, biphasic.failure_strains)),
        )
        low_range = (0.25, 0.35)
        high_range = (2.0, 3.3)
        plain_grid_end = self.config.electromech.ink_model("ag_wpu").strain_grid[-1]
        dominance = all(
            _fails_no_earlier(a, b, plain_grid_end)
            for a, b in zip(plain.failure_strains, biphasic.failure_strains)
        )
        plain_ok = _within(plain.median_failure_strain, low_range)
        biphasic_ok = _within(biphasic.median_failure_strain, high_range)
        return AcceptanceRow(
            number,
            "failure_strain_calibration",
            f"Ag-WPU median {_fmt(plain.median_failure_strain)}; "
            f"biphasic median {_fmt(biphasic.median_failure_strain)}; "
            f"biphasic >= plain per seed {'yes' if dominance else 'no'}",
            "[0.25, 0.35]; [2.0, 3.3]; yes",
            plain_ok and biphasic_ok and dominance,
        )

    # cold chain

    def check_cold_chain(self, number: int) -> AcceptanceRow:
        config = self.config.coldchain
        rng = self._rng(number)
        latch = config.latch_duration_s

        long_excursion = [
            coldchain.TemperatureSample(t, 7.0) for t in range(0, latch + 61, 60)
        ] + [coldchain.TemperatureSample(latch + 120, 2.0)]
        long_state = coldchain.run_trace(long_excursion, config).state
        latched_ok = long_state.latched_at == latch

        short_excursion = [
            coldchain.TemperatureSample(t, 7.0) for t in range(0, latch - 59, 60)
        ] + [coldchain.TemperatureSample(latch, 2.0)]
        short_ok = coldchain.run_trace(short_excursion, config).state.status is coldchain.Status.SAFE

        epochs = long_state.last_sample.epoch_s + np.cumsum(
            rng.integers(1, 120, size=self.size.random_samples)
        )
        temps = rng.integers(-20_000, 40_000, size=epochs.size) / 1000
        follow_up = [coldchain.TemperatureSample(int(t), float(v)) for t, v in zip(epochs, temps)]
        timeline = coldchain.run_trace(follow_up, config, long_state).timeline
        never_reverts = all(entry.status is coldchain.Status.UNSAFE_LATCHED for entry in timeline)

        round_trips = 0
        for _ in range(self.size.random_states):
            state = _random_state(rng, config)
            decoded = coldchain.decode_telemetry(coldchain.encode_telemetry(state), config)
            round_trips += decoded == state
        return AcceptanceRow(
            number,
            "cold_chain_latch",
            f"latched_at {long_state.latched_at}; {latch - 60} s excursion "
            f"{'SAFE' if short_ok else 'LATCHED'}; reverts {'no' if never_reverts else 'yes'}; "
            f"round trips {round_trips}/{self.size.random_states}",
            f"latched_at {latch}; SAFE; no; all",
            latched_ok and short_ok and never_reverts and round_trips == self.size.random_states,
        )

    # signal processing

    def check_filters(self, number: int) -> AcceptanceRow:
        fs = self.config.biosignal.sample_rate_hz
        notch = biosignal.design_filter(
            biosignal.FilterSpec.notch(self.config.biosignal.notch_hz, self.config.biosignal.notch_q), fs
        )
        t = np.arange(int(10 * fs)) / fs
        sine = np.sin(2 * np.pi * self.config.biosignal.notch_hz * t)
        settled = int(2 * fs)
        filtered = biosignal.apply_filter(notch, sine)
        attenuation_db = 20 * np.log10(_rms(filtered[settled:]) / _rms(sine[settled:]))

        worst_cutoff = 0.0
        edges = [*self.config.biosignal.ecg_band_hz, *self.config.biosignal.emg_band_hz]
        for index, cutoff in enumerate(edges):
            spec = (
                biosignal.FilterSpec.highpass(cutoff)
                if index % 2 == 0
                else biosignal.FilterSpec.lowpass(cutoff)
            )
            worst_cutoff = max(
                worst_cutoff, abs(magnitude_db(biosignal.design_filter(spec, fs), cutoff, fs) + 3.0103)
            )

        rng = self._rng(number)
        stable = 0
        for _ in range(self.size.filter_specs):
            rate = float(rng.uniform(100.0, 2000.0))
            low, high = sorted(rng.uniform(0.01, 0.49, size=2) * rate)
            if high - low < 1e-3 * rate:
                high = min(low + 1e-3 * rate, 0.499 * rate)
            specs = [
                biosignal.FilterSpec.notch(float(low), float(rng.uniform(1.0, 60.0))),
                biosignal.FilterSpec.bandpass(float(low), float(high)),
            ]
            stable += all(biosignal.is_stable(biosignal.design_filter(s, rate)) for s in specs)
        return AcceptanceRow(
            number,
            "filter_design",
            f"notch {attenuation_db:.1f} dB; cutoff error {worst_cutoff:.4f} dB; "
            f"stable {stable}/{self.size.filter_specs}",
            "<= -40 dB; <= 0.01 dB; all",
            attenuation_db <= -40 and worst_cutoff <= 0.01 and stable == self.size.filter_specs,
        )

    def check_dsp_oracles(self, number: int) -> AcceptanceRow:
        rng = self._rng(number)
        mismatches = 0
        for _ in range(self.size.dsp_signals):
            x = rng.normal(size=int(rng.integers(1, 120)))
            window = int(rng.integers(1, 70))
            rms_ok = np.allclose(
                biosignal.rms_envelope(x, window).values,
                brute_force_window(x, window, lambda w: np.sqrt(np.mean(w**2))),
                rtol=1e-12,
                atol=1e-12,
            )
            mean_ok = np.allclose(
                thermistor.moving_average(x, window),
                brute_force_window(x, window, np.mean),
                rtol=1e-12,
                atol=1e-12,
            )
            mismatches += not (rms_ok and mean_ok)
        x = rng.normal(size=40)
        y = rng.normal(size=33)
        dtw_ok = (
            classify.dtw_distance(x, x) == 0.0
            and classify.dtw_distance(x, y) == classify.dtw_distance(y, x)
            and classify.dtw_distance([0, 1, 2], [0, 2]) == 1.0
        )
        return AcceptanceRow(
            number,
            "dsp_oracles",
            f"window mismatches {mismatches}/{self.size.dsp_signals}; dtw {'ok' if dtw_ok else 'failed'}",
            "0; ok",
            mismatches == 0 and dtw_ok,
        )

    def check_ecg(self, number: int) -> AcceptanceRow:
        fs = 1000.0
        train = impulse_train(630, 20, fs)
        features = biosignal.detect_r_peaks(biosignal.SignalRecording(train, fs, 1.0))
        spiked = train.copy()
        spiked[features.r_peak_indices[5] + 100] = 1.2
        spiked_features = biosignal.detect_r_peaks(biosignal.SignalRecording(spiked, fs, 1.0))
        rr_ok = features.sufficient_beats and all(rr == 630.0 for rr in features.rr_intervals_ms)
        hr = features.heart_rate_bpm or 0.0
        return AcceptanceRow(
            number,
            "ecg_features",
            f"RR {features.rr_intervals_ms[0] if features.rr_intervals_ms else 0:.1f} ms; "
            f"HR {hr:.2f} bpm; spike rejected "
            f"{'yes' if spiked_features.r_peak_indices == features.r_peak_indices else 'no'}",
            "RR 630.0 ms; HR 95.24 bpm; yes",
            rr_ok
            and abs(hr - 60_000 / 630) <= 1e-9
            and spiked_features.r_peak_indices == features.r_peak_indices,
        )

    def check_classification(self, number: int) -> AcceptanceRow:
        rng = self._rng(number)
        observed = []
        passed = True
        for metric in (classify.Metric.DTW, classify.Metric.EUCLIDEAN):
            hits = sum(
                classify.gesture_trial(rng, 20.0, metric) for _ in range(self.size.gesture_trials)
            )
            observed.append(f"{metric.value} {hits}/{self.size.gesture_trials}")
            passed &= hits >= math.ceil(0.95 * self.size.gesture_trials)

        templates = classify.gesture_templates()
        labels = [f"gesture_{k}" for k in range(len(templates))]
        first = [classify.add_noise(x, 20.0, rng) for x in templates]
        second = [classify.add_noise(x, 20.0, rng) for x in templates]
        matrix = classify.pairwise_distances(
            first + second,
            [f"{label}_rep1" for label in labels] + [f"{label}_rep2" for label in labels],
            self.config.biosignal.metric,
        )
        self.artifacts["gesture_distances.csv"] = (None, matrix.to_rows())
        return AcceptanceRow(
            number, "gesture_classification", "; ".join(observed), ">= 95% each", passed
        )

    def check_thermistor(self, number: int) -> AcceptanceRow:
        settings = self.config.thermistor
        ntc = settings.ntc()
        divider = thermistor.DividerConfig(
            thermistor.linearizing_resistor(ntc),
            settings.vcc_v,
            settings.adc_bits,
            settings.thermistor_position,
        )
        curve = thermistor.fit_linear_calibration(thermistor.calibration_points(ntc, divider))
        temps = np.arange(25.0, 50.0 + 1e-9, 0.1)
        worst = max(
            abs(
                thermistor.temperature_from_adc(
                    thermistor.adc_from_temperature(float(t), ntc, divider), curve
                ).temp_c
                - t
            )
            for t in temps
        )
        self.artifacts["thermistor_curve.json"] = curve.to_json()
        return AcceptanceRow(
            number,
            "thermistor_round_trip",
            f"max |T - T_hat| {worst:.3f} C (R_fixed {divider.r_fixed_ohm:.0f} ohm)",
            "<= 0.5 C",
            worst <= 0.5,
        )

    def check_reproducibility(self, number: int) -> AcceptanceRow:
        model = self.config.electromech.ink_model()
        seed = model.seeds[0] + self.config.seed
        sequential = _curve_csv_text(model.sweep(seed))
        threaded = sequential == _curve_csv_text(model.sweep(seed, workers=4))
        rebuilt = model.build(seed) == model.build(seed)
        others = [name for name, _ in self.checks() if name != "reproducibility"]
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            run_repro(self.config, first, quick=True, only=others)
            run_repro(self.config, second, quick=True, only=others)
            differing = differing_files(Path(first), Path(second))
        if not (threaded and rebuilt):
            differing.append("in-process sweep")
        return AcceptanceRow(
            number,
            "reproducibility",
            "identical" if not differing else f"differs: {', '.join(differing)}",
            "two quick runs byte-identical; threaded sweep identical",
            not differing,
        )



def run_repro(
    config: RunConfig,
    out_dir: Union[str, Path, None] = None,
    quick: bool = False,
    only: Union[Collection[str], None] = None,
) -> ReproOutcome:
    """
    Run the acceptance checks and write the report and artifacts.

    Args:
        config (RunConfig): Configuration; config.out_dir is used when out_dir is None.
        out_dir (str | Path, optional): Output directory, created if missing.
        quick (bool): Use the reduced sample counts.
        only (Collection[str], optional): Names of the checks to run, all by default.

    Returns:
        ReproOutcome: Rows and the paths written.
    """
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = AcceptanceRunner(config, quick=quick)
    rows = runner.run(only)

    written = []
    report = out / REPORT_FILENAME
    write_csv(
        ((r.number, r.name, r.observed, r.expected, r.status) for r in rows),
        report,
        REPORT_HEADER,
    )
    written.append(report)
    for name in sorted(runner.artifacts):
        path = out / name
        artifact = runner.artifacts[name]
        if isinstance(artifact, str):
            path.write_text(artifact, encoding="utf-8")
        else:
            header, body = artifact
            write_csv(body, path, header)
        written.append(path)
    failed = [row.name for row in rows if not row.passed]
    if failed:
        logger.error("Failed acceptance checks: %s", ", ".join(failed))
    return ReproOutcome(rows, written)


def dense_conductance(net: network.PercolationNetwork) -> float:
    """
    Independent dense nodal solve on the unmerged lattice: every left-column node is held
    at 1 V and every right-column node at 0 V; interior potentials come from a least
    squares solve, which also handles floating clusters.
    """
    n = net.rows * net.cols
    alive = net.alive(0.0)
    laplacian = np.zeros((n, n))
    for a, b in zip(net.node_a[alive], net.node_b[alive]):
        laplacian[a, a] += 1.0
        laplacian[b, b] += 1.0
        laplacian[a, b] -= 1.0
        laplacian[b, a] -= 1.0
    column = np.arange(n) % net.cols
    fixed = (column == 0) | (column == net.cols - 1)
    potentials = np.where(column == 0, 1.0, 0.0)
    free = ~fixed
    if free.any():
        rhs = -laplacian[np.ix_(free, fixed)] @ potentials[fixed]
        potentials[free] = np.linalg.lstsq(laplacian[np.ix_(free, free)], rhs, rcond=None)[0]
    currents = laplacian @ potentials
    return float(currents[column == 0].sum())


def _series_parallel_conductances() -> Tuple[float, float]:
    # 2x3 lattice: the top row alone is two unit bonds in series, both rows are two such
    # paths in parallel
    series = network.PercolationNetwork.from_bonds(2, 3, [(0, 1), (1, 2)])
    parallel = network.PercolationNetwork.from_bonds(2, 3, [(0, 1), (1, 2), (3, 4), (4, 5)])
    return (
        network.solve_conductance(series).relative_conductance,
        network.solve_conductance(parallel).relative_conductance,
    )


def magnitude_db(sos: np.ndarray, frequency_hz: float, sample_rate_hz: float) -> float:
    _, response = sosfreqz(sos, worN=[frequency_hz], fs=sample_rate_hz)
    return float(20 * np.log10(np.abs(response[0])))


def brute_force_window(x: np.ndarray, window: int, reduce: Callable) -> np.ndarray:
    return np.array([reduce(x[max(0, i - window + 1): i + 1]) for i in range(x.size)])


def impulse_train(spacing_ms: int, beats: int, sample_rate_hz: float) -> np.ndarray:
    step = int(round(spacing_ms * sample_rate_hz / 1000))
    x = np.zeros(step * (beats + 1))
    x[step // 2:: step][:beats] = 1.0
    return x


def _random_state(rng: np.random.Generator, config: coldchain.ColdChainConfig) -> coldchain.ColdChainState:
    count = int(rng.integers(0, 80))
    epochs = np.cumsum(rng.integers(1, 900, size=count))
    temps = rng.integers(-5_000, 12_000, size=count) / 1000
    samples = [coldchain.TemperatureSample(int(t), float(v)) for t, v in zip(epochs, temps)]
    return coldchain.run_trace(samples, config).state


def _curve_csv_text(curve: network.ResistanceCurve) -> str:
    buffer = io.StringIO()
    for strain, value in curve.to_rows():
        buffer.write(f"{strain!r},{value!r}\n")
    return buffer.getvalue()


def _fails_no_earlier(
    plain: Union[float, None], biphasic: Union[float, None], plain_grid_end: float
) -> bool:
    # None means the trace survived its whole grid
    if biphasic is None:
        return True
    if plain is None:
        return biphasic > plain_grid_end
    return biphasic >= plain


def _within(value: Union[float, None], bounds: Tuple[float, float]) -> bool:
    return value is not None and bounds[0] <= value <= bounds[1]


def _fmt(value: Union[float, None]) -> str:
    return "none" if value is None else f"{value:.3f}"


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))



def differing_files(first: Path, second: Path) -> List[str]:
    """
    Names of the files that are missing from one directory or differ byte for byte.
    """
    names = sorted({path.name for path in (*first.iterdir(), *second.iterdir())})
    return [
        name
        for name in names
        if not ((first / name).is_file() and (second / name).is_file())
        or (first / name).read_bytes() != (second / name).read_bytes()
    ]
