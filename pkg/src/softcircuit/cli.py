"""
Command line entry point.

    softcircuit trace --ink ag_wpu --seed 1 --csv curve.csv
    softcircuit coldchain run --samples label.csv [--log label.log]
    softcircuit thermistor calibrate --points points.csv --curve curve.json
    softcircuit thermistor convert --curve curve.json --counts counts.csv
    softcircuit dsp filter|envelope|ecg|classify ...
    softcircuit recycle recipe|ledger|wash|retention ...
    softcircuit repro [--quick]

-v, --config and --out are accepted before or after the subcommand.

Exit codes: 0 success, 1 usage error, 2 invalid input or a failed acceptance check,
3 file system error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from . import biosignal, classify, coldchain, recycle, thermistor
from .config import RunConfig, parse_config
from .csvio import read_rows, read_signal_csv, write_csv
from .exceptions import UsageError, ValidationError
from .repro import REPORT_FILENAME, run_repro

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


class ArgumentParser(argparse.ArgumentParser):
    """
    ArgumentParser that raises UsageError instead of exiting, so that dispatch owns the
    exit code.
    """

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _band(text: str):
    presets = {"ecg": biosignal.ECG_BAND_HZ, "emg": biosignal.EMG_BAND_HZ}
    if text in presets:
        return presets[text]
    try:
        low, high = (float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'ecg', 'emg' or 'LOW,HIGH', got {text!r}")
    return (low, high)


def _labelled_path(text: str):
    label, sep, path = text.partition("=")
    if not sep or not label or not path:
        raise argparse.ArgumentTypeError(f"expected LABEL=PATH, got {text!r}")
    return label, Path(path)


def _common_options(verbose_default, default) -> ArgumentParser:
    """
    Options accepted before and after any subcommand. Subcommands get SUPPRESS defaults
    so that an option given only before the subcommand is not reset by the subparser.
    """
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "-v", "--verbose", action="count", default=verbose_default, help="-v info, -vv debug"
    )
    common.add_argument("--config", type=Path, default=default, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=default, help="output directory for artifacts")
    return common


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="softcircuit",
        description="Printed soft electronics toolkit",
        parents=[_common_options(verbose_default=0, default=None)],
    )
    shared = _common_options(verbose_default=argparse.SUPPRESS, default=argparse.SUPPRESS)
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    trace = commands.add_parser(
        "trace", parents=[shared], help="resistance-strain curve of one ink network"
    )
    trace.add_argument("--ink", help="ink preset, defaults to the configured ink")
    trace.add_argument("--seed", type=int, help="network seed, defaults to the first preset seed")
    trace.add_argument("--workers", type=int, help="threads for the strain grid")
    trace.add_argument("--csv", type=Path, help="output CSV, default <out>/curve_<ink>.csv")

    cold = commands.add_parser("coldchain", parents=[shared], help="smart-label cold chain monitor")
    cold_commands = cold.add_subparsers(dest="action", required=True, metavar="ACTION")
    cold_run = cold_commands.add_parser(
        "run", parents=[shared], help="run a temperature log through the monitor"
    )
    cold_run.add_argument("--samples", type=Path, required=True, help="CSV epoch_s,temp_c")
    cold_run.add_argument("--telemetry", type=Path, help="write the telemetry payload here")
    cold_run.add_argument("--timeline", type=Path, help="write the status timeline CSV here")
    cold_run.add_argument(
        "--log", type=Path, help="append every processed sample to this append-only telemetry log"
    )

    therm = commands.add_parser("thermistor", parents=[shared], help="NTC thermistor calibration")
    therm_commands = therm.add_subparsers(dest="action", required=True, metavar="ACTION")
    calibrate = therm_commands.add_parser(
        "calibrate", parents=[shared], help="fit a linear calibration"
    )
    calibrate.add_argument("--points", type=Path, required=True, help="CSV adc_count,true_temp_c")
    calibrate.add_argument("--curve", type=Path, help="write the curve JSON here")
    convert = therm_commands.add_parser(
        "convert", parents=[shared], help="convert ADC counts to temperature"
    )
    convert.add_argument("--curve", type=Path, required=True, help="curve JSON")
    convert.add_argument("--counts", type=Path, required=True, help="CSV adc_count")
    convert.add_argument("--window", type=int, help="moving average window in samples")
    convert.add_argument("--csv", type=Path, help="write temperatures here instead of stdout")

    dsp = commands.add_parser("dsp", parents=[shared], help="ECG and EMG signal processing")
    dsp_commands = dsp.add_subparsers(dest="action", required=True, metavar="ACTION")
    dsp_filter = dsp_commands.add_parser(
        "filter", parents=[shared], help="notch and band filter a signal"
    )
    dsp_filter.add_argument("--signal", type=Path, required=True, help="CSV t_s,value")
    dsp_filter.add_argument("--band", type=_band, default="emg", help="ecg, emg or LOW,HIGH")
    dsp_filter.add_argument("--csv", type=Path, required=True, help="output CSV t_s,value")
    envelope = dsp_commands.add_parser(
        "envelope", parents=[shared], help="RMS envelope of a signal"
    )
    envelope.add_argument("--signal", type=Path, required=True, help="CSV t_s,value")
    envelope.add_argument("--window", type=int, help="window in samples")
    envelope.add_argument("--csv", type=Path, required=True, help="output CSV t_s,value")
    ecg = dsp_commands.add_parser(
        "ecg", parents=[shared], help="R peaks, RR intervals and heart rate"
    )
    ecg.add_argument("--signal", type=Path, required=True, help="CSV t_s,value")
    ecg.add_argument("--raw", action="store_true", help="condition the signal first")
    dsp_classify = dsp_commands.add_parser(
        "classify", parents=[shared], help="nearest-reference classification"
    )
    dsp_classify.add_argument(
        "--reference", type=_labelled_path, action="append", required=True, help="LABEL=PATH"
    )
    dsp_classify.add_argument("--query", type=Path, action="append", required=True)
    dsp_classify.add_argument("--metric", choices=[m.value for m in classify.Metric])
    dsp_classify.add_argument("--matrix", type=Path, help="write the distance matrix CSV here")

    rec = commands.add_parser("recycle", parents=[shared], help="ink recipes and recycling ledgers")
    rec_commands = rec.add_subparsers(dest="action", required=True, metavar="ACTION")
    recipe = rec_commands.add_parser(
        "recipe", parents=[shared], help="dry composition of an ink recipe"
    )
    recipe.add_argument("--json", type=Path, help="formulation JSON, defaults to the ink preset")
    recipe.add_argument("--ink", help="packaged recipe name")
    ledger = rec_commands.add_parser(
        "ledger", parents=[shared], help="substrate separation mass balance"
    )
    ledger.add_argument("--input", type=float, required=True, dest="input_g")
    ledger.add_argument("--recovered", type=float, required=True)
    ledger.add_argument("--bound", type=float, required=True)
    ledger.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    wash = rec_commands.add_parser("wash", parents=[shared], help="isopropanol wash mass balance")
    wash.add_argument("--initial", type=float, required=True)
    wash.add_argument("--post-wash", type=float, required=True)
    wash.add_argument("--discarded", type=float, required=True)
    wash.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    retention = rec_commands.add_parser(
        "retention", parents=[shared], help="conductivity retention"
    )
    retention.add_argument("--pristine", type=float, required=True, help="S/m")
    retention.add_argument("--recycled", type=float, required=True, help="S/m")

    repro = commands.add_parser("repro", parents=[shared], help="run the acceptance suite")
    repro.add_argument("--quick", action="store_true", help="reduced sample counts")
    return parser


def _out_dir(args, config: RunConfig) -> Path:
    out = Path(args.out) if args.out is not None else Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_trace(args, config: RunConfig) -> int:
    model = config.electromech.ink_model(args.ink)
    seed = args.seed if args.seed is not None else model.seeds[0] + config.seed
    workers = args.workers or config.electromech.workers
    curve = model.sweep(seed, workers=workers)
    path = args.csv or _out_dir(args, config) / f"curve_{model.ink}.csv"
    write_csv(curve.to_rows(), path, ("strain", "normalized_resistance"))
    print(f"{model.ink} seed {seed}: failure strain {curve.failure_strain}")
    return EXIT_OK


def _logged(samples, log: coldchain.TelemetryLog):
    """
    Yield samples to the monitor and append each one to the log once it has been processed.
    """
    for sample in samples:
        yield sample
        log.append(sample)


def _run_coldchain(args, config: RunConfig) -> int:
    samples = read_signal_csv(args.samples).to_samples()
    if args.log:
        with coldchain.TelemetryLog(args.log) as log:
            result = coldchain.run_trace(_logged(samples, log), config.coldchain)
    else:
        result = coldchain.run_trace(samples, config.coldchain)
    if args.timeline:
        write_csv(
            ((e.epoch_s, e.status.value, e.gap) for e in result.timeline),
            args.timeline,
            ("epoch_s", "status", "gap"),
        )
    if args.telemetry:
        args.telemetry.write_bytes(coldchain.encode_telemetry(result.state))
    leds = coldchain.led_outputs(result.state)
    print(f"status={result.state.status.value}")
    print(f"latched_at={'' if result.state.latched_at is None else result.state.latched_at}")
    print(f"green={'on' if leds.green else 'off'} red={'on' if leds.red else 'off'}")
    return EXIT_OK


def _run_thermistor(args, config: RunConfig) -> int:
    if args.action == "calibrate":
        rows = read_rows(args.points, ("adc_count", "true_temp_c"))
        points = [(float(cells[0]), float(cells[1])) for _, cells in rows]
        curve = thermistor.fit_linear_calibration(points)
        if args.curve:
            curve.save(args.curve)
        sys.stdout.write(curve.to_json())
        return EXIT_OK

    curve = thermistor.CalibrationCurve.load(args.curve)
    counts = [float(cells[0]) for _, cells in read_rows(args.counts, ("adc_count",))]
    readings = [thermistor.temperature_from_adc(count, curve) for count in counts]
    window = args.window or config.thermistor.window_samples
    smoothed = thermistor.moving_average([r.temp_c for r in readings], window)
    rows = [
        (count, reading.temp_c, float(avg), reading.extrapolated)
        for count, reading, avg in zip(counts, readings, smoothed)
    ]
    header = ("adc_count", "temp_c", "temp_smoothed_c", "extrapolated")
    if args.csv:
        write_csv(rows, args.csv, header)
    else:
        print(",".join(header))
        for row in rows:
            print(f"{row[0]!r},{row[1]!r},{row[2]!r},{'true' if row[3] else 'false'}")
    return EXIT_OK


def _load_recording(path: Path, config: RunConfig) -> biosignal.SignalRecording:
    series = read_signal_csv(path, config.biosignal.sample_rate_hz)
    return series.to_recording(config.biosignal.gain)


def _write_signal(path: Path, samples: np.ndarray, sample_rate_hz: float) -> None:
    times = np.arange(samples.size) / sample_rate_hz
    write_csv(zip(times.tolist(), samples.tolist()), path, ("t_s", "value"))


def _run_dsp(args, config: RunConfig) -> int:
    settings = config.biosignal
    if args.action == "filter":
        conditioned = biosignal.condition(_load_recording(args.signal, config), args.band, settings.notch_hz)
        _write_signal(args.csv, conditioned.samples, conditioned.sample_rate_hz)
        return EXIT_OK
    if args.action == "envelope":
        recording = _load_recording(args.signal, config).input_referred()
        env = biosignal.rms_envelope(recording.samples, args.window or settings.envelope_window)
        _write_signal(args.csv, env.values, recording.sample_rate_hz)
        return EXIT_OK
    if args.action == "ecg":
        recording = _load_recording(args.signal, config)
        if args.raw:
            recording = biosignal.condition(recording, settings.ecg_band_hz, settings.notch_hz)
        features = biosignal.detect_r_peaks(recording)
        if not features.sufficient_beats:
            print("insufficient beats")
            return EXIT_OK
        print(f"peaks={len(features.r_peak_indices)}")
        print(f"mean_rr_ms={float(np.mean(features.rr_intervals_ms))!r}")
        print(f"heart_rate_bpm={features.heart_rate_bpm!r}")
        return EXIT_OK

    labels = [label for label, _ in args.reference]
    references = [_load_recording(path, config).samples for _, path in args.reference]
    queries = [_load_recording(path, config).samples for path in args.query]
    result = classify.classify_nearest(queries, references, labels, args.metric or settings.metric)
    for path, label, nearest in zip(args.query, result.labels, result.nearest):
        print(f"{path}: {label} (reference {nearest})")
    if args.matrix:
        write_csv(result.matrix.to_rows(), args.matrix)
    return EXIT_OK


def _print_ledger(ledger: recycle.MassLedger, as_json: bool) -> None:
    sys.stdout.write(ledger.to_json() if as_json else ledger.table())


def _run_recycle(args, config: RunConfig) -> int:
    if args.action == "recipe":
        if args.json:
            formulation = recycle.InkFormulation.from_dict(
                json.loads(args.json.read_text(encoding="utf-8"))
            )
        else:
            formulation = recycle.InkFormulation.preset(args.ink or config.recycle.ink)
        fraction = recycle.ag_dry_weight_fraction(formulation)
        for name, grams in recycle.dry_composition(formulation).items():
            print(f"{name}={grams:.3f}")
        print(f"ag_dry_weight_fraction={100 * fraction:.2f}%")
        print(
            "ipa_required_g="
            f"{recycle.ipa_required(formulation.wet_mass_g, config.recycle.ipa_ratio, config.recycle.ipa_washes):.2f}"
        )
        return EXIT_OK
    if args.action == "ledger":
        _print_ledger(recycle.separation_ledger(args.input_g, args.recovered, args.bound), args.json)
        return EXIT_OK
    if args.action == "wash":
        _print_ledger(recycle.wash_ledger(args.initial, args.post_wash, args.discarded), args.json)
        return EXIT_OK
    report = recycle.conductivity_retention(args.pristine, args.recycled)
    print(f"retention={report.retention_fraction:.4f}")
    print(f"decay={100 * report.decay_fraction:.2f}%")
    return EXIT_OK


def _run_repro(args, config: RunConfig) -> int:
    outcome = run_repro(config, _out_dir(args, config), quick=args.quick)
    for row in outcome.rows:
        print(f"{row.number:>2} {row.status} {row.name}: {row.observed} (expected {row.expected})")
    print(f"report written to {outcome.artifacts[0].parent / REPORT_FILENAME}")
    return EXIT_OK if outcome.passed else EXIT_VALIDATION


_HANDLERS = {
    "trace": _run_trace,
    "coldchain": _run_coldchain,
    "thermistor": _run_thermistor,
    "dsp": _run_dsp,
    "recycle": _run_recycle,
    "repro": _run_repro,
}


def dispatch(argv: Union[Sequence[str], None] = None) -> int:
    """
    Parse arguments, run the subcommand and map errors to exit codes.

    Args:
        argv (Sequence[str], optional): Arguments without the program name; sys.argv[1:]
                                        by default.

    Returns:
        int: 0 success, 1 usage, 2 invalid input or failed check, 3 file system error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exit_request:
        # --help and --version
        return int(exit_request.code or 0)

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        config = parse_config(args.config)
        return _HANDLERS[args.command](args, config)
    except OSError as err:
        logger.error("%s", err)
        return EXIT_IO
    except (ValidationError, ValueError) as err:
        logger.error("%s", err)
        return EXIT_VALIDATION


def main(argv: Union[List[str], None] = None) -> None:
    sys.exit(dispatch(argv))
