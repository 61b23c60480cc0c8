import json

import numpy as np
import pytest

from softcircuit.cli import dispatch, main
from softcircuit.coldchain import replay_log
from softcircuit.csvio import write_csv
from softcircuit.thermistor import DividerConfig, NtcParams, calibration_points


def _write_signal(path, samples, sample_rate_hz=250.0):
    times = [i / sample_rate_hz for i in range(len(samples))]
    write_csv(zip(times, list(samples)), path, ("t_s", "value"))


def test_help_and_usage_errors(capsys):
    assert dispatch(["--help"]) == 0
    assert "COMMAND" in capsys.readouterr().out
    assert dispatch([]) == 1
    assert dispatch(["bogus"]) == 1
    assert dispatch(["recycle", "ledger", "--input", "100"]) == 1
    assert dispatch(["dsp", "filter", "--signal", "x.csv", "--band", "low", "--csv", "y.csv"]) == 1


def test_main_exits_with_dispatch_code():
    with pytest.raises(SystemExit) as exit_info:
        main(["bogus"])
    assert exit_info.value.code == 1


def test_recycle_recipe(capsys):
    assert dispatch(["recycle", "recipe"]) == 0
    out = capsys.readouterr().out
    assert "ag_dry_weight_fraction=89.18%" in out
    assert "ipa_required_g=117.40" in out
    assert dispatch(["recycle", "recipe", "--ink", "ag_egain_wpu"]) == 0
    assert "ag_dry_weight_fraction=38.08%" in capsys.readouterr().out


def test_recycle_recipe_from_json(tmp_path, capsys):
    path = tmp_path / "recipe.json"
    path.write_text(json.dumps({"ag_mass_g": 4.12, "wpu_dispersion_mass_g": 1.25}))
    assert dispatch(["recycle", "recipe", "--json", str(path)]) == 0
    assert "ag_dry_weight_fraction=89.18%" in capsys.readouterr().out
    path.write_text(json.dumps({"ag_mass_g": 4.12, "copper_g": 1.0}))
    assert dispatch(["recycle", "recipe", "--json", str(path)]) == 2


def test_recycle_ledgers(capsys):
    assert dispatch(["recycle", "ledger", "--input", "100", "--recovered", "91.18", "--bound", "1.04"]) == 0
    out = capsys.readouterr().out
    lost = [line for line in out.splitlines() if line.startswith("lost")]
    assert "7.78 g" in lost[0]
    assert dispatch(
        ["recycle", "wash", "--initial", "12", "--post-wash", "9.62", "--discarded", "0.73", "--json"]
    ) == 0
    data = json.loads(capsys.readouterr().out)
    assert abs(data["outputs"][0]["mass_g"] - 8.89) < 1e-9
    assert dispatch(["recycle", "wash", "--initial", "12", "--post-wash", "13", "--discarded", "0.73"]) == 2


def test_recycle_retention(capsys):
    assert dispatch(["recycle", "retention", "--pristine", "1.16e5", "--recycled", "1.13e5"]) == 0
    out = capsys.readouterr().out
    assert "retention=0.9741" in out
    assert "decay=2.59%" in out


def test_coldchain_run(tmp_path, capsys):
    samples = tmp_path / "label.csv"
    write_csv([(t, 7.0) for t in range(0, 3601, 60)], samples, ("epoch_s", "temp_c"))
    telemetry = tmp_path / "label.bin"
    timeline = tmp_path / "timeline.csv"
    assert dispatch(
        ["coldchain", "run", "--samples", str(samples), "--telemetry", str(telemetry), "--timeline", str(timeline)]
    ) == 0
    out = capsys.readouterr().out
    assert "status=UNSAFE_LATCHED" in out
    assert "latched_at=3600" in out
    assert "green=off red=on" in out
    assert telemetry.read_bytes().startswith(b"SMARTLABEL v1\nstatus=UNSAFE\n0,7000\n")
    lines = timeline.read_text().splitlines()
    assert lines[0] == "epoch_s,status,gap"
    assert lines[-1] == "3600,UNSAFE_LATCHED,false"


def test_missing_input_is_io_error(tmp_path):
    assert dispatch(["coldchain", "run", "--samples", str(tmp_path / "missing.csv")]) == 3


def test_invalid_config_is_validation_error(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"coldchain": {"threshold": 5}}))
    assert dispatch(["--config", str(config), "recycle", "recipe"]) == 2


def test_thermistor_calibrate_and_convert(tmp_path, capsys):
    points = tmp_path / "points.csv"
    write_csv(calibration_points(NtcParams(), DividerConfig()), points, ("adc_count", "true_temp_c"))
    curve = tmp_path / "curve.json"
    assert dispatch(["thermistor", "calibrate", "--points", str(points), "--curve", str(curve)]) == 0
    fitted = json.loads(capsys.readouterr().out)
    assert fitted["slope"] < 0
    assert fitted["fit_range"] == [25.0, 50.0]
    assert json.loads(curve.read_text()) == fitted

    counts = tmp_path / "counts.csv"
    write_csv([(512,), (512,), (400,)], counts, ("adc_count",))
    out_csv = tmp_path / "temps.csv"
    assert dispatch(
        ["thermistor", "convert", "--curve", str(curve), "--counts", str(counts), "--window", "2", "--csv", str(out_csv)]
    ) == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "adc_count,temp_c,temp_smoothed_c,extrapolated"
    assert len(lines) == 4
    assert abs(float(lines[1].split(",")[1]) - 25.0) < 1.0


def test_dsp_ecg(tmp_path, capsys):
    samples = np.zeros(160 * 11)
    samples[80::160][:10] = 1.0
    path = tmp_path / "ecg.csv"
    _write_signal(path, samples)
    assert dispatch(["dsp", "ecg", "--signal", str(path)]) == 0
    out = capsys.readouterr().out
    assert "peaks=10" in out
    assert "mean_rr_ms=640.0" in out
    assert "heart_rate_bpm=93.75" in out


def test_dsp_filter_and_envelope(tmp_path):
    t = np.arange(500) / 250.0
    path = tmp_path / "emg.csv"
    _write_signal(path, 24.0 * np.sin(2 * np.pi * 30.0 * t))
    filtered = tmp_path / "filtered.csv"
    assert dispatch(["dsp", "filter", "--signal", str(path), "--band", "emg", "--csv", str(filtered)]) == 0
    assert len(filtered.read_text().splitlines()) == 501
    envelope = tmp_path / "envelope.csv"
    assert dispatch(["dsp", "envelope", "--signal", str(path), "--window", "25", "--csv", str(envelope)]) == 0
    last = float(envelope.read_text().splitlines()[-1].split(",")[1])
    assert abs(last - 1 / np.sqrt(2)) < 0.05


def test_dsp_classify(tmp_path, capsys):
    rest = tmp_path / "rest.csv"
    fist = tmp_path / "fist.csv"
    query = tmp_path / "query.csv"
    _write_signal(rest, [0.0] * 20)
    _write_signal(fist, [5.0] * 20)
    _write_signal(query, [4.5] * 18 + [6.0] * 2)
    matrix = tmp_path / "matrix.csv"
    assert dispatch(
        [
            "dsp", "classify",
            "--reference", f"rest={rest}",
            "--reference", f"fist={fist}",
            "--query", str(query),
            "--matrix", str(matrix),
        ]
    ) == 0
    assert "fist (reference 1)" in capsys.readouterr().out
    assert matrix.read_text().splitlines()[0] == ",query_0,rest_0,fist_1"
    assert dispatch(["dsp", "classify", "--reference", "rest", "--query", str(query)]) == 1


def test_trace(tmp_path, capsys):
    curve = tmp_path / "curve.csv"
    assert dispatch(["trace", "--ink", "ag_wpu", "--seed", "1", "--csv", str(curve)]) == 0
    lines = curve.read_text().splitlines()
    assert lines[0] == "strain,normalized_resistance"
    assert lines[1] == "0.0,1.0"
    assert len(lines) == 122
    assert "ag_wpu seed 1" in capsys.readouterr().out
    assert dispatch(["trace", "--ink", "copper"]) == 2


def test_shared_options_after_the_subcommand(tmp_path, capsys):
    samples = tmp_path / "label.csv"
    write_csv([(t, 6.0) for t in range(0, 1801, 60)], samples, ("epoch_s", "temp_c"))
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"coldchain": {"latch_duration_s": 1800}}))
    assert dispatch(["coldchain", "run", "--samples", str(samples), "--config", str(config)]) == 0
    assert "status=UNSAFE_LATCHED" in capsys.readouterr().out
    assert dispatch(["coldchain", "run", "--samples", str(samples)]) == 0
    assert "status=SAFE" in capsys.readouterr().out

    config.write_text(json.dumps({"coldchain": {"threshold": 5}}))
    assert dispatch(["recycle", "recipe", "--config", str(config)]) == 2
    assert dispatch(["recycle", "--config", str(config), "recipe"]) == 2
    assert dispatch(["-v", "recycle", "recipe", "-v"]) == 0


def test_configured_preset_keys_reach_the_trace(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(
        json.dumps({"electromech": {"rows": 8, "cols": 8, "occupancy": 1.0, "strain_step": 0.05}})
    )
    curve = tmp_path / "curve.csv"
    assert dispatch(["trace", "--seed", "1", "--csv", str(curve), "--config", str(config)]) == 0
    assert len(curve.read_text().splitlines()) == 14
    assert "ag_wpu seed 1" in capsys.readouterr().out


def test_coldchain_log_replays_the_processed_samples(tmp_path):
    rows = [(t, 4.0 + t / 1000) for t in range(0, 3001, 300)]
    samples = tmp_path / "label.csv"
    write_csv(rows, samples, ("epoch_s", "temp_c"))
    log = tmp_path / "label.log"
    assert dispatch(["coldchain", "run", "--samples", str(samples), "--log", str(log)]) == 0
    replayed = replay_log(log)
    assert [(s.epoch_s, s.temp_c) for s in replayed] == [(t, pytest.approx(c)) for t, c in rows]
    assert log.read_text().endswith("\n")
