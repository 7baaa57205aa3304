import io
import json
import os
import shutil
from fractions import Fraction

import pandas as pd
import pytest

from cdc_shuffle.core.config_loader import ShuffleSettings
from cdc_shuffle.core.exceptions import InstanceValidationError
from cdc_shuffle.core.instance import SystemInstance
from cdc_shuffle.reporting.goldens import golden_ids, run_goldens
from cdc_shuffle.reporting.reports import build_load_report, parse_schemes, render_load
from cdc_shuffle.reporting.sweep import CSV_COLUMNS, SweepConfig, run_sweep, sample_seed, sweep_means, write_sweep_csv
from scripts.shuffle_cli import EXIT_GOLDEN_MISMATCH, EXIT_INVALID, EXIT_OK, main

from conftest import DATA_DIR

F = Fraction


@pytest.fixture
def env_file(tmp_path, clean_env):
    path = tmp_path / ".env"
    path.write_text(f"LOG_LEVEL=WARNING\nCDC_LOG_DIR={tmp_path / 'logs'}\nCDC_SEED=3\n")
    return str(path)


def _cli(env_file, *args):
    return main(['--env-file', env_file, *args])


# ------------------------------------------------------------------ reports

def test_render_load():
    assert render_load(F(35, 56), 56) == {"rational": "5/8", "decimal": 0.625, "over_QN": "35/56"}
    assert "over_QN" not in render_load(F(40, 63), 42)


def test_parse_schemes():
    assert parse_schemes(None) == ['uncoded', 'osct', 'fsct']
    assert parse_schemes(" OSCT , fsct") == ['osct', 'fsct']
    with pytest.raises(ValueError, match="Unknown schemes"):
        parse_schemes("osct,magic")


def test_analytic_report(example2):
    report = build_load_report(example2, verify=False).to_dict()
    loads = report["loads"]
    assert loads["osct"]["rational"] == "2/3" and loads["osct"]["over_QN"] == "28/42"
    assert loads["fsct"]["rational"] == loads["lower_bound"]["rational"] == "40/63"
    assert loads["uncoded"]["over_QN"] == "44/42"
    assert report["theorem2_optimal"] is False
    assert report["theorem4_optimal"] is True
    assert report["decode_verified"] is False


def test_verified_report_writes_transcript(example1, tmp_path):
    path = tmp_path / "t.jsonl"
    report = build_load_report(example1, ['osct'], ShuffleSettings(seed=1), transcript_path=str(path))
    assert report.loads == {"lower_bound": F(35, 56), "osct": F(35, 56)}
    assert report.decode_verified is True
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert records and {r["scheme"] for r in records} == {"osct"}


def test_report_transcript_holds_every_scheme_in_order(example2, tmp_path):
    path = tmp_path / "t.jsonl"
    build_load_report(example2, ['osct', 'fsct'], ShuffleSettings(seed=1), transcript_path=str(path))
    schemes = [json.loads(line)["scheme"] for line in path.read_text().splitlines()]
    assert set(schemes) == {"osct", "fsct"}
    assert schemes == sorted(schemes, key=["osct", "fsct"].index)


def test_report_rejects_invalid_instance():
    inst = SystemInstance.create(2, 2, 1, [[1], [1]], [[1], []])
    with pytest.raises(InstanceValidationError, match="file 2 unmapped"):
        build_load_report(inst, verify=False)


# -------------------------------------------------------------------- sweep

def test_small_sweep_layout():
    config = SweepConfig(d_grid=[F(0), F(1, 8)], samples=2, N=8, Q=8, seed=4)
    frame = run_sweep(config)
    assert list(frame.columns) == CSV_COLUMNS
    assert frame['sample'].tolist() == [0, 1, 'mean', 0, 1, 'mean']
    means = sweep_means(frame)
    assert list(means.index) == [0.0, 0.125]
    samples = frame[frame['sample'] != 'mean']
    for column in ('osct', 'fsct'):
        assert (samples['lower_bound'] <= samples[column] + 1e-12).all()

    buffer = io.StringIO()
    write_sweep_csv(frame, buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 7


def test_sweep_is_deterministic():
    config = SweepConfig(d_grid=[F(1, 16)], samples=3, N=8, Q=8, seed=9)
    pd.testing.assert_frame_equal(run_sweep(config), run_sweep(config))
    assert sample_seed(9, 0, 1) != sample_seed(9, 0, 2)


def test_empty_sweep_is_header_only():
    frame = run_sweep(SweepConfig(d_grid=[], samples=3))
    buffer = io.StringIO()
    write_sweep_csv(frame, buffer)
    assert buffer.getvalue().strip() == ",".join(CSV_COLUMNS)


def test_sweep_config_from_dict():
    config = SweepConfig.from_dict({"d_grid": ["0", "1/4"], "samples": 7})
    assert config.d_grid == [F(0), F(1, 4)]
    assert (config.samples, config.K, config.N) == (7, 4, 64)
    assert SweepConfig.from_dict(config.to_dict()) == config


@pytest.mark.slow
def test_default_sweep_bias_trend():
    grid = [F(0), F(8, 64), F(16, 64), F(24, 64), F(31, 64)]
    means = sweep_means(run_sweep(SweepConfig(d_grid=grid, samples=50, workers=4)))
    assert list(means.index) == [float(d) for d in grid]
    start, end = means.iloc[0], means.iloc[-1]
    assert start['osct'] <= 0.75 * start['uncoded']
    assert start['fsct'] <= 0.75 * start['uncoded']
    for column in ('lower_bound', 'uncoded', 'osct', 'fsct'):
        assert (means[column].diff().dropna() >= -0.02).all(), column
        assert (means[column] >= means['lower_bound'] - 1e-12).all(), column
    # coded loads stay well below per-requester unicast at the largest bias
    assert end['osct'] <= 0.55 * end['uncoded']
    assert end['fsct'] <= end['uncoded']
    # feasible nodes with a negative deficit keep FSCT above OSCT here
    assert end['fsct'] - end['osct'] > 0.2


# ---------------------------------------------------------------------- CLI

def test_cli_run(env_file, capsys):
    assert _cli(env_file, 'run', os.path.join(DATA_DIR, 'example1.json')) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["loads"]["osct"] == {"rational": "5/8", "decimal": 0.625, "over_QN": "35/56"}
    assert report["theorem2_optimal"] is True
    assert report["decode_verified"] is True


def test_cli_run_without_verification(env_file, capsys):
    assert _cli(env_file, 'run', os.path.join(DATA_DIR, 'example2.json'), '--no-verify', '--schemes', 'fsct') == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert set(report["loads"]) == {"lower_bound", "fsct"}
    assert report["decode_verified"] is False


def test_cli_run_rejects_bad_input(env_file, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"K": 2, "N": 2, "Q": 1, "placement": [[1], [1]], "assignment": [[1], []]}))
    assert _cli(env_file, 'run', str(bad)) == EXIT_INVALID
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert _cli(env_file, 'run', str(broken)) == EXIT_INVALID
    assert _cli(env_file, 'run', str(bad), '--schemes', 'nope') == EXIT_INVALID
    assert capsys.readouterr().out == ""


def test_cli_goldens(env_file, capsys):
    assert _cli(env_file, 'goldens', '--list') == EXIT_OK
    assert capsys.readouterr().out.split() == golden_ids()

    assert _cli(env_file, 'goldens') == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[-1] == f"{len(golden_ids())} passed, 0 failed"


def test_cli_goldens_report_mismatches(env_file, tmp_path, capsys):
    shutil.copy(os.path.join(DATA_DIR, 'example2.json'), tmp_path / 'example1.json')
    shutil.copy(os.path.join(DATA_DIR, 'example2.json'), tmp_path / 'example2.json')
    assert _cli(env_file, 'goldens', '--data-dir', str(tmp_path)) == EXIT_GOLDEN_MISMATCH
    out = capsys.readouterr().out
    assert "FAIL example1.loads: lower bound" in out
    assert "PASS example2.loads" in out

    passed, failures = run_goldens(data_dir=str(tmp_path))
    assert "example1.alpha" in failures and "three_node.dominant" in passed


def test_cli_gen(env_file, tmp_path, capsys):
    desc = tmp_path / "desc.json"
    desc.write_text(json.dumps({"kind": "homogeneous", "K": 3, "r": 2, "s": 1, "N": 3, "Q": 3}))
    assert _cli(env_file, 'gen', str(desc)) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert (doc["K"], doc["N"], doc["Q"]) == (3, 3, 3)
    assert SystemInstance.from_dict(doc).r_min == 2

    desc.write_text(json.dumps({"kind": "homogeneous", "K": 3}))
    assert _cli(env_file, 'gen', str(desc)) == EXIT_INVALID


def test_cli_sweep_reads_and_saves_config(env_file, tmp_path, capsys):
    config = tmp_path / "sweep.json"
    config.write_text(json.dumps({"d_grid": ["0"], "samples": 2, "N": 8, "Q": 8, "seed": 4}))
    saved = tmp_path / "effective.json"
    assert _cli(env_file, 'sweep', str(config), '--samples', '1', '--save-config', str(saved)) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    effective = SweepConfig.from_dict(json.loads(saved.read_text()))
    assert (effective.samples, effective.N, effective.d_grid) == (1, 8, [F(0)])


def test_cli_sweep_rejects_bad_config(env_file, tmp_path, capsys):
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert _cli(env_file, 'sweep', str(broken)) == EXIT_INVALID
    assert _cli(env_file, 'sweep', str(tmp_path / "missing.json")) == EXIT_INVALID
    broken.write_text("[1, 2]")
    assert _cli(env_file, 'sweep', str(broken)) == EXIT_INVALID
    assert capsys.readouterr().out == ""
