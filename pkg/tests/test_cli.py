import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from hear.cli import cli
from hear.services.recording_service import RecordingService
from hear.services.stream_service import HANDSHAKE, StreamService

SIMULATE = ['simulate', '--seed', '4', '--subjects', '1', '--rest-trials', '3',
            '--reach-trials', '3', '--electrodes', '8', '--jobs', '1']


@pytest.fixture(scope='module')
def study_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp('study')
    result = CliRunner().invoke(cli, SIMULATE + ['--out', str(out)])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope='module')
def model_path(study_dir):
    path = study_dir / 'model.json'
    result = CliRunner().invoke(cli, [
        'calibrate', '--montage', str(study_dir / 'montage.txt'),
        '--input', str(study_dir / 'sub-00_rest.rec'), '--output', str(path),
    ])
    assert result.exit_code == 0, result.output
    return path


def test_simulate_writes_the_study(study_dir):
    names = set(os.listdir(study_dir))
    assert {'montage.txt', 'sub-00_rest.rec', 'sub-00_reach.rec',
            'sub-00_reach_clean.rec', 'sub-00_events.jsonl'} <= names
    reach = RecordingService.read_recording(str(study_dir / 'sub-00_reach.rec'))
    assert reach.header.n_channels == 8
    assert len(reach.header.trials) == 3


def test_simulate_is_deterministic(runner, tmp_path, study_dir):
    result = runner.invoke(cli, SIMULATE + ['--out', str(tmp_path)])
    assert result.exit_code == 0
    for name in ('sub-00_reach.rec', 'sub-00_events.jsonl', 'montage.txt'):
        assert (tmp_path / name).read_bytes() == (study_dir / name).read_bytes()


def test_calibrate_writes_a_model(model_path):
    document = json.loads(model_path.read_text())
    assert document['format_version'] == 1
    assert len(document['mu_s2']) == 8
    assert document['montage_fingerprint']


def correct(runner, study_dir, model_path, mode, output, *extra):
    return runner.invoke(cli, [
        'correct', '--montage', str(study_dir / 'montage.txt'), '--model', str(model_path),
        '--input', str(study_dir / 'sub-00_reach.rec'), '--output', str(output),
        '--mode', mode, '--reset-per-trial', *extra,
    ])


def test_online_and_offline_agree_where_nothing_is_corrected(runner, tmp_path, study_dir, model_path):
    for mode in ('online', 'offline'):
        result = correct(runner, study_dir, model_path, mode, tmp_path / f'{mode}.rec',
                         '--probabilities', str(tmp_path / f'{mode}_p.rec'))
        assert result.exit_code == 0, result.output

    online = RecordingService.read_recording(str(tmp_path / 'online.rec')).data
    offline = RecordingService.read_recording(str(tmp_path / 'offline.rec')).data
    p_online = RecordingService.read_recording(str(tmp_path / 'online_p.rec'))
    p_offline = RecordingService.read_recording(str(tmp_path / 'offline_p.rec'))
    assert p_online.header.labels[0].startswith('p_art:')
    assert p_online.header.n_channels == 16

    quiet = (p_online.data[:8] < 1e-9) & (p_offline.data[:8] < 1e-9)
    assert quiet.any()
    np.testing.assert_allclose(online[quiet], offline[quiet], atol=1e-3)


def test_evaluate_clean_against_itself(runner, study_dir):
    result = runner.invoke(cli, [
        'evaluate', '--clean', str(study_dir / 'sub-00_reach_clean.rec'),
        '--corrected', str(study_dir / 'sub-00_reach_clean.rec'),
        '--events', str(study_dir / 'sub-00_events.jsonl'), '--label', 'identity',
    ])
    assert result.exit_code == 0, result.output
    records = [json.loads(line) for line in result.stdout.splitlines() if line.strip()]
    snr = {record['metric']: record['value'] for record in records if record['metric'].startswith('snr')}
    assert snr['snr_clean_db'] == '+inf'
    assert all(value == '+inf' for value in snr.values())
    assert all(record['config'] == 'identity' and record['subject'] == 0 for record in records)


def test_detect_lists_flagged_trials(runner, tmp_path):
    trials = np.random.default_rng(2).normal(size=(4, 2, 100))
    trials[1, 0, 5] = 400.0
    path = tmp_path / 'trials.rec'
    RecordingService.write_trials(str(path), trials, 200.0, ['A', 'B'])
    result = runner.invoke(cli, ['detect', '--input', str(path)])
    assert result.exit_code == 0, result.output
    assert [json.loads(line) for line in result.stdout.splitlines()] == [
        {'trial': 1, 'criteria': ['amplitude']}
    ]


def test_missing_input_exits_with_usage_status(runner, tmp_path, study_dir):
    result = runner.invoke(cli, [
        'calibrate', '--montage', str(study_dir / 'montage.txt'),
        '--input', str(tmp_path / 'missing.rec'), '--output', str(tmp_path / 'model.json'),
    ])
    assert result.exit_code == 2
    assert 'NotFoundError' in result.stderr


def test_montage_order_must_match_the_recording(runner, tmp_path, study_dir, model_path):
    lines = (study_dir / 'montage.txt').read_text().splitlines()
    swapped = tmp_path / 'swapped.txt'
    swapped.write_text('\n'.join([lines[0], lines[2], lines[1]] + lines[3:]) + '\n')
    result = runner.invoke(cli, [
        'correct', '--montage', str(swapped), '--model', str(model_path),
        '--input', str(study_dir / 'sub-00_reach.rec'), '--output', str(tmp_path / 'out.rec'),
    ])
    assert result.exit_code == 2
    assert 'FingerprintMismatch' in result.stderr


def test_stream_command(runner, study_dir, model_path):
    frames = np.zeros((5, 8))
    payload = StreamService.handshake(8) + StreamService.encode_frames(frames)
    result = runner.invoke(cli, [
        'stream', '--montage', str(study_dir / 'montage.txt'), '--model', str(model_path),
    ], input=payload)
    assert result.exit_code == 0, result.stderr
    output = result.stdout_bytes
    assert output[:HANDSHAKE.size] == StreamService.handshake(8)
    assert np.all(np.frombuffer(output[HANDSHAKE.size:], dtype='<f4') == 0.0)


def test_unknown_option_is_a_usage_error(runner):
    result = runner.invoke(cli, ['correct', '--bogus'])
    assert result.exit_code == 2
