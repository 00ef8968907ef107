import json

import pytest

import main


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    monkeypatch.setenv('NORMSCOPE_CONFIG', str(tmp_path / 'config.json'))
    monkeypatch.delenv('NORMSCOPE_SEED', raising=False)


def test_analyze_euclidean_to_stdout(capsys):
    code = main.main(['analyze', '--norm', 'p:2', '--dim', '2', '--seed', '1'])
    out = capsys.readouterr().out
    assert code == 0
    data = json.loads(out)
    assert data['verdict']['euclidean'] is True
    assert data['norm_spec_string'] == 'p:2'
    assert data['timings'] == {}


def test_analyze_is_byte_deterministic(tmp_path):
    first = tmp_path / 'a.json'
    second = tmp_path / 'b.json'
    assert main.main(['analyze', '--norm', 'p:1', '--dim', '2', '--seed', '42', '--out', str(first)]) == 1
    assert main.main(['analyze', '--norm', 'p:1', '--dim', '2', '--seed', '42', '--out', str(second)]) == 1
    assert first.read_bytes() == second.read_bytes()
    assert json.loads(first.read_text())['verdict']['witness']['kind'] == 'aronszajn'


def test_seed_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv('NORMSCOPE_SEED', '17')
    assert main.main(['analyze', '--norm', 'p:2']) == 0
    assert json.loads(capsys.readouterr().out)['seed'] == 17


def test_parse_error_exits_2_with_error_object(capsys):
    code = main.main(['analyze', '--norm', 'p:nonsense'])
    err = capsys.readouterr().err
    assert code == 2
    error = json.loads(err.strip().splitlines()[-1])['error']
    assert error['type'] == 'NormSpecError'
    assert error['token'] == 'nonsense'
    assert error['position'] == 2


def test_other_errors_exit_2(capsys):
    assert main.main(['analyze', '--norm', 'poly:1,0;0,1', '--dim', '3']) == 2
    assert main.main(['render', '--norm', 'p:2', '--dim', '3', '--out', 'unused.svg']) == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])['error']
    assert error['type'] == 'ValueError'
    assert '--section' in error['message']


def test_search_commands(capsys):
    assert main.main(['search', '--norm', 'p:1', '--restarts', '50']) == 1
    data = json.loads(capsys.readouterr().out)
    assert data['certificate']['kind'] == 'aronszajn'
    assert main.main(['search', '--norm', 'p:2', '--restarts', '4']) == 0
    assert json.loads(capsys.readouterr().out)['certificate'] is None


def test_search_on_section_records_subspace(capsys):
    assert main.main(['search', '--norm', 'p:inf', '--dim', '3', '--section', '0,2', '--restarts', '50']) == 1
    cert = json.loads(capsys.readouterr().out)['certificate']
    assert cert['subspace'] == [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]


def test_render_with_witness(tmp_path):
    report = tmp_path / 'report.json'
    figure = tmp_path / 'fig.svg'
    assert main.main(['analyze', '--norm', 'p:1', '--seed', '3', '--out', str(report)]) == 1
    assert main.main(['render', '--norm', 'p:1', '--witness', str(report), '--out', str(figure)]) == 0
    svg = figure.read_text(encoding='utf-8')
    assert svg.startswith('<?xml')
    assert svg.count('<text') == 8
    assert not list(tmp_path.glob('.fig.svg.*'))
