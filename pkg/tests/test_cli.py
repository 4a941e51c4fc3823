import json

import pytest

from RTBContracts.__main__ import build_context, main
from RTBContracts.errors import ConfigurationError
from RTBContracts.options import config_from_dict


@pytest.fixture
def small_run(tmp_path):
    contracts = [
        {'id': 'a', 'deadline_hours': 10, 'requirement': 50, 'targeting': ['3']},
        {'id': 'b', 'deadline_hours': 8, 'requirement': 30, 'targeting': ['3', '5']},
    ]
    (tmp_path / 'contracts.json').write_text(json.dumps(contracts))
    config = {
        'contracts': 'contracts.json',
        'curves': {'kind': 'synthetic', 'resolution': 128},
        'windows': {'length': 12, 'stride': 6, 'count': 2, 'repeats': 1},
        'seed': 2,
        'out': 'results',
    }
    path = tmp_path / 'run.json'
    path.write_text(json.dumps(config))
    return str(path)


def test_usage_error_exit_code():
    assert main(['frobnicate']) == 3
    assert main(['plan', '--method', 'simplex']) == 3


def test_bad_config_exit_code(tmp_path):
    assert main(['plan', '--config', str(tmp_path / 'missing.json')]) == 3


def test_plan_command(small_run, tmp_path, capsys):
    assert main(['plan', '--config', small_run]) == 0
    doc = json.loads((tmp_path / 'results' / 'plan.json').read_text())
    assert doc['breakpoints_hours'][-1] == pytest.approx(10.0)
    assert all(row['passed'] for row in doc['adequate_supply'])
    assert sum(doc['shortfall']) == pytest.approx(0.0)
    assert 'plan.json' in capsys.readouterr().out


def test_static_plan_command(small_run, tmp_path):
    out = tmp_path / 'static'
    assert main(['plan', '--config', small_run, '--static', '--out', str(out)]) == 0
    assert (out / 'plan.json').exists()


def test_strict_infeasible_exit_code(tmp_path):
    contracts = [{'id': 1, 'deadline_hours': 5, 'requirement': 1e9, 'targeting': ['3']}]
    (tmp_path / 'huge.json').write_text(json.dumps(contracts))
    (tmp_path / 'run.json').write_text(json.dumps({'contracts': 'huge.json', 'curves': {'resolution': 128}}))
    config = str(tmp_path / 'run.json')
    assert main(['plan', '--config', config, '--strict', '--out', str(tmp_path / 'p')]) == 2
    assert main(['plan', '--config', config, '--out', str(tmp_path / 'p')]) == 0


def test_simulate_and_compare(small_run, tmp_path, capsys):
    assert main(['simulate', '--config', small_run, '--both']) == 0
    results = tmp_path / 'results'
    for name in ('config.json', 'runs.csv', 'aggregate.json', 'normalized.csv', 'comparison.csv'):
        assert (results / name).exists()
    aggregate = json.loads((results / 'aggregate.json').read_text())
    assert aggregate['base_seed'] == 2
    assert len(aggregate['config_hash']) == 64
    assert set(aggregate['policies']) == {'dynamic', 'static'}
    assert (results / 'runs' / 'dynamic_w01_r0' / 'events.csv').exists()

    capsys.readouterr()
    assert main(['compare', str(results), str(results), '--policy-a', 'static', '--policy-b', 'static',
                 '--bootstrap', '50']) == 0
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report['pairs'] == 2
    assert report['relative_difference'] == 0.0
    # both policies in one directory must be told apart
    assert main(['compare', str(results), str(results)]) == 3


def test_compare_missing_dir(tmp_path):
    assert main(['compare', str(tmp_path / 'a'), str(tmp_path / 'b')]) == 3


def test_context_from_curve_files(tmp_path):
    from RTBContracts.scenario import SyntheticMarketSpec, atom_curves
    from RTBContracts.supply import save_curve

    _, planning = atom_curves(SyntheticMarketSpec(resolution=128))
    files = {}
    for atom in ('3', '5'):
        save_curve(planning[atom], str(tmp_path / ('%s.json' % atom)))
        files[atom] = '%s.json' % atom
    contracts = [{'id': 1, 'deadline_hours': 10, 'requirement': 20, 'targeting': ['3', '5']}]
    (tmp_path / 'c.json').write_text(json.dumps(contracts))
    cfg = config_from_dict({'contracts': 'c.json', 'curves': {'kind': 'curves', 'files': files}}, str(tmp_path))
    ctx = build_context(cfg)
    assert ctx.decomposition.n_types == 1
    assert ctx.sampler.n_types == 1
    assert ctx.origin == 0.0


def write_log(tmp_path):
    rows = ['timestamp,user_tag,market_price']
    for k in range(6000):
        # one auction every 90 s for 150 h, two tags alternating
        rows.append('%d,%s,%d' % (90 * k, '3' if k % 2 else '5', 10 + (k * 37) % 80))
    path = tmp_path / 'log.csv'
    path.write_text('\n'.join(rows) + '\n')
    return str(path)


def test_estimate_command(tmp_path):
    log = write_log(tmp_path)
    out = tmp_path / 'curves'
    assert main(['estimate', '--log', log, '--out', str(out), '--resolution', '128']) == 0
    assert (out / '3.json').exists() and (out / '5.json').exists()
    report = json.loads((out / 'estimate_report.json').read_text())
    assert [r['atoms'] for r in report] == [['3'], ['5']]

    contracts = [{'id': 1, 'deadline_hours': 10, 'requirement': 20, 'targeting': ['3', '5']}]
    (tmp_path / 'c.json').write_text(json.dumps(contracts))
    pooled = tmp_path / 'pooled'
    assert main(['estimate', '--log', log, '--contracts', str(tmp_path / 'c.json'), '--out', str(pooled),
                 '--resolution', '128']) == 0
    assert (pooled / '3_5.json').exists()
    assert main(['estimate', '--log', str(tmp_path / 'none.csv'), '--out', str(pooled)]) == 3


def test_context_from_log(tmp_path):
    write_log(tmp_path)
    contracts = [{'id': 1, 'deadline_hours': 10, 'requirement': 20, 'targeting': ['3', '5']}]
    (tmp_path / 'c.json').write_text(json.dumps(contracts))
    doc = {'contracts': 'c.json', 'curves': {'kind': 'log', 'log': 'log.csv', 'train_fraction': 0.5,
                                             'resolution': 128},
           'windows': {'length': 12, 'stride': 12, 'count': 2, 'repeats': 1}}
    ctx = build_context(config_from_dict(doc, str(tmp_path)))
    assert ctx.origin == pytest.approx(75.0, abs=1.0)
    assert len(ctx.planning_curves) == 1
    assert ctx.planning_curves[0].period_hours == 24.0

    doc['windows']['count'] = 10
    with pytest.raises(ConfigurationError):
        build_context(config_from_dict(doc, str(tmp_path)))
