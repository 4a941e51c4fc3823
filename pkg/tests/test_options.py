import json
import os

import pytest

from RTBContracts.errors import ConfigurationError
from RTBContracts.options import BaseOptions, RunConfig, config_from_dict, config_hash, config_to_dict, load_config


def write_config(tmp_path, doc, name='run.json'):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_defaults():
    cfg = RunConfig()
    assert cfg.curves.kind == 'synthetic'
    assert cfg.solver.method == 'levels'
    assert cfg.policies == ['dynamic', 'static']
    assert cfg.windows.span == 8 * 12 + 72


def test_nested_sections_and_paths(tmp_path):
    path = write_config(tmp_path, {
        'schema_version': 1,
        'contracts': 'contracts/c.json',
        'curves': {'kind': 'curves', 'files': {'1': 'curves/1.json'}},
        'solver': {'tol': 1e-5, 'strict': True},
        'control': {'replan_hours': 2.0},
        'windows': {'count': 3},
        'out': 'out',
    })
    cfg = load_config(path)
    assert cfg.contracts == os.path.join(str(tmp_path), 'contracts', 'c.json')
    assert cfg.curves.files['1'] == os.path.join(str(tmp_path), 'curves', '1.json')
    assert cfg.out == os.path.join(str(tmp_path), 'out')
    assert cfg.solver.strict and cfg.solver.tol == 1e-5
    assert cfg.control.replan_hours == 2.0
    assert cfg.windows.count == 3 and cfg.windows.length == 72


@pytest.mark.parametrize('doc', [
    {'schema_version': 2},
    {'colour': 'red'},
    {'solver': {'method': 'simplex'}},
    {'solver': {'steps': 3}},
    {'control': {'replan_hours': 0}},
    {'windows': {'count': 0}},
    {'policies': ['greedy']},
    {'policies': []},
    {'workers': 0},
    {'curves': {'kind': 'log'}},
    {'curves': {'kind': 'curves'}},
    {'curves': 'synthetic'},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigurationError):
        config_from_dict(doc)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(str(tmp_path / 'missing.json'))
    bad = tmp_path / 'bad.json'
    bad.write_text('{"seed": ')
    with pytest.raises(ConfigurationError):
        load_config(str(bad))


def test_config_hash():
    a = config_from_dict({'seed': 3})
    b = config_from_dict({'seed': 3})
    c = config_from_dict({'seed': 4})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 64
    assert config_from_dict(json.loads(json.dumps(config_to_dict(a)))) == a


def test_command_line_overrides(tmp_path):
    path = write_config(tmp_path, {'seed': 1, 'workers': 1, 'out': 'res'})
    opt, cfg = BaseOptions().parse(['simulate', '--config', path, '--static', '--seed', '5', '--workers', '2',
                                    '--sigma', '0.5', '--replan-hours', '2', '--strict'])
    assert opt.command == 'simulate'
    assert cfg.policies == ['static']
    assert cfg.seed == 5 and cfg.workers == 2
    assert cfg.control.sigma == 0.5 and cfg.control.replan_hours == 2.0
    assert cfg.solver.strict
    assert cfg.out == os.path.join(str(tmp_path), 'res')


def test_plan_options():
    opt, cfg = BaseOptions().parse(['plan', '--static', '--method', 'supergradient', '--out', 'somewhere'])
    assert opt.static
    assert cfg.solver.method == 'supergradient'
    assert cfg.out == 'somewhere'
    assert cfg.policies == ['dynamic', 'static']


def test_estimate_and_compare_have_no_run_config():
    opt, cfg = BaseOptions().parse(['estimate', '--log', 'log.csv', '--out', 'curves'])
    assert cfg is None and opt.sigma == 2.0 and opt.train_fraction == 1.0
    opt, cfg = BaseOptions().parse(['compare', 'a', 'b', '--bootstrap', '100'])
    assert cfg is None and opt.dir_a == 'a' and opt.bootstrap == 100
