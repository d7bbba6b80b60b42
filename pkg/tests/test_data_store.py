import json

import pytest

from data_store import BUILTIN_PREFIX, DataStore, deep_merge
from helpers import ValidationError
from metasurface import default_palette, load_palette


def test_deep_merge_keeps_siblings():
    base = {'design': {'design_kind': 'resonant', 'theta_max_deg': 70.0}, 'lambda0_nm': 852.0}
    merged = deep_merge(base, {'design': {'design_kind': 'geometric'}})
    assert merged == {'design': {'design_kind': 'geometric', 'theta_max_deg': 70.0}, 'lambda0_nm': 852.0}
    assert base['design']['design_kind'] == 'resonant'


def test_deep_merge_replaces_non_mappings():
    assert deep_merge({'cell': [300, 150]}, {'cell': [200, 200]}) == {'cell': [200, 200]}
    assert deep_merge({'a': {'b': 1}}, {'a': None}) == {'a': None}


def test_packaged_config():
    config = DataStore().load_config()
    assert config['lambda0_nm'] == 852.0
    assert config['farfield']['reflectance_profile'] == BUILTIN_PREFIX + "table2"


def test_config_overlay(tmp_path):
    overlay = tmp_path / "user.json"
    overlay.write_text(json.dumps({'dynamics': {'gamma1': 0.8}}))
    config = DataStore().load_config(str(overlay))
    assert config['dynamics']['gamma1'] == 0.8
    assert config['dynamics']['gamma2'] == 0.5


def test_config_overlay_must_be_object(tmp_path):
    overlay = tmp_path / "list.json"
    overlay.write_text("[1, 2]")
    with pytest.raises(ValidationError):
        DataStore().load_config(str(overlay))


def test_green_record(tmp_path):
    record = tmp_path / "green.json"
    record.write_text(json.dumps({'basis': 'cartesian', 'im_gxx': 0.8, 'im_gyy': 1.0}))
    assert DataStore().read_green_record(str(record)) == {'basis': 'cartesian', 'im_gxx': 0.8, 'im_gyy': 1.0}

    record.write_text("[0.8, 1.0]")
    with pytest.raises(ValidationError):
        DataStore().read_green_record(str(record))


def test_invalid_json(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ValidationError, match="invalid JSON"):
        DataStore().load_config(str(broken))


def test_missing_table(tmp_path):
    with pytest.raises(ValidationError, match="file not found"):
        DataStore().read_palette_rows(str(tmp_path / "missing.csv"))


def test_empty_table(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("theta_deg,rx\n")
    with pytest.raises(ValidationError, match="no records"):
        DataStore().read_reflectance_rows(str(empty))


def test_builtin_palette_matches_default():
    palette = load_palette(DataStore().read_palette_rows(BUILTIN_PREFIX + "table1"))
    for loaded, expected in zip(palette, default_palette()):
        assert loaded.index == expected.index
        assert loaded.lx == expected.lx
        assert loaded.phase == pytest.approx(expected.phase, abs=1e-11)


def test_reflectance_by_supercell():
    assert DataStore().table2_reflectance_by_supercell() == {1: 0.6, 2: 0.55, 3: 0.5, 4: 0.3, 5: 0.3}


def test_write_csv(store):
    path = store.write_csv("rows.csv", ["a", "b", "c"], [[0.1 + 0.2, None, 3], [-0.0, 1e-20, "x"]])
    with open(path) as f:
        assert f.read() == "a,b,c\n0.3,,3\n0,1e-20,x\n"


def test_write_json_and_report(store):
    json_path = store.write_json("data.json", {'n': 1})
    with open(json_path) as f:
        assert json.load(f) == {'n': 1}
    report_path = store.write_report("report.txt", "# title\n")
    with open(report_path) as f:
        assert f.read() == "# title\n"


def test_output_needs_directory():
    with pytest.raises(ValidationError):
        DataStore().output_path("anything.csv")
