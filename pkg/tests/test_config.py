import numpy as np
import pytest
import yaml

from src.config import RunConfig, find_config_path, load_config
from src.errors import InvalidConfigError
from src.utils import get_project_root


def test_defaults_are_valid():
    config = RunConfig()
    assert config.grid.N == 48
    assert config.perturbation.profile == "gauss"
    assert len(config.short_hash) == 12
    assert config.config_hash.startswith(config.short_hash)


def test_hash_ignores_output_and_workers():
    base = RunConfig()
    other = RunConfig.from_dict({"output_dir": "elsewhere", "workers": 4})
    assert other.config_hash == base.config_hash
    changed = RunConfig.from_dict({"grid": {"N": 32}})
    assert changed.config_hash != base.config_hash


def test_complex_values():
    config = RunConfig.from_dict({"soliton": {"k0": "1+2j", "nu0": [2, 0]}, "kgrid": {"center": "1+2.25j"}})
    assert config.soliton.k0 == 1 + 2j
    assert config.soliton.nu0 == 2 + 0j
    assert config.k_grid().center == 1 + 2.25j
    assert config.to_dict()["soliton"]["k0"] == [1.0, 2.0]


def test_derived_quantities():
    config = RunConfig()
    grid = config.k_grid()
    assert grid.center == config.soliton.k0
    assert grid.spacing == pytest.approx(0.15)
    assert config.exclusion_radius() == pytest.approx(0.3)
    assert config.fd_step() == pytest.approx(0.0375)
    explicit = RunConfig.from_dict({"solver": {"delta": 0.3, "fd_step": 0.01}})
    assert explicit.exclusion_radius() == pytest.approx(0.3)
    assert explicit.fd_step() == pytest.approx(0.01)


@pytest.mark.parametrize(
    "data",
    [
        {"unknown": 1},
        {"grid": {"M": 3}},
        {"grid": {"N": 7}},
        {"grid": {"N": 6}},
        {"solver": {"zero_ratio": 1.5}},
        {"grid": {"L": -1}},
        {"grid": {"N": "many"}},
        {"soliton": {"nu0": 0}},
        {"solver": {"method": "jacobi"}},
        {"solver": {"c_route": "c"}},
        {"solver": {"tol": 0}},
        {"perturbation": {"convention": "both"}},
        {"potential": {"kind": "square"}},
        {"contour": {"nodes": 2}},
        {"radial": {"T_max": 0.5}},
        {"workers": 0},
    ],
)
def test_invalid_configs(data):
    with pytest.raises(InvalidConfigError):
        RunConfig.from_dict(data)


def test_save_and_load(tmp_path):
    config = RunConfig.from_dict({"grid": {"L": 8.0, "N": 16}, "soliton": {"k0": 0.5j}})
    path = config.save(tmp_path / "run.yaml")
    loaded = load_config(path)
    assert loaded == config
    assert loaded.source == str(path)


def test_example_file_matches_defaults():
    example = get_project_root() / "dsii.example.yaml"
    assert load_config(example) == RunConfig()


def test_environment_overrides(tmp_path, monkeypatch):
    path = RunConfig().save(tmp_path / "run.yaml")
    monkeypatch.setenv("DSII_OUTPUT_DIR", str(tmp_path / "out"))
    monkeypatch.setenv("DSII_WORKERS", "3")
    config = load_config(path)
    assert config.output_dir == str(tmp_path / "out")
    assert config.output_path() == tmp_path / "out"
    assert config.workers == 3


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(InvalidConfigError):
        find_config_path(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- a\n- b\n", encoding="utf-8")
    with pytest.raises(InvalidConfigError):
        load_config(bad)
    broken = tmp_path / "broken.yaml"
    broken.write_text("grid: [1, 2\n", encoding="utf-8")
    with pytest.raises(InvalidConfigError):
        load_config(broken)


def test_yaml_round_trip_is_plain():
    text = RunConfig().to_yaml()
    data = yaml.safe_load(text)
    assert data["soliton"]["nu0"] == [1.0, 0.0]
    assert RunConfig.from_dict(data) == RunConfig()


def test_kgrid_must_stay_below_nyquist():
    config = RunConfig()
    assert config.kgrid.half_width <= np.pi / (2 * config.domain().h)
    with pytest.raises(InvalidConfigError, match="N >= 128"):
        RunConfig.from_dict({"kgrid": {"half_width": 5.0}})
    assert RunConfig.from_dict({"kgrid": {"half_width": 5.0}, "grid": {"N": 128}}).grid.N == 128
    with pytest.raises(InvalidConfigError):
        RunConfig.from_dict({"kgrid": {"center": 1.0}})
    # sin solitón la portadora es 0
    far = RunConfig.from_dict({"soliton": {"k0": 3.0}, "potential": {"kind": "gaussian"}, "kgrid": {"center": 0.0}})
    assert far.carrier() == 0j
