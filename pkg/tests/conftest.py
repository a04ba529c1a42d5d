"""Fixtures compartidos: dominios pequeños y directorios aislados."""

import numpy as np
import pytest

from src.grid import make_domain


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    """Registro de corridas y salidas en un directorio temporal."""
    monkeypatch.setenv("DSII_DATA_DIR", str(tmp_path / "data"))
    monkeypatch.delenv("DSII_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("DSII_WORKERS", raising=False)
    return tmp_path


@pytest.fixture
def tiny_domain():
    return make_domain(4.0, 8)


@pytest.fixture
def small_domain():
    return make_domain(6.0, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_function(rng):
    """Fábrica de funciones complejas aleatorias sobre un dominio."""

    def make(d, scale=1.0):
        values = rng.standard_normal(d.size) + 1j * rng.standard_normal(d.size)
        return d.sample(scale * values)

    return make
