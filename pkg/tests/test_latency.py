import numpy as np
import pytest

from src.latency import LatencyKind, LatencyModel, LatencyModelSpec, latency_preset
from src.random_gen import RandomSource


def test_constant_model():
    model = LatencyModel(LatencyModelSpec(LatencyKind.CONSTANT, mean=0.05, per_tx=0.005))
    assert model.draw() == 50_000
    assert model.draw(tx_count=10) == 100_000


def test_load_factor():
    spec = LatencyModelSpec(LatencyKind.CONSTANT, mean=0.01, load_dependent=True, parallelism=4)
    model = LatencyModel(spec)
    assert model.load_factor(2) == 1.0
    assert model.draw(active=8) == 20_000
    assert LatencyModel(LatencyModelSpec(mean=0.01)).draw(active=100) == 10_000


def test_exponential_mean():
    model = LatencyModel(LatencyModelSpec(LatencyKind.EXPONENTIAL, mean=0.03), RandomSource(1))
    draws = [model.draw() for _ in range(20_000)]
    assert np.mean(draws) == pytest.approx(30_000, rel=0.05)


def test_spec_validation():
    with pytest.raises(ValueError):
        LatencyModelSpec(mean=-1.0)
    with pytest.raises(ValueError):
        LatencyModelSpec(parallelism=0)
    with pytest.raises(ValueError):
        LatencyModelSpec(kind="gaussian")
    spec = LatencyModelSpec(LatencyKind.EXPONENTIAL, mean=0.1)
    assert LatencyModelSpec.from_dict(spec.to_dict()) == spec


def test_presets():
    endorsement, commit = latency_preset("instant")
    assert LatencyModel(endorsement).draw() == 0 and LatencyModel(commit).draw(tx_count=10) == 0
    endorsement, _ = latency_preset("calibrated")
    assert endorsement.load_dependent
    with pytest.raises(ValueError):
        latency_preset("warp")
