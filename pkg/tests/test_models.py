"""Tests for the model registry, model specification files and closed-form oracles."""

import json
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hamilton_potential.errors import ConfigError, DomainError, UnknownModel
from hamilton_potential.library import models
from hamilton_potential.library.models import (
    available_models,
    closed_form_potential_exponential,
    exponential_model,
    get_model,
    load_model_spec,
    potential_oracle,
    register_model,
)


@pytest.fixture
def registry(monkeypatch):
    monkeypatch.setattr(models, "_registry", dict(models.BUILTIN_MODELS))


class TestRegistry:
    def test_builtins(self):
        assert available_models() == [
            "euclidean-cubic-r3",
            "exponential-log",
            "exponential1d",
            "kl-free",
            "sphere-pullback",
            "sphere-round",
        ]
        assert get_model("sphere-pullback").dim == 2

    def test_unknown(self):
        with pytest.raises(UnknownModel, match="unknown model 'hyperbolic'"):
            get_model("hyperbolic")

    def test_register(self, registry):
        register_model("narrow-exponential", lambda: exponential_model().restricted([(0.5, 2.0)]))
        assert "narrow-exponential" in available_models()
        assert get_model("narrow-exponential").domain == ((0.5, 2.0),)

    def test_register_duplicate(self, registry):
        with pytest.raises(ValueError, match="already registered"):
            register_model("exponential1d", exponential_model)
        register_model("exponential1d", exponential_model, replace=True)


class TestModelSpec:
    def test_from_mapping(self):
        model = load_model_spec({"dim": 1, "domain": [[0.5, None]], "model": "exponential1d"})
        assert model.name == "exponential1d"
        assert model.domain == ((0.5, math.inf),)
        assert not model.contains(np.array([0.4]))

    def test_from_file(self, tmp_path):
        path = tmp_path / "sphere.json"
        spec = {"dim": 2, "domain": [[0.5, 2.5], [1.0, 5.0]], "model": "sphere-round"}
        path.write_text(json.dumps(spec))
        model = load_model_spec(path)
        assert model.contains(np.array([1.0, 2.0]))
        assert not model.contains(np.array([0.2, 2.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError, match="dim=1"):
            load_model_spec({"dim": 2, "domain": [[0, 1], [0, 1]], "model": "exponential1d"})

    def test_domain_length_mismatch(self):
        with pytest.raises(ConfigError, match="invalid model specification"):
            load_model_spec({"dim": 2, "domain": [[0, 1]], "model": "sphere-round"})

    def test_extra_keys(self):
        with pytest.raises(ConfigError):
            load_model_spec({"dim": 1, "domain": [[0, 1]], "model": "exponential1d", "T": 1})

    def test_widening_domain(self):
        with pytest.raises(ConfigError, match="exceeds"):
            load_model_spec({"dim": 1, "domain": [[-1.0, 1.0]], "model": "exponential1d"})

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{dim: 1")
        with pytest.raises(ConfigError, match="cannot read"):
            load_model_spec(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_model_spec(tmp_path / "absent.json")

    def test_unknown_builtin(self):
        with pytest.raises(UnknownModel):
            load_model_spec({"dim": 1, "domain": [[0, 1]], "model": "poisson"})


class TestOracles:
    def test_exponential_closed_form(self):
        r = math.log(2.0)
        expected = r**2 / 2.0 - 0.5 / 3.0 * r**3
        assert closed_form_potential_exponential(1.0, 2.0, 0.5) == pytest.approx(expected)
        assert closed_form_potential_exponential(1.7, 1.7, 0.5) == 0.0

    def test_exponential_rejects_nonpositive(self):
        with pytest.raises(DomainError, match="positive"):
            closed_form_potential_exponential(0.0, 1.0, 0.0)

    def test_chart_oracles_agree(self):
        in_xi = potential_oracle("exponential1d")
        in_y = potential_oracle("exponential-log")
        assert in_xi is not None and in_y is not None
        value = in_xi(np.array([0.8]), np.array([1.9]), 0.3)
        assert in_y(np.array([math.log(0.8)]), np.array([math.log(1.9)]), 0.3) == pytest.approx(
            value
        )

    def test_sphere_round_quarter_turn(self):
        oracle = potential_oracle("sphere-round")
        assert oracle is not None
        q_in = np.array([math.pi / 2, 1.0])
        q_fin = np.array([math.pi / 2, 1.0 + math.pi / 2])
        assert oracle(q_in, q_fin, 2.0) == pytest.approx(math.pi**2 / 8.0)

    def test_kl_free(self):
        oracle = potential_oracle("kl-free")
        assert oracle is not None
        assert oracle(np.array([0.0]), np.array([0.7]), 0.0) == pytest.approx(0.3137527075)

    def test_no_oracle_for_pullback(self):
        assert potential_oracle("sphere-pullback") is None
