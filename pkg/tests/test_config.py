import copy
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracterm.config import SCHEMA, ExperimentConfig, load_config, loads_config
from fracterm.errors import ConfigError

BASE = {
    "schema": SCHEMA,
    "problem": {
        "alpha": 1.5,
        "T": 2.0,
        "basis": {"kind": "dirichlet_1d", "L": 3.141592653589793, "J": 8},
        "f": {"preset": "single_mode", "j": 1},
    },
}

FULL = {
    "schema": SCHEMA,
    "problem": {
        "alpha": 1.5,
        "T": 1.0,
        "basis": {"kind": "dirichlet_1d", "L": 3.141592653589793, "J": 32},
        "f": {"preset": "power_law", "exponent": 0.65, "offset": 0.05, "amplitude": 0.3},
    },
    "regularity": {"nu": 0.25, "sigma": -0.25, "vartheta": 0.6, "zeta": -0.6, "eta": 1.2},
    "nonlinearity": {"kind": "ginzburg_landau", "s": 1.0, "b": 1.0, "K0_fraction": 0.5},
    "grid": {"N": 128, "gamma_mesh": 2.0},
    "solver": {"mode": "contraction", "tol": 1e-12, "max_iter": 100},
    "analysis": {"suites": ["residual", "blowup"], "norms": [0.0, 0.25]},
    "application": {"kind": "burgers", "N": 4, "nu": 0.75, "mu": 0.8, "vartheta": 0.85, "vartheta_prime": 0.9},
    "output": "runs/x",
}


def roundtrip(cfg: ExperimentConfig) -> ExperimentConfig:
    return loads_config(cfg.dumps())


class TestRoundTrip:
    @pytest.mark.parametrize("doc", [BASE, FULL])
    def test_identity(self, doc):
        cfg = ExperimentConfig.from_dict(copy.deepcopy(doc))
        again = roundtrip(cfg)
        assert again == cfg
        assert again.dumps() == cfg.dumps()

    @given(
        st.floats(1.01, 2.0),
        st.floats(0.01, 10.0),
        st.integers(1, 64),
        st.integers(8, 512),
        st.sampled_from(["picard", "path", "contraction", "forward", "roundtrip"]),
        st.floats(1e-14, 1e-3),
    )
    @settings(max_examples=50, deadline=None)
    def test_generated(self, alpha, T, J, N, mode, tol):
        d = copy.deepcopy(BASE)
        d["problem"].update(alpha=alpha, T=T)
        d["problem"]["basis"]["J"] = J
        d["grid"] = {"N": N}
        d["solver"] = {"mode": mode, "tol": tol}
        cfg = ExperimentConfig.from_dict(d)
        assert roundtrip(cfg) == cfg
        assert cfg.alpha == alpha and cfg.grid.N == N

    def test_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(FULL))
        assert load_config(p) == ExperimentConfig.from_dict(copy.deepcopy(FULL))


def _bad(mut):
    d = copy.deepcopy(BASE)
    mut(d)
    with pytest.raises(ConfigError) as ei:
        ExperimentConfig.from_dict(d)
    return ei.value


class TestErrors:
    @pytest.mark.parametrize(
        "mut,field",
        [
            (lambda d: d["problem"].__setitem__("alpha", 2.5), "problem.alpha"),
            (lambda d: d["problem"]["basis"].__setitem__("J", 0), "problem.basis.J"),
            (lambda d: d["problem"]["basis"].__setitem__("J", 2.5), "problem.basis.J"),
            (lambda d: d["problem"]["f"].__setitem__("preset", "x"), "problem.f.preset"),
            (lambda d: d.__setitem__("solver", {"mode": "bogus"}), "solver.mode"),
            (lambda d: d.__setitem__("solver", {"tol": -1}), "solver.tol"),
            (lambda d: d.__setitem__("nonlinearity", {"kind": "linear_inhomogeneous"}), "nonlinearity.kind"),
            (lambda d: d.__setitem__("regularity", {"theta": "a"}), "regularity.theta"),
            (lambda d: d.__setitem__("regularity", {"foo": 1}), "regularity.foo"),
            (lambda d: d.__setitem__("grid", {"N": 0}), "grid.N"),
            (lambda d: d.__setitem__("analysis", {"suites": ["nope"]}), "analysis.suites"),
            (lambda d: d.__setitem__("extra", 1), "extra"),
            (lambda d: d.__setitem__("schema", "v0"), "schema"),
            (lambda d: d["problem"].pop("T"), "problem.T"),
            (lambda d: d.__setitem__("application", {"kind": "heat"}), "application.kind"),
        ],
    )
    def test_field_path(self, mut, field):
        err = _bad(mut)
        assert err.field == field
        assert str(err).startswith(field + ":")

    def test_not_object(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict([1, 2])

    def test_invalid_json(self):
        with pytest.raises(ConfigError) as ei:
            loads_config("{not json")
        assert ei.value.field == "<root>"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as ei:
            load_config(tmp_path / "nope.json")
        assert ei.value.field == "--config"
