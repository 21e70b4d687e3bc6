"""
Unit tests for run configuration loading and validation.
"""

import copy
import json
import tempfile
import unittest
from pathlib import Path

from src.config import RunConfig, load_config
from src.exceptions import ConfigurationError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = {
    "model": {"name": "disturbed_linear", "params": {"n": 2}},
    "trigger": {"kind": "mixed", "params": {"sigma": 0.01, "eps_bar": 0.5}},
    "sets": {"Z": {"lo": [-0.5, -0.5], "hi": [0.5, 0.5]}, "W": [0.01, 0.5]},
}


def _with(section, **values):
    raw = copy.deepcopy(MINIMAL)
    raw.setdefault(section, {}).update(values)
    return raw


class TestShippedConfigs(unittest.TestCase):
    """Test the configuration files in configs/ load."""

    def test_all_configs_load(self):
        """Test every shipped config validates."""
        paths = sorted(CONFIGS.glob("*.json"))
        self.assertTrue(paths)
        for path in paths:
            with self.subTest(config=path.name):
                self.assertIsInstance(load_config(path), RunConfig)

    def test_benchmark_values(self):
        """Test the benchmark config carries the published grid."""
        config = load_config(CONFIGS / "benchmark.json")
        self.assertEqual((config.grid.tau1, config.grid.ratio, config.grid.q), (0.00063, 1.01, 434))
        self.assertEqual(config.sets.z_lo, (-0.1, -0.1))
        self.assertEqual(config.trigger.params, {"sigma": 0.0049, "eps_bar": 4.0})

    def test_model_hash(self):
        """Test the hash depends only on model and trigger."""
        bench = load_config(CONFIGS / "benchmark.json")
        single = load_config(CONFIGS / "benchmark_single.json")
        toy = load_config(CONFIGS / "toy_linear.json")
        self.assertEqual(bench.model_hash(), single.model_hash())
        self.assertNotEqual(bench.model_hash(), toy.model_hash())


class TestValidation(unittest.TestCase):
    """Test configuration errors."""

    def test_minimal_defaults(self):
        """Test defaults fill the optional sections."""
        config = RunConfig.from_dict(MINIMAL)
        self.assertEqual(config.sets.domain, "reach")
        self.assertEqual(config.grid.ratio, 1.01)
        self.assertEqual(config.output.artifact_path.name, "artifact.json")

    def test_invalid_configs(self):
        """Test malformed sections are rejected."""
        bad = [
            {**MINIMAL, "extra": {}},
            {k: v for k, v in MINIMAL.items() if k != "sets"},
            _with("sets", Z={"lo": [0.0, -0.5], "hi": [0.5, 0.5]}),
            _with("sets", W=[0.5, 0.1]),
            _with("sets", W=[0.0, 0.5]),
            _with("sets", domain="ball"),
            _with("grid", tau1=0.01, ratio=1.0, q=3),
            _with("grid", auto=True),
            _with("synthesis", delta_override={"delta0": 0.1}),
            _with("synthesis", n_rows=0),
            _with("model", alpha=-1.0),
            _with("disturbance", kind="constant"),
            _with("benchmark", horizon="long"),
            _with("verify", unknown_budget=3),
        ]
        for i, raw in enumerate(bad):
            with self.subTest(case=i):
                with self.assertRaises(ConfigurationError):
                    RunConfig.from_dict(raw)

    def test_missing_and_broken_files(self):
        """Test unreadable files are configuration errors."""
        with self.assertRaises(ConfigurationError):
            load_config("/nonexistent/config.json")
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "broken.json"
            path.write_text("{not json", encoding="utf-8")
            with self.assertRaises(ConfigurationError):
                load_config(path)

    def test_overrides(self):
        """Test CLI overrides replace seeds, output and step."""
        config = RunConfig.from_dict(MINIMAL).with_overrides(seed=5, out="/tmp/x", h=1e-4)
        self.assertEqual((config.synthesis.seed, config.benchmark.seed, config.verify.seed), (5, 5, 5))
        self.assertEqual(config.output.artifact_path, Path("/tmp/x/artifact.json"))
        self.assertEqual(config.integrator.h, 1e-4)

    def test_round_trip_through_json(self):
        """Test a dumped config loads back to the same hash."""
        config = RunConfig.from_dict(MINIMAL)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "c.json"
            path.write_text(json.dumps(MINIMAL), encoding="utf-8")
            self.assertEqual(load_config(path).model_hash(), config.model_hash())


if __name__ == "__main__":
    unittest.main()
