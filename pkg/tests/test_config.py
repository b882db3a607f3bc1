# -*- coding: utf-8 -*-

"""Tests for `gyrocal.config` module."""

import os
import shutil
import tempfile
import unittest

import yaml

from gyrocal.config import DEFAULTS, RunConfig, parse_override
from gyrocal.estimator import BiasNetSpec, TrainConfig
from gyrocal.exceptions import ConfigurationError


class TestRunConfig(unittest.TestCase):
    """Tests for RunConfig."""

    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def write(self, content):
        path = os.path.join(self.directory, "run.yaml")
        with open(path, "w") as fileobj:
            fileobj.write(content)
        return path

    def test_defaults(self):
        config = RunConfig.load()
        assert config.seed == 0
        assert config.dataset["k_values"] == [60, 20, 10, 6]
        assert config.simulation["fs"] == 200.0
        assert config.noise.n == 5e-4
        assert config.disturbance.kind == "none"
        assert config.train_config == TrainConfig()
        assert config.network_spec(200) == BiasNetSpec()

    def test_file_and_overrides(self):
        path = self.write("seed: 3\nsimulation:\n  duration: 30.0\n")
        config = RunConfig.load(path, ["dataset.n_copies=5", "training.epochs=7"])
        assert config.seed == 3
        assert config.simulation["duration"] == 30.0
        assert config.simulation["fs"] == DEFAULTS["simulation"]["fs"]
        assert config.dataset["n_copies"] == 5
        assert config.train_config.epochs == 7
        assert config.train_config.seed == 3

    def test_seed_argument_wins(self):
        path = self.write("seed: 3\n")
        assert RunConfig.load(path, seed=9).seed == 9

    def test_disturbance_replaced(self):
        config = RunConfig.load(
            overrides=["simulation.disturbance={kind: sinusoid, amplitude: 0.1}"]
        )
        assert config.disturbance.kind == "sinusoid"
        assert config.disturbance.amplitude == 0.1

    def test_unknown_key(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.load(overrides=["simulation.bogus=1"])
        with self.assertRaises(ConfigurationError):
            RunConfig({"nonsense": True})

    def test_invalid_values(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.load(overrides=["training.epochs=0"])
        with self.assertRaises(ConfigurationError):
            RunConfig.load(overrides=["dataset.k_values=[]"])
        with self.assertRaises(ConfigurationError):
            RunConfig.load(overrides=["simulation=3"])

    def test_unreadable_file(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.load(self.write("seed: [1,\n"))
        with self.assertRaises(ConfigurationError):
            RunConfig.load(self.write("- 1\n- 2\n"))
        with self.assertRaises(ConfigurationError):
            RunConfig.load(os.path.join(self.directory, "missing.yaml"))

    def test_parse_override(self):
        assert parse_override("dataset.k_values=[6, 3]") == (
            ("dataset", "k_values"),
            [6, 3],
        )
        assert parse_override("seed=4") == (("seed",), 4)
        with self.assertRaises(ConfigurationError):
            parse_override("seed")

    def test_hash(self):
        first = RunConfig.load(output_dir="a")
        second = RunConfig.load(output_dir="b")
        third = RunConfig.load(seed=1)
        assert len(first.config_hash) == 40
        assert first.config_hash == second.config_hash
        assert first.config_hash != third.config_hash
        assert first.comments() == {"config_hash": first.config_hash, "seed": 0}

    def test_write_reload(self):
        config = RunConfig.load(overrides=["dataset.n_copies=3"])
        path = config.write(os.path.join(self.directory, "dump.yaml"))
        with open(path) as fileobj:
            assert yaml.safe_load(fileobj) == config.as_dict()
        assert RunConfig.load(path).config_hash == config.config_hash
