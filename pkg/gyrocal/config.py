# -*- coding: utf-8 -*-

"""
gyrocal.config
~~~~~~~~~~~~~~

Run configuration shared by all pipeline commands

A run is described by a YAML document. Missing keys take defaults from
:py:data:`DEFAULTS`. The SHA1 of the canonical dump is embedded in every
output so that artifacts of different runs can't be mixed.
"""

import copy
import logging

import yaml

from gyrocal.estimator import BiasNetSpec, TrainConfig
from gyrocal.exceptions import ConfigurationError, GyrocalException
from gyrocal.noise_sim import DisturbanceSpec, NoiseCoefficients
from gyrocal.util import sha1bytes

log = logging.getLogger(__name__)

DEFAULTS = {
    "scenario": "default",
    "seed": 0,
    "output_dir": "gyrocal-output",
    "simulation": {
        "n_sensors": 5,
        "records_per_sensor": 10,
        "duration": 60.0,
        "fs": 200.0,
        "bias_range": 0.05,
        "sf_range": 0.02,
        "ma_range": 0.003,
        "noise": {
            "q": 0.0,
            "n": 5e-4,
            "b_inst": 1e-4,
            "b_corr_time": 10.0,
            "k": 1e-5,
            "r": 0.0,
        },
        "disturbance": {"kind": "none"},
    },
    "dataset": {
        "k_values": [60, 20, 10, 6],
        "n_copies": 100,
        "bias_sigma": 0.01,
        "noise_sigma": None,
        "train_ratio": 0.8,
        "windows_per_copy": 1,
    },
    "network": {
        "conv1_channels": 16,
        "conv1_kernel": 7,
        "pool1": 4,
        "conv2_channels": 32,
        "conv2_kernel": 7,
        "pool2": 4,
        "hidden": 64,
    },
    "training": {
        "epochs": 200,
        "batch_size": 32,
        "learning_rate": 1e-3,
        "patience": 10,
        "validation_fraction": 0.1,
    },
    "calibration": {"rate_magnitude": 1.0, "duration": 60.0},
}

SECTIONS = tuple(key for key, value in DEFAULTS.items() if isinstance(value, dict))


def _merge(base, override, prefix=""):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            msg = "Unknown configuration key {key}".format(key=prefix + str(key))
            raise ConfigurationError(msg)
        if isinstance(base[key], dict) and key != "disturbance":
            if not isinstance(value, dict):
                msg = "Configuration key {key} must be a mapping".format(
                    key=prefix + key
                )
                raise ConfigurationError(msg)
            merged[key] = _merge(base[key], value, prefix + key + ".")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def parse_override(text):
    """
    Parses ``section.key=value`` into key path and YAML value

    :raises ConfigurationError: if text isn't an assignment
    :rtype: tuple
    """
    if "=" not in text:
        msg = "Override {text!r} isn't in form section.key=value".format(text=text)
        raise ConfigurationError(msg)
    path, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as err:
        msg = "Can't parse value of {path}: {err}".format(path=path, err=err)
        raise ConfigurationError(msg)
    return tuple(path.strip().split(".")), value


class RunConfig(object):
    """
    Validated run configuration

    :param dict data: configuration merged over defaults
    """

    def __init__(self, data=None):
        self.data = _merge(DEFAULTS, data or {})
        self._validate()

    @classmethod
    def load(cls, path=None, overrides=(), seed=None, output_dir=None):
        """
        Reads configuration file and applies command line overrides

        :param str path: (optional) YAML file, defaults only if None
        :param overrides: ``section.key=value`` strings
        :param int seed: (optional) replaces top-level seed
        :param str output_dir: (optional) replaces output directory
        :rtype: :class:`RunConfig`
        """
        data = {}
        if path is not None:
            try:
                with open(path) as fileobj:
                    data = yaml.safe_load(fileobj) or {}
            except (IOError, OSError) as err:
                msg = "Can't read configuration {path}: {err}".format(
                    path=path, err=err
                )
                raise ConfigurationError(msg)
            except yaml.YAMLError as err:
                msg = "Can't parse configuration {path}: {err}".format(
                    path=path, err=err
                )
                raise ConfigurationError(msg)
            if not isinstance(data, dict):
                raise ConfigurationError("Configuration must be a mapping")
        for text in overrides:
            keys, value = parse_override(text)
            target = data
            for key in keys[:-1]:
                target = target.setdefault(key, {})
            target[keys[-1]] = value
        if seed is not None:
            data["seed"] = int(seed)
        if output_dir is not None:
            data["output_dir"] = str(output_dir)
        return cls(data)

    def _validate(self):
        try:
            self.noise
            self.disturbance
            self.train_config
            self.network_spec(1)
        except (GyrocalException, TypeError, ValueError) as err:
            if isinstance(err, ConfigurationError):
                raise
            raise ConfigurationError("Invalid configuration: {err}".format(err=err))
        k_values = self.dataset["k_values"]
        if not k_values or any(int(k) < 1 for k in k_values):
            raise ConfigurationError("Division factors must be positive integers")

    def __getattr__(self, name):
        if name != "data" and name in self.data:
            return self.data[name]
        raise AttributeError(name)

    @property
    def noise(self):
        return NoiseCoefficients(**self.simulation["noise"])

    @property
    def disturbance(self):
        return DisturbanceSpec(**self.simulation["disturbance"])

    @property
    def train_config(self):
        return TrainConfig(seed=self.seed, **self.training)

    def network_spec(self, length):
        return BiasNetSpec(length=length, **self.network)

    def as_dict(self):
        return copy.deepcopy(self.data)

    def dump(self):
        """Canonical YAML text"""
        return yaml.safe_dump(self.data, default_flow_style=False, sort_keys=True)

    @property
    def config_hash(self):
        """SHA1 of canonical dump without output directory"""
        data = self.as_dict()
        data.pop("output_dir")
        text = yaml.safe_dump(data, default_flow_style=False, sort_keys=True)
        return sha1bytes(text.encode("utf-8"))

    def comments(self):
        """Provenance embedded in every output file"""
        return {"config_hash": self.config_hash, "seed": self.seed}

    def write(self, path):
        with open(path, "w") as fileobj:
            fileobj.write(self.dump())
        return path
