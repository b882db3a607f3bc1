# -*- coding: utf-8 -*-

"""Console script for gyrocal."""

import functools
import logging
import os

import click
import click_log
import numpy as np
import yaml

import gyrocal.allan
import gyrocal.calib
import gyrocal.dataset
import gyrocal.estimator
import gyrocal.evaluation
import gyrocal.noise_sim
from gyrocal.config import RunConfig
from gyrocal.exceptions import (
    ConfigurationError,
    FormatError,
    GyrocalException,
    OutputError,
    RankDeficientError,
)
from gyrocal.meta import read_metadata, write_metadata
from gyrocal.nn import load_parameters, save_parameters
from gyrocal.records import write_signal_csv
from gyrocal.util import make_rng, seed_sequence, sha1file

log = logging.getLogger(__name__)


LOGGERS = (
    log,
    gyrocal.noise_sim.log,
    gyrocal.allan.log,
    gyrocal.calib.log,
    gyrocal.dataset.log,
    gyrocal.estimator.log,
    gyrocal.evaluation.log,
)

RECORDS_DIR = "records"
TURNTABLE_DIR = "turntable"
DATASETS_DIR = "datasets"
MODELS_DIR = "models"
RECORDS_MANIFEST = "manifest.yaml"


def handle_errors(func):
    """Reports package exceptions and I/O failures, exits with their exit code"""

    @functools.wraps(func)
    @click.pass_context
    def wrapper(ctx, *args, **kwargs):
        try:
            return ctx.invoke(func, *args, **kwargs)
        except (GyrocalException, IOError, OSError) as err:
            if not isinstance(err, GyrocalException):
                err = OutputError(err)
            log.error("%s failed: %s", ctx.info_name, err)
            click.echo("Failed: {err}".format(err=err), err=True)
            ctx.exit(err.exit_code)

    return wrapper


def get_config(ctx):
    obj = ctx.find_root().obj
    if "config" not in obj:
        obj["config"] = RunConfig.load(
            obj["config_path"], obj["overrides"], obj["seed"], obj["output_dir"]
        )
        log.debug("Configuration hash %s", obj["config"].config_hash)
    return obj["config"]


def output_path(config, *parts):
    path = os.path.join(config.output_dir, *parts)
    directory = os.path.dirname(path)
    if directory and not os.path.isdir(directory):
        try:
            os.makedirs(directory)
        except (IOError, OSError) as err:
            msg = "Can't create output directory {path}: {err}".format(
                path=directory, err=err
            )
            raise OutputError(msg)
    return path


def check_hash(config, meta, what):
    """
    :raises ConfigurationError: if artifact was produced by another config
    """
    found = meta.get("config_hash")
    if found != config.config_hash:
        msg = (
            "{what} has config hash {found}, current configuration is {expected}; "
            "regenerate it with the same configuration"
        ).format(what=what, found=found, expected=config.config_hash)
        raise ConfigurationError(msg)


def record_seed(seed, index):
    return int(seed_sequence(seed, 3, index).generate_state(1)[0])


def sensor_params(config, sensor):
    simulation = config.simulation
    return gyrocal.noise_sim.random_error_model(
        make_rng(config.seed, 0, sensor),
        config.noise,
        bias_range=simulation["bias_range"],
        sf_range=simulation["sf_range"],
        ma_range=simulation["ma_range"],
    )


def load_records(config):
    """Full-length records of the simulate manifest, dict id -> record"""
    directory = os.path.join(config.output_dir, RECORDS_DIR)
    path = os.path.join(directory, RECORDS_MANIFEST)
    if not os.path.exists(path):
        msg = "Records manifest {path} doesn't exist, run gyrocal simulate".format(
            path=path
        )
        raise ConfigurationError(msg)
    with open(path) as fileobj:
        manifest = yaml.safe_load(fileobj)
    check_hash(config, manifest, "Records manifest {path}".format(path=path))
    records = {}
    for source in manifest["sources"] or []:
        signal_path = os.path.join(directory, source["file"])
        record = gyrocal.dataset.load_record(signal_path)
        check_hash(config, record.extra, "Record {path}".format(path=signal_path))
        records[record.source_id] = record
    return records


def dataset_dir(config, k):
    return os.path.join(config.output_dir, DATASETS_DIR, "k{k}".format(k=k))


def checkpoint_path(config, k):
    return os.path.join(config.output_dir, MODELS_DIR, "k{k}.ckpt".format(k=k))


def requested_k(config, k_values):
    configured = [int(k) for k in config.dataset["k_values"]]
    if not k_values:
        return configured
    unknown = sorted(set(k_values) - set(configured))
    if unknown:
        msg = "K {unknown} not in configured division factors {configured}".format(
            unknown=unknown, configured=configured
        )
        raise ConfigurationError(msg)
    return list(k_values)


@click.group()
@click.version_option()
@click.pass_context
@click.option(
    "--config",
    "config_path",
    metavar="PATH",
    type=click.Path(exists=True, dir_okay=False),
    help="YAML run configuration. Defaults are used for missing keys.",
)
@click.option(
    "--set",
    "overrides",
    metavar="SECTION.KEY=VALUE",
    multiple=True,
    help="Overrides configuration value. Can be repeated.",
)
@click.option("--seed", type=int, help="Overrides seed of the run.")
@click.option("--output-dir", metavar="DIR", help="Overrides output directory.")
@click_log.simple_verbosity_option(
    log,
    "--verbosity-cli",
    help="Sets verbosity of main CLI. Either CRITICAL, ERROR, WARNING, INFO or DEBUG",
)
@click_log.simple_verbosity_option(
    gyrocal.noise_sim.log,
    "--verbosity-sim",
    help="Sets verbosity of simulation module. Either CRITICAL, ERROR, WARNING, INFO or DEBUG",
)
@click_log.simple_verbosity_option(
    gyrocal.calib.log,
    "--verbosity-calib",
    help="Sets verbosity of calibration module. Either CRITICAL, ERROR, WARNING, INFO or DEBUG",
)
@click_log.simple_verbosity_option(
    gyrocal.dataset.log,
    "--verbosity-dataset",
    help="Sets verbosity of dataset module. Either CRITICAL, ERROR, WARNING, INFO or DEBUG",
)
@click_log.simple_verbosity_option(
    gyrocal.estimator.log,
    "--verbosity-train",
    help="Sets verbosity of training. Either CRITICAL, ERROR, WARNING, INFO or DEBUG",
)
@click_log.simple_verbosity_option(
    gyrocal.evaluation.log,
    "--verbosity-eval",
    help="Sets verbosity of evaluation. Either CRITICAL, ERROR, WARNING, INFO or DEBUG",
)
def main(ctx, config_path, overrides, seed, output_dir):
    for logger in LOGGERS:
        click_log.basic_config(logger)
    ctx.obj = {
        "config_path": config_path,
        "overrides": overrides,
        "seed": seed,
        "output_dir": output_dir,
    }


@main.command(name="show-config", help="Prints effective configuration.")
@handle_errors
def show_config():
    config = get_config(click.get_current_context())
    click.echo(config.dump(), nl=False)
    click.echo("# config_hash={h}".format(h=config.config_hash))


@main.command(help="Simulates stationary recordings with known bias.")
@click.option(
    "--sources",
    type=click.IntRange(min=0),
    help="Number of recordings. Defaults to n_sensors * records_per_sensor.",
)
@handle_errors
def simulate(sources):
    config = get_config(click.get_current_context())
    simulation = config.simulation
    per_sensor = int(simulation["records_per_sensor"])
    if sources is None:
        sources = int(simulation["n_sensors"]) * per_sensor
    if sources == 0:
        log.warning("Zero sources requested, writing empty manifest")
    comments = config.comments()
    entries = []
    for index in range(sources):
        sensor = index // per_sensor
        params = sensor_params(config, sensor)
        bias = make_rng(config.seed, 1, index).uniform(
            -simulation["bias_range"], simulation["bias_range"], 3
        )
        params = params._replace(bias=bias)
        source_id = "s{sensor:02d}r{record:02d}".format(
            sensor=sensor, record=index % per_sensor
        )
        record = gyrocal.noise_sim.synthesize_stationary(
            params,
            config.disturbance,
            simulation["duration"],
            simulation["fs"],
            record_seed(config.seed, index),
            source_id=source_id,
            extra={"sensor": sensor},
        )
        name = source_id + ".csv"
        path = output_path(config, RECORDS_DIR, name)
        write_signal_csv(record, path, comments)
        entries.append({"id": source_id, "file": name, "sha1": sha1file(path)})
    manifest = {"sources": entries}
    manifest.update(comments)
    config.write(output_path(config, "config.yaml"))
    path = output_path(config, RECORDS_DIR, RECORDS_MANIFEST)
    with open(path, "w") as fileobj:
        yaml.safe_dump(manifest, fileobj, default_flow_style=False, sort_keys=True)
    click.echo("Wrote {n} recordings to {path}.".format(n=sources, path=path))


@main.command(
    name="simulate-turntable",
    help="Simulates six-point turntable protocol plus a stationary point.",
)
@click.option("--sensor", type=click.IntRange(min=0), default=0, help="Sensor index.")
@click.option(
    "--noise-free", is_flag=True, help="Disables all noise sources and disturbance."
)
@handle_errors
def simulate_turntable(sensor, noise_free):
    config = get_config(click.get_current_context())
    simulation = config.simulation
    params = sensor_params(config, sensor)
    disturbance = config.disturbance
    if noise_free:
        params = params._replace(noise=gyrocal.noise_sim.NoiseCoefficients())
        disturbance = gyrocal.noise_sim.NO_DISTURBANCE
    rates = gyrocal.calib.six_point_protocol(config.calibration["rate_magnitude"])
    comments = config.comments()
    names = ("plus_x", "minus_x", "plus_y", "minus_y", "plus_z", "minus_z", "zero")
    for index, (name, rate) in enumerate(zip(names, rates)):
        record = gyrocal.noise_sim.synthesize_constant_rate(
            params,
            rate,
            disturbance,
            config.calibration["duration"],
            simulation["fs"],
            record_seed(config.seed, 1000 + index),
            source_id=name,
            extra={
                "known_rate": [float(v) for v in rate],
                "true_matrix": [[float(v) for v in row] for row in params.distortion.m],
            },
        )
        path = output_path(config, TURNTABLE_DIR, name + ".csv")
        write_signal_csv(record, path, comments)
    click.echo(
        "Wrote {n} turntable recordings to {path}.".format(
            n=len(rates), path=os.path.join(config.output_dir, TURNTABLE_DIR)
        )
    )


@main.command(help="Computes Allan deviation of a signal file.")
@click.argument("signal", type=click.Path())
@click.option("--axis", type=click.Choice(["x", "y", "z"]), multiple=True)
@handle_errors
def allan(signal, axis):
    config = get_config(click.get_current_context())
    record = gyrocal.dataset.load_record(signal)
    base = os.path.splitext(os.path.basename(signal))[0]
    for name in axis or ("x", "y", "z"):
        curve = gyrocal.allan.allan_deviation(record, name)
        name_csv = "{base}_{axis}.csv".format(base=base, axis=name)
        path = output_path(config, "allan", name_csv)
        gyrocal.allan.write_curve_csv(curve, path, config.comments())
        click.echo(
            "Axis {axis}: {n} taus written to {path}.".format(
                axis=name, n=len(curve.taus), path=path
            )
        )
        try:
            estimates = gyrocal.allan.fit_noise_coefficients(curve)
        except GyrocalException as err:
            click.echo("  Noise coefficients not identifiable: {err}".format(err=err))
            continue
        for label, estimate in zip(("N", "B", "K"), estimates):
            if estimate is None:
                click.echo("  {label}: no region".format(label=label))
            else:
                click.echo(
                    "  {label}: {value:.6g} (tau {lo:g}..{hi:g} s)".format(
                        label=label,
                        value=estimate.value,
                        lo=estimate.tau_range[0],
                        hi=estimate.tau_range[1],
                    )
                )


@main.command(help="Solves calibration from turntable recordings.")
@click.argument("signals", nargs=-1, type=click.Path())
@click.option("--report", metavar="PATH", help="Report path.")
@handle_errors
def calibrate(signals, report):
    if not signals:
        raise click.UsageError("At least one measurement file is required.")
    config = get_config(click.get_current_context())
    measurements = []
    for path in signals:
        record = gyrocal.dataset.load_record(path)
        if "known_rate" not in record.extra:
            msg = "Sidecar of {path} doesn't provide known_rate".format(path=path)
            raise FormatError(msg)
        measurements.append(
            gyrocal.calib.measurement_from_record(record, record.extra["known_rate"])
        )
    report = report or output_path(config, "calibration.yaml")
    try:
        result = gyrocal.calib.calibrate(measurements)
    except RankDeficientError as err:
        content = gyrocal.calib.report_dict(
            err.partial, err.unobservable, config.comments()
        )
        gyrocal.calib.write_report(report, content)
        click.echo("Partial report written to {path}.".format(path=report))
        raise
    gyrocal.calib.write_report(
        report, gyrocal.calib.report_dict(result, comments=config.comments())
    )
    click.echo(
        "Calibrated from {n} measurements, residual norm {res:.3g}, "
        "condition {cond:.3g}.".format(
            n=len(measurements), res=result.residual_norm, cond=result.condition
        )
    )
    click.echo("Report written to {path}.".format(path=report))


@main.command(help="Builds labelled datasets for every division factor.")
@click.option("--k", "k_values", type=int, multiple=True, help="Division factor.")
@handle_errors
def dataset(k_values):
    config = get_config(click.get_current_context())
    settings = config.dataset
    records = list(load_records(config).values())
    for k in requested_k(config, k_values):
        data = gyrocal.dataset.build_dataset(
            records,
            k,
            n_copies=settings["n_copies"],
            bias_sigma=settings["bias_sigma"],
            noise_sigma=settings["noise_sigma"],
            train_ratio=settings["train_ratio"],
            windows_per_copy=settings["windows_per_copy"],
            seed=config.seed,
        )
        path = gyrocal.dataset.save_dataset(
            data, dataset_dir(config, k), config.comments()
        )
        click.echo(
            "K={k}: {n} samples ({train} train, {test} test) in {path}.".format(
                k=k, n=len(data), train=len(data.train), test=len(data.test), path=path
            )
        )


def load_checked_dataset(config, k):
    directory = dataset_dir(config, k)
    manifest = gyrocal.dataset.read_manifest(directory)
    check_hash(config, manifest, "Dataset {path}".format(path=directory))
    data = gyrocal.dataset.load_dataset(directory)
    if data.k != k:
        msg = "Dataset {path} was built for K={found}, expected K={k}".format(
            path=directory, found=data.k, k=k
        )
        raise ConfigurationError(msg)
    return data


@main.command(help="Trains one bias network per division factor.")
@click.option("--k", "k_values", type=int, multiple=True, help="Division factor.")
@click.option(
    "--restart", is_flag=True, help="Ignores saved training state and starts over."
)
@handle_errors
def train(k_values, restart):
    config = get_config(click.get_current_context())
    comments = config.comments()
    for k in requested_k(config, k_values):
        data = load_checked_dataset(config, k)
        spec = config.network_spec(data.window_length)
        path = checkpoint_path(config, k)
        state_path = output_path(config, MODELS_DIR, "k{k}_state.bin".format(k=k))
        if restart and os.path.exists(state_path):
            os.remove(state_path)
        if os.path.exists(state_path):
            what = "Training state {path}".format(path=state_path)
            check_hash(config, read_metadata(state_path), what)
        result = gyrocal.estimator.train(
            data, spec, config.train_config, state_path=state_path, comments=comments
        )
        save_parameters(result.network, path)
        meta = {
            "k": k,
            "spec": dict(spec._asdict()),
            "best_epoch": result.best_epoch,
            "epochs_run": result.epochs_run,
        }
        meta.update(comments)
        write_metadata(path, meta)
        curve_path = output_path(config, MODELS_DIR, "k{k}_loss.csv".format(k=k))
        gyrocal.estimator.write_loss_curve(result.curve, curve_path, comments)
        click.echo(
            "K={k}: best validation RMSE {rmse:.5f} mrad/s at epoch {epoch}, "
            "checkpoint {path}.".format(
                k=k,
                rmse=min(result.curve.val_rmse),
                epoch=result.best_epoch,
                path=path,
            )
        )


def load_model(config, k):
    path = checkpoint_path(config, k)
    if not os.path.exists(path):
        msg = "Checkpoint {path} doesn't exist, run gyrocal train --k {k}".format(
            path=path, k=k
        )
        raise ConfigurationError(msg)
    meta = read_metadata(path)
    meta.raise_for_keys("spec")
    check_hash(config, meta, "Checkpoint {path}".format(path=path))
    spec = gyrocal.estimator.BiasNetSpec(**meta["spec"])
    network = gyrocal.estimator.build_network(spec, config.seed)
    return load_parameters(network, path)


@main.command(help="Reports bias RMSE versus sample duration.")
@click.option("--k", "k_values", type=int, multiple=True, help="Division factor.")
@handle_errors
def evaluate(k_values):
    config = get_config(click.get_current_context())
    ks = requested_k(config, k_values)
    datasets = {k: load_checked_dataset(config, k) for k in ks}
    models = {k: load_model(config, k) for k in ks}
    records = load_records(config)
    test_sources = sorted(set(datasets[ks[0]].test.sources))
    for k in ks[1:]:
        if sorted(set(datasets[k].test.sources)) != test_sources:
            raise ConfigurationError("Datasets don't share the same test sources")
    full_records = [records[source] for source in test_sources]
    result = gyrocal.evaluation.evaluate(models, datasets, full_records)
    comments = config.comments()
    path = output_path(config, "report.csv")
    text_path = gyrocal.evaluation.write_table(result, path, comments)
    duration = full_records[0].duration
    times = sorted(
        set(np.round(np.geomspace(1.0 / full_records[0].fs, duration, 40), 6))
        | set(row.t for row in result.rows)
    )
    curve = gyrocal.evaluation.error_vs_time(full_records, times)
    curve = gyrocal.evaluation.error_curve_with_models(curve, result)
    curve_path = output_path(config, "error_vs_time.csv")
    gyrocal.evaluation.write_frame(curve, curve_path, comments)
    click.echo(result.format_table(), nl=False)
    click.echo(
        "Report written to {path} and {text}.".format(path=path, text=text_path)
    )


@main.command(help="Exports residual of cumulative mean of a signal file.")
@click.argument("signal", type=click.Path())
@click.option(
    "--window", type=click.IntRange(min=2), default=200, help="Moving window."
)
@click.option(
    "--reference",
    type=float,
    nargs=3,
    default=None,
    help="Reference bias in rad/s when the record has no true bias.",
)
@handle_errors
def residuals(signal, window, reference):
    config = get_config(click.get_current_context())
    record = gyrocal.dataset.load_record(signal)
    frame = gyrocal.evaluation.residual_report(record, reference or None, window)
    base = os.path.splitext(os.path.basename(signal))[0]
    path = output_path(config, "residuals", base + ".csv")
    comments = config.comments()
    comments["envelope"] = "moving_std/sqrt(n)"
    gyrocal.evaluation.write_frame(frame, path, comments)
    click.echo(
        "Residuals of {n} samples written to {path}.".format(n=len(frame), path=path)
    )


if __name__ == "__main__":
    main()
