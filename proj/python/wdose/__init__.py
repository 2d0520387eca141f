"""Python access to the wdose warfarin dosing simulator."""

import json

from . import _core
from ._core import (
    ConfigError,
    DataMismatchError,
    DomainError,
    baseline_names,
    pttr_daily,
    pttr_rosendaal,
    reward,
    sensitivity,
)

__version__ = _core.__version__


def run_cli(*args):
    """Run a wdose command line; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])


def generate_cohort(n, seed):
    return json.loads(_core.generate_cohort_json(n, seed))


def simulate(patient, doses):
    """Latent INR for day 1 and after each daily dose."""
    return _core.simulate(json.dumps(patient), list(doses))


def run_baseline(name, patient):
    return json.loads(_core.run_baseline_json(name, json.dumps(patient)))


def run_checkpoint(path, patient):
    return json.loads(_core.run_checkpoint_json(str(path), json.dumps(patient)))


def patient_report(trajectory, sensitivity_class):
    return json.loads(_core.patient_report_json(json.dumps(trajectory), sensitivity_class))


__all__ = [
    "ConfigError",
    "DataMismatchError",
    "DomainError",
    "baseline_names",
    "generate_cohort",
    "patient_report",
    "pttr_daily",
    "pttr_rosendaal",
    "reward",
    "run_baseline",
    "run_checkpoint",
    "run_cli",
    "sensitivity",
    "simulate",
]
