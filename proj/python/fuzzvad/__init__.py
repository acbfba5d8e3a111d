"""Python bindings for the fuzzvad core."""

import json as _json

from ._fuzzvad import (
    DomainError,
    FuzzvadError,
    IoError,
    NumericError,
    UsageError,
    bandpass,
    butterworth_response,
    cross_subject_groups,
    envelope,
    fcm_fit,
    fuzzify_type1,
    fuzzify_type2,
    spectrogram_shape,
    stft,
    sweep_clusters,
    type2_names,
    vad_to_cuboid,
)
from . import _fuzzvad

__all__ = [
    "DomainError",
    "FuzzvadError",
    "IoError",
    "NumericError",
    "UsageError",
    "bandpass",
    "butterworth_response",
    "cross_subject_groups",
    "envelope",
    "fcm_fit",
    "fuzzify_type1",
    "fuzzify_type2",
    "manifest_stats",
    "membership_defaults",
    "parameter_count",
    "run_experiment",
    "spectrogram_shape",
    "stft",
    "sweep_clusters",
    "synth_generate",
    "type2_names",
    "vad_to_cuboid",
]


def membership_defaults():
    return _json.loads(_fuzzvad.membership_defaults())


def synth_generate(out_dir, config=None):
    """Writes the synthetic benchmark and returns the manifest path."""
    return _fuzzvad.synth_generate(_json.dumps(config or {}), str(out_dir))


def manifest_stats(path):
    return _fuzzvad.manifest_stats(str(path))


def parameter_count(config=None):
    return _fuzzvad.parameter_count(_json.dumps(config or {}))


def run_experiment(manifest, config=None):
    """Stratified split, train and validate; returns the report as a dict."""
    return _json.loads(_fuzzvad.run_experiment(str(manifest), _json.dumps(config or {})))
