"""Nonconvex spectral regularization for low-rank matrix regression."""

from ._core import (
    ConfigError,
    Dataset,
    DivergenceError,
    Error,
    ParameterError,
    RegularizerSpec,
    check_lemmas,
    load_dataset,
    preset_names,
    preset_text,
    prox_nuclear_in_ball,
    run_experiment,
    scalar_concave,
    scalar_penalty,
    scalar_prox,
    simulate,
    solve,
    spectral_penalty,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "DivergenceError",
    "Error",
    "ParameterError",
    "RegularizerSpec",
    "check_lemmas",
    "load_dataset",
    "preset_names",
    "preset_text",
    "prox_nuclear_in_ball",
    "run_experiment",
    "scalar_concave",
    "scalar_penalty",
    "scalar_prox",
    "simulate",
    "solve",
    "spectral_penalty",
]
