"""Python bindings for the erwlab C++ core."""

import json

from ._erwlab import (
    ErwlabError,
    canonical_expr,
    eval_expr,
    exact_pmf,
    preset_names,
    run_cli,
    sa_terminal,
    simulate,
)
from . import _erwlab

__all__ = [
    "ErwlabError",
    "analyze",
    "canonical_expr",
    "eval_expr",
    "exact_pmf",
    "preset",
    "preset_names",
    "run_cli",
    "sa_terminal",
    "simulate",
]


def _text_params(params):
    return {str(k): str(v) for k, v in (params or {}).items()}


def analyze(name, **params):
    """Regime report of a preset as a dict."""
    return json.loads(_erwlab.analyze_json(name, _text_params(params)))


def preset(name, **params):
    """Resolved model JSON of a preset as a dict."""
    return json.loads(_erwlab.preset_json(name, _text_params(params)))
