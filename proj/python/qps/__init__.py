"""Python access to the qps numerics core."""

import json

from ._qps import eigenvalues, golden, log_det, lyapunov, schedule, suite_names, version
from ._qps import run_suite_json as _run_suite_json


def run_suite(name, seed=1, lambda_=1e4, trials=200):
    """Run a property suite and return its report as a dict."""
    return json.loads(_run_suite_json(name, seed, lambda_, trials))


__all__ = ["eigenvalues", "golden", "log_det", "lyapunov", "run_suite", "schedule", "suite_names", "version"]
