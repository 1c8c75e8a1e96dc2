import json

from ._cutlocus import (
    CompatibilityError,
    ConfigError,
    DomainError,
    Error,
    NumericalError,
    UnsupportedError,
    _lambda1,
    _run_job,
    d4_roots,
    job_commands,
    trace_cdc,
)

__all__ = [
    "CompatibilityError",
    "ConfigError",
    "DomainError",
    "Error",
    "NumericalError",
    "UnsupportedError",
    "d4_roots",
    "first_conjugate_time",
    "job_commands",
    "run_job",
    "trace_cdc",
]


def run_job(job, threads=0, tol=0.0):
    """Run a job given as a dict; returns {"command", "artifacts", "summary"}."""
    return json.loads(_run_job(json.dumps(job), threads, tol))


def first_conjugate_time(manifold, source, theta, t_max=10.0):
    """lambda_1 along the ray leaving `source` at angle `theta`; inf when none before t_max."""
    return _lambda1(json.dumps(manifold), list(source), float(theta), float(t_max))
