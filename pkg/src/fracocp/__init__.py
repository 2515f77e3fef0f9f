"""Pseudospectral optimal control of two-sided space-fractional diffusion."""

from fracocp.pipeline import RunResult, run
from fracocp.problems import OCProblem, example

__all__ = ["OCProblem", "RunResult", "example", "run"]
