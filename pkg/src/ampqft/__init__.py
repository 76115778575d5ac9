"""Statevector simulation and closed-form analysis of amplified period finding."""
from .analytic import AlgKind, ProbTable, analytic_prob, analytic_table
from .oracle import CompositeOracle, ErrorStream, PeriodicSet, make_periodic, sample_error_stream

__all__ = [
    "AlgKind",
    "CompositeOracle",
    "ErrorStream",
    "PeriodicSet",
    "ProbTable",
    "analytic_prob",
    "analytic_table",
    "make_periodic",
    "sample_error_stream",
]
