"""Exact evaluation and model checking for the Lukasiewicz mu-calculus."""

from lmu.errors import InvariantViolation, LmuError, ParseError, ValidationError

__version__ = "0.1.0"
