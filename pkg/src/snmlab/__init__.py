"""Exact evaluation and manipulability auditing of round-robin tournament rules."""

__version__ = "0.1.0"
