"""Tools for a small teaching language: transform tail recursion into loops,
check loop invariants statically and at runtime, and report on the design recipe."""

__version__ = "0.1.0"
