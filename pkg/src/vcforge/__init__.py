"""Translate dumped verification conditions into proof-assistant theories,
harden verification sources, measure goals, and score proof attempts."""

__version__ = "0.1.0"
