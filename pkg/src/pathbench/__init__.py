"""Behavior-module composition benchmark.

Generates disrupted stimulus-response path datasets and compares four
from-scratch sequence learners on composing independently learned behavior
modules at test time.
"""

__version__ = "0.1.0"
