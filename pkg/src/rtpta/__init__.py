"""Parametric schedulability analysis for single-processor real-time components.

The package models task sets as networks of parametric stopwatch automata,
synthesizes parameter constraints that preserve schedulability, and emits
timed-interface documents for component-based design.
"""

__version__ = "0.1.0"
