"""Quantum speed limits checked against exact dynamics.

Frequencies given to builders are linear MHz; internal energies are rad/ns
and times are ns.
"""

__version__ = "0.1.0"
