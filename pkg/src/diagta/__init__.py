"""Reachability for timed automata with diagonal constraints using the LU simulation."""

__version__ = "0.1.0"
