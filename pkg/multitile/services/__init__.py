"""Scheme parsing, graph analysis, the substitution semi-flow and tile statistics."""
