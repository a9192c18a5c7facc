"""Multiscale substitution tilings: schemes, graphs, semi-flow patches and densities."""
