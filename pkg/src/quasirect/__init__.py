"""Quasi-rectangle motional states of a trapped ion from repeated conditional measurements."""
