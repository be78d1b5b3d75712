"""Numerical L-fractional calculus."""
