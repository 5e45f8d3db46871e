"""Numerical core: label distributions, joint loss, predictor network."""
