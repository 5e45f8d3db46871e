"""Optimizer, training loop and cross-validation."""
