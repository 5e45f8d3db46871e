"""Evaluation metrics, gradient checks and ablation studies."""
