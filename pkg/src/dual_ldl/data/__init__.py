"""Rater records, label bundles, synthetic panels and splits."""
