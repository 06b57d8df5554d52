"""Surrogate-assisted feature selection."""
