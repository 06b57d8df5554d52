"""Experiment runs, summaries and ranking metrics."""
