"""Benchmark curves, cost model and synthetic datasets."""
