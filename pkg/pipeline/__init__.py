"""Experiment harness and command-line entry point."""
