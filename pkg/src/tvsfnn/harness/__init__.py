"""Experiment harness: configs, seeded runs, sweeps and verification suites."""
