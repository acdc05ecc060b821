"""Quantum optics of excitonic composites."""
