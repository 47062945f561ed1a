"""Simulation harness: scenario replay against a running service plus
post-run latency analysis and figures."""
