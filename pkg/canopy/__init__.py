"""
canopy/

Orchestration: merged configuration, primitive registry, output envelopes,
run logs, bench runners and the `garden` command line.
"""
