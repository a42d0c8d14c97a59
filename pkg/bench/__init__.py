"""
Benchmark front end: scenario configuration, result files and subcommands.

Submodules are imported directly (``bench.config``, ``bench.scenario``,
``bench.outputs``, ``bench.commands``); the simulation package depends on
``bench.config``.
"""
