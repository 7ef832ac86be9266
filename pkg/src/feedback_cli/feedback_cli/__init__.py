"""Command-line scenarios, benchmarks and sweeps for the feedback solvers."""
