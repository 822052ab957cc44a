"""Performance experiments and goal checks."""

from .runner import BenchConfig, Goal, Row, check_goals, format_report, read_csv, run_bench, write_csv
