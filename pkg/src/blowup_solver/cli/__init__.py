"""Command-line front end: ``blowup-solver solve | compare | sweep``."""

from blowup_solver.cli.main import run

__all__ = ["run"]
