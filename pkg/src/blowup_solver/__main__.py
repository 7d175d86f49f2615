from blowup_solver.cli.main import run

run()
