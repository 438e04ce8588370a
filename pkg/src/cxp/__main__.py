from cxp.cli import run

run()
