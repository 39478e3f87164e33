"""
Entry point for running qres as a module: python -m qres
"""

from qres.cli.commands import app

if __name__ == "__main__":
    app()
