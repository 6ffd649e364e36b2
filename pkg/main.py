"""
Main application entry point
"""
import sys

from lattice_pimc.cli import main

if __name__ == "__main__":
    sys.exit(main())
