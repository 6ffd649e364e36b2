"""Allow ``python -m lattice_pimc``."""
import sys

from lattice_pimc.cli import main

sys.exit(main())
