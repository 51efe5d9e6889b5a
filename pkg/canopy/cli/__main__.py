"""python -m canopy.cli <command> ..."""

from .garden import main

main()
