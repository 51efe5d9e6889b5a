# experiment.py
#
# Run a garden experiment by path; the experiment's `kind` picks the command.
#   python experiment.py garden/experiments/blob_correlation.yml --profile dev

import sys

from canopy.cli.garden import run
from canopy.config import load_experiment

if len(sys.argv) < 2:
    print("Usage: python experiment.py <experiment.yml> [garden flags...]")
    sys.exit(2)

path, extra = sys.argv[1], sys.argv[2:]
kind = load_experiment(path)["kind"]
sys.exit(run([kind, "--experiment", path, *extra]))
