"""
soil/

Ground preparation: validated point sets and partitions, reading and
writing them, synthetic generators, and the shared error hierarchy.
"""

from .errors import EntropyGardenError, ValidationError, NumericalError, SizeGuardError
from .pointset import PointSet, HardPartition
from .generate import DatasetSpec, Dataset, gen_dataset, derive_rng, derive_seed

__all__ = [
    "EntropyGardenError",
    "ValidationError",
    "NumericalError",
    "SizeGuardError",
    "PointSet",
    "HardPartition",
    "DatasetSpec",
    "Dataset",
    "gen_dataset",
    "derive_rng",
    "derive_seed",
]
