"""Distance-threshold search over 3-D trajectory segments.

Segments are float64 arrays of shape (n, 10) with columns
traj, seg, x0, y0, z0, t0, x1, y1, z1, t1. Results have shape (k, 6):
query traj, query seg, entry traj, entry seg, t_begin, t_end.
"""

from ._core import (
    CapacityError,
    ComputationError,
    ConfigError,
    Error,
    FormatError,
    IntegrityError,
    IoError,
    ParseError,
    PreconditionError,
    brute_force,
    generate_random_dense,
    generate_random_walk,
    interaction_interval,
    read_dataset,
    search,
    write_dataset,
)

INDEXES = ("fsg", "temporal", "st", "rtree")

__all__ = [
    "INDEXES",
    "CapacityError",
    "ComputationError",
    "ConfigError",
    "Error",
    "FormatError",
    "IntegrityError",
    "IoError",
    "ParseError",
    "PreconditionError",
    "brute_force",
    "generate_random_dense",
    "generate_random_walk",
    "interaction_interval",
    "read_dataset",
    "search",
    "write_dataset",
]
