"""fedsim: single-machine simulation of private federated learning.

The package is organized around a generic synchronous simulation loop:
an algorithm issues per-iteration contexts, a worker pool simulates the
sampled users and aggregates their weighted statistics, postprocessors
(clipping, noise) shape the aggregate, and the algorithm folds the
result back into the central model.
"""

__version__ = "0.1.0"
