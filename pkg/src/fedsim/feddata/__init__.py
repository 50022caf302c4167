"""Federated dataset construction, partitioning, and cohort sampling."""

from fedsim.feddata.datasets import FederatedDataset, UserDataset
from fedsim.feddata.io import load_partition, save_partition
from fedsim.feddata.partition import partition_dirichlet, partition_iid
from fedsim.feddata.sampling import CooldownSampler, sample_cohort
from fedsim.feddata.synthetic import make_synthetic_classification

__all__ = [
    "CooldownSampler",
    "FederatedDataset",
    "UserDataset",
    "load_partition",
    "make_synthetic_classification",
    "partition_dirichlet",
    "partition_iid",
    "sample_cohort",
    "save_partition",
]
