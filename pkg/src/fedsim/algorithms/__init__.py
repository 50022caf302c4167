"""Federated algorithms built on the three-operation loop contract."""

from fedsim.algorithms.base import AlgorithmState, FederatedAlgorithm, UserResult
from fedsim.algorithms.fedavg import AdaFedProx, FedAvg, FedProx, adafedprox_update_mu
from fedsim.algorithms.scaffold import Scaffold

__all__ = [
    "AdaFedProx",
    "AlgorithmState",
    "FedAvg",
    "FedProx",
    "FederatedAlgorithm",
    "Scaffold",
    "UserResult",
    "adafedprox_update_mu",
]
