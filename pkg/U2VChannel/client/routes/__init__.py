from .gen_data import GenerateDataRoute
from .cluster import ClusterRoute
from .train_bpnn import TrainBpnnRoute
from .train_gan import TrainGanRoute
from .simulate import SimulateRoute
from .stats import StatsRoute, StatsOptions, Statistic

__all__ = [
    "GenerateDataRoute",
    "ClusterRoute",
    "TrainBpnnRoute",
    "TrainGanRoute",
    "SimulateRoute",
    "StatsRoute",
    "StatsOptions",
    "Statistic"
]
