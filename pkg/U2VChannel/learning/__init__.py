from .mlp import MlpModel, AdamOptimizer
from .bpnn import TrainConfig, train, forward, preset_network, fit_exponential_baseline
from .gan import GanConfig, GanModel, train_gan, sample_offsets
from .clustering import kmeans, elbow_select, extract_offsets
