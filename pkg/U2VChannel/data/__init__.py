from .synthetic_rt import GroundTruth, RayRecord, Dataset, generate_dataset
