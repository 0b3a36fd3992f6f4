from .kinematics import *
from .scene import Scene, Scatterer, box_facets, ground_facets
from .paths import PathKind, PathGeometry, enumerate_paths, LOS_PATH_ID
