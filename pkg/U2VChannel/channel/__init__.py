from .cir import *
from .stats import *
