from .benchmark import Benchmark
from .dataset import DatasetBuilder
from .expert import ExpertSolver
from .sampler import DiffusionPlanner
from .scene_generator import SceneGenerator
from .trainer import Trainer
