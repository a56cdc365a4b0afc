from . import benchmark_file, checkpoint, dataset_file, scene_file, trajectory_file
from .artifacts import MalformedArtifactError, MissingArtifactError
