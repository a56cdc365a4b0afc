from . import (
    base,
    dataset_types,
    diffusion_types,
    eval_types,
    expert_types,
    objective_types,
    planner_types,
    robot_types,
    scene_types
)
