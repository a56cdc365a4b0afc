import math

from ..module_types import robot_types

LINK_LENGTHS = [0.4, 0.3, 0.2]
BASE_RADIUS = 0.25
ARM_LIMIT = 2.9
BASE_SURFACE_POINTS = 12
LINK_SURFACE_POINTS = 4

# End-effector frame: x points out of the palm, fingers straddle the y axis.
GRIPPER_TEMPLATE = [
    (0.0, -0.04),
    (0.0, 0.0),
    (0.0, 0.04),
    (0.03, -0.04),
    (0.06, -0.04),
    (0.03, 0.04),
    (0.06, 0.04),
    (-0.03, 0.0),
]


def circle_points(radius: float, count: int) -> list[robot_types.Point]:
    return [
        (radius * math.cos(2 * math.pi * k / count), radius * math.sin(2 * math.pi * k / count))
        for k in range(count)
    ]


def link_points(length: float, count: int) -> list[robot_types.Point]:
    return [((k + 0.5) * length / count, 0.0) for k in range(count)]


def default_robot(
        link_lengths: list[float] | None = None,
        base_radius: float = BASE_RADIUS,
        arm_limit: float = ARM_LIMIT
) -> robot_types.RobotModel:
    link_lengths = link_lengths or LINK_LENGTHS
    unbounded = robot_types.UNBOUNDED

    return robot_types.RobotModel(
        link_lengths=link_lengths,
        base_radius=base_radius,
        joint_lower=[-unbounded] * 3 + [-arm_limit] * len(link_lengths),
        joint_upper=[unbounded] * 3 + [arm_limit] * len(link_lengths),
        surface_template=[circle_points(base_radius, BASE_SURFACE_POINTS)] + [
            link_points(length, LINK_SURFACE_POINTS) for length in link_lengths
        ],
        gripper_template=GRIPPER_TEMPLATE
    )
