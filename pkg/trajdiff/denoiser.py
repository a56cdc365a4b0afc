"""
Noise prediction network: a max-pooled per-point scene encoder conditioning a dilated 1-D convolutional
trajectory processor.
"""
import math

import numpy as np
import numpy.typing as npt
import torch
from torch import nn
from torch.nn import functional

from .module_types import diffusion_types, scene_types


def sinusoidal_embedding(positions: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    frequencies = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=positions.dtype, device=positions.device) / half
    )
    angles = positions[..., None] * frequencies
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=-1)


class PointEncoder(nn.Module):

    def __init__(self, arch: diffusion_types.DenoiserArch):
        super().__init__()
        first, second = arch.point_widths
        self.first = nn.Linear(arch.point_features, first)
        self.second = nn.Linear(first, second)

    def forward(self, points: torch.Tensor) -> torch.Tensor:
        features = functional.relu(self.second(functional.relu(self.first(points))))
        return features.max(dim=-2).values


class ResidualBlock(nn.Module):

    def __init__(self, arch: diffusion_types.DenoiserArch, dilation: int):
        super().__init__()
        padding = dilation * (arch.kernel_size - 1) // 2
        self.first = nn.Conv1d(arch.width, arch.width, arch.kernel_size, dilation=dilation, padding=padding)
        self.second = nn.Conv1d(arch.width, arch.width, arch.kernel_size, dilation=dilation, padding=padding)
        self.condition = nn.Linear(arch.point_widths[-1] + arch.time_dim, arch.width)

    def forward(self, x: torch.Tensor, condition: torch.Tensor) -> torch.Tensor:
        hidden = functional.mish(self.first(x)) + self.condition(condition)[..., None]
        return x + self.second(functional.mish(hidden))


class Denoiser(nn.Module):

    def __init__(self, dof: int, horizon: int, arch: diffusion_types.DenoiserArch):
        super().__init__()
        self.dof = dof
        self.horizon = horizon
        self.arch = arch
        self.encoder = PointEncoder(arch)
        self.token = nn.Linear(dof, arch.token_dim)
        self.expand = nn.Linear(arch.token_dim, arch.width)
        self.blocks = nn.ModuleList([ResidualBlock(arch, dilation) for dilation in arch.dilations])
        self.reduce = nn.Conv1d(arch.width, arch.head_dim, 1)
        self.head = nn.Linear(arch.head_dim, dof)

        if arch.zero_head:
            nn.init.zeros_(self.head.weight)
            nn.init.zeros_(self.head.bias)

    def forward(self, trajectory: torch.Tensor, steps: torch.Tensor, points: torch.Tensor) -> torch.Tensor:
        """
        trajectory (B, H, d) normalized, steps (B,) diffusion indices, points (B, M, features).
        Returns predicted noise (B, H, d).
        """
        if trajectory.shape[-2:] != (self.horizon, self.dof):
            raise ValueError(f'Expected trajectories of shape (*, {self.horizon}, {self.dof}), got {tuple(trajectory.shape)}')

        if points.shape[-1] != self.arch.point_features:
            raise ValueError(f'Expected {self.arch.point_features} point features, got {points.shape[-1]}')

        positions = torch.arange(self.horizon, dtype=trajectory.dtype, device=trajectory.device)
        tokens = self.token(trajectory) + sinusoidal_embedding(positions, self.arch.token_dim)
        hidden = self.expand(tokens).transpose(1, 2)

        condition = torch.cat([
            self.encoder(points),
            sinusoidal_embedding(steps.to(trajectory.dtype), self.arch.time_dim)
        ], dim=-1)

        for block in self.blocks:
            hidden = block(hidden, condition)

        reduced = functional.mish(self.reduce(hidden)).transpose(1, 2)
        return self.head(reduced)


def point_features(points: scene_types.ScenePoints, point_scale: float) -> npt.NDArray[np.float32]:
    features = points.features
    features[:, :2] /= point_scale
    return features.astype(np.float32)


def predict_noise(
        denoiser: Denoiser,
        trajectory: npt.ArrayLike,
        t: int,
        features: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    """Single-trajectory inference in the network's precision; returns float64."""
    dtype = next(denoiser.parameters()).dtype

    with torch.no_grad():
        prediction = denoiser(
            torch.as_tensor(np.asarray(trajectory), dtype=dtype)[None],
            torch.tensor([t], dtype=torch.long),
            torch.as_tensor(np.asarray(features), dtype=dtype)[None]
        )

    return prediction[0].numpy().astype(np.float64)
