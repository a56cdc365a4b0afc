import numpy as np
import numpy.typing as npt
import torch

from . import denoiser as denoiser_module
from .module_types import base, diffusion_types


class TrainingError(Exception):

    def __init__(self, sample_index: int, message: str | None = None):
        self.sample_index = sample_index
        super().__init__(message or f'Non-finite training loss at batch sample {sample_index}')


class DiffusionModel(base.ArrayBase):
    """Everything needed to sample: network, schedule and the trajectory normalizer."""
    denoiser: denoiser_module.Denoiser
    normalizer: diffusion_types.Normalizer
    schedule: diffusion_types.NoiseSchedule
    point_scale: float = 3.0
    history: list[diffusion_types.EpochLoss] = []
    best_epoch: int = 0

    @property
    def horizon(self) -> int:
        return self.denoiser.horizon

    @property
    def dof(self) -> int:
        return self.denoiser.dof


def linear_schedule(steps: int = 50, beta_start: float = 1e-4, beta_end: float = 2e-2) -> diffusion_types.NoiseSchedule:
    """
    Linear betas with the DDPM posterior variance.

    The step 1 posterior variance is zero in closed form; it is clipped to the step 2 value.
    """
    if steps < 2:
        raise ValueError('Schedule needs at least two steps')

    return schedule_from_betas(np.linspace(beta_start, beta_end, steps))


def schedule_from_betas(betas: npt.ArrayLike) -> diffusion_types.NoiseSchedule:
    betas = np.asarray(betas, dtype=np.float64)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    previous = np.concatenate([[1.0], alpha_bars[:-1]])
    posterior_vars = (1.0 - previous) / (1.0 - alpha_bars) * betas
    posterior_vars[0] = posterior_vars[1]

    return diffusion_types.NoiseSchedule(
        betas=betas,
        alphas=alphas,
        alpha_bars=alpha_bars,
        posterior_vars=posterior_vars
    )


def forward_noise(
        schedule: diffusion_types.NoiseSchedule,
        trajectory: npt.ArrayLike,
        t: int,
        noise: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    alpha_bar = schedule.alpha_bar(t)
    noise = np.asarray(noise, dtype=np.float64)

    if not np.all(np.isfinite(noise)):
        raise ValueError('Noise must be finite')

    return np.sqrt(alpha_bar) * np.asarray(trajectory, dtype=np.float64) + np.sqrt(1.0 - alpha_bar) * noise


def posterior_mean(
        schedule: diffusion_types.NoiseSchedule,
        trajectory: npt.ArrayLike,
        t: int,
        predicted_noise: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    index = schedule.check_step(t)
    alpha = schedule.alphas[index]
    coefficient = (1.0 - alpha) / np.sqrt(1.0 - schedule.alpha_bars[index])

    return (np.asarray(trajectory, dtype=np.float64) - coefficient * np.asarray(predicted_noise)) / np.sqrt(alpha)


def posterior_variance(schedule: diffusion_types.NoiseSchedule, t: int) -> float:
    return float(schedule.posterior_vars[schedule.check_step(t)])


def true_posterior_mean(
        schedule: diffusion_types.NoiseSchedule,
        clean: npt.ArrayLike,
        noisy: npt.ArrayLike,
        t: int
) -> npt.NDArray[np.float64]:
    """Mean of q(x_{t-1} | x_t, x_0) written in terms of the clean sample."""
    index = schedule.check_step(t)
    beta = schedule.betas[index]
    alpha_bar = schedule.alpha_bars[index]
    previous = schedule.alpha_bar(t - 1)

    clean_coefficient = np.sqrt(previous) * beta / (1.0 - alpha_bar)
    noisy_coefficient = np.sqrt(schedule.alphas[index]) * (1.0 - previous) / (1.0 - alpha_bar)

    return clean_coefficient * np.asarray(clean) + noisy_coefficient * np.asarray(noisy)


def training_loss(
        denoiser: denoiser_module.Denoiser,
        schedule: diffusion_types.NoiseSchedule,
        trajectories: torch.Tensor,
        points: torch.Tensor,
        generator: torch.Generator
) -> torch.Tensor:
    """
    Mean squared noise prediction error over a batch of normalized trajectories.

    Steps are drawn uniformly from 1..T and noise from a standard normal, one of each per sample.
    """
    if len(trajectories) == 0:
        raise ValueError('Training batch must not be empty')

    dtype = trajectories.dtype
    alpha_bars = torch.as_tensor(schedule.alpha_bars, dtype=dtype)
    steps = torch.randint(1, schedule.steps + 1, (len(trajectories),), generator=generator)
    noise = torch.randn(trajectories.shape, generator=generator, dtype=dtype)

    alpha_bar = alpha_bars[steps - 1][:, None, None]
    noisy = torch.sqrt(alpha_bar) * trajectories + torch.sqrt(1.0 - alpha_bar) * noise
    per_sample = ((denoiser(noisy, steps, points) - noise) ** 2).mean(dim=(1, 2))

    finite = torch.isfinite(per_sample)

    if not bool(finite.all()):
        raise TrainingError(int(torch.nonzero(~finite)[0, 0]))

    return per_sample.mean()


def loss_and_gradients(
        denoiser: denoiser_module.Denoiser,
        schedule: diffusion_types.NoiseSchedule,
        trajectories: torch.Tensor,
        points: torch.Tensor,
        generator: torch.Generator
) -> tuple[float, dict[str, npt.NDArray[np.float64]]]:
    denoiser.zero_grad()
    loss = training_loss(denoiser, schedule, trajectories, points, generator)
    loss.backward()

    return float(loss), {
        name: parameter.grad.detach().numpy().astype(np.float64)
        for name, parameter in denoiser.named_parameters()
    }
