import numpy as np
import numpy.typing as npt
import pydantic

from . import base

MIN_SPAN = 0.1


class NoiseSchedule(base.ArrayBase):
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    posterior_vars: np.ndarray

    @pydantic.model_validator(mode='after')
    def validate_schedule(self) -> 'NoiseSchedule':
        if np.any(self.betas <= 0) or np.any(self.betas >= 1) or np.any(np.diff(self.betas) < 0):
            raise ValueError('Betas must be increasing and inside (0, 1)')

        return self

    @property
    def steps(self) -> int:
        return len(self.betas)

    def check_step(self, t: int) -> int:
        if not 1 <= t <= self.steps:
            raise ValueError(f'Diffusion step {t} outside [1, {self.steps}]')

        return t - 1

    def alpha_bar(self, t: int) -> float:
        """Cumulative product up to step t, with step 0 meaning no noise."""
        return 1.0 if t == 0 else float(self.alpha_bars[self.check_step(t)])


class Normalizer(base.ArrayBase):
    minimum: np.ndarray
    maximum: np.ndarray

    @pydantic.model_validator(mode='after')
    def validate_bounds(self) -> 'Normalizer':
        if self.minimum.shape != self.maximum.shape or np.any(self.maximum <= self.minimum):
            raise ValueError('Normalizer needs maximum > minimum in every dimension')

        return self

    @classmethod
    def fit(cls, trajectories: npt.ArrayLike) -> 'Normalizer':
        """Per-dimension range over every step of every trajectory; near-constant dimensions are widened."""
        flat = np.asarray(trajectories, dtype=np.float64)
        flat = flat.reshape(-1, flat.shape[-1])
        minimum, maximum = flat.min(axis=0), flat.max(axis=0)
        pad = np.maximum(MIN_SPAN - (maximum - minimum), 0.0) / 2

        return cls(minimum=minimum - pad, maximum=maximum + pad)

    @property
    def scale(self) -> npt.NDArray[np.float64]:
        """Half range: world units per normalized unit."""
        return (self.maximum - self.minimum) / 2

    @property
    def center(self) -> npt.NDArray[np.float64]:
        return (self.maximum + self.minimum) / 2

    def normalize(self, values: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return (np.asarray(values, dtype=np.float64) - self.center) / self.scale

    def denormalize(self, values: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return np.asarray(values, dtype=np.float64) * self.scale + self.center


class DenoiserArch(base.Base):
    point_features: int = 6
    point_widths: tuple[int, int] = (64, 64)
    time_dim: int = 128
    token_dim: int = 128
    width: int = 256
    blocks: int = 4
    kernel_size: int = 5
    head_dim: int = 128
    zero_head: bool = False

    @property
    def dilations(self) -> list[int]:
        return [2 ** k for k in range(self.blocks)]


class TrainConfig(base.Base):
    learning_rate: float = pydantic.Field(default=1e-4, ge=0)
    batch_size: int = pydantic.Field(default=64, gt=0)
    epochs: int = pydantic.Field(default=200, gt=0)
    seed: int = 0
    steps: int = pydantic.Field(default=50, gt=1)
    beta_start: float = pydantic.Field(default=1e-4, gt=0, lt=1)
    beta_end: float = pydantic.Field(default=2e-2, gt=0, lt=1)
    heldout_fraction: float = pydantic.Field(default=0.1, ge=0, lt=1)
    threads: int = pydantic.Field(default=1, gt=0)
    point_scale: float = pydantic.Field(default=3.0, gt=0)


class EpochLoss(base.Base):
    epoch: int
    train_loss: float
    heldout_loss: float | None = None
