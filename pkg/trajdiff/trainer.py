import copy
import logging

import numpy as np
import torch

from . import denoiser as denoiser_module
from . import diffusion
from .module_types import dataset_types, diffusion_types


class EmptyDatasetError(Exception):
    pass


def configure_determinism(seed: int, threads: int) -> None:
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(threads)


class Trainer:

    def __init__(
            self,
            config: diffusion_types.TrainConfig,
            arch: diffusion_types.DenoiserArch | None = None
    ):
        self.__config = config
        self.__arch = arch or diffusion_types.DenoiserArch()
        self.__logger = logging.getLogger('trajdiff.Trainer')

    def __split(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        order = np.random.default_rng(self.__config.seed).permutation(count)
        heldout = int(np.floor(self.__config.heldout_fraction * count)) if count > 1 else 0

        return np.sort(order[heldout:]), np.sort(order[:heldout])

    @staticmethod
    def __tensors(
            examples: list[dataset_types.TrainingExample],
            indices: np.ndarray,
            normalizer: diffusion_types.Normalizer
    ) -> tuple[torch.Tensor, torch.Tensor]:
        trajectories = np.stack([normalizer.normalize(examples[i].trajectory) for i in indices])
        features = np.stack([examples[i].features for i in indices])

        return (
            torch.as_tensor(trajectories, dtype=torch.float32),
            torch.as_tensor(features, dtype=torch.float32)
        )

    def __heldout_loss(
            self,
            denoiser: denoiser_module.Denoiser,
            schedule: diffusion_types.NoiseSchedule,
            trajectories: torch.Tensor,
            features: torch.Tensor
    ) -> float | None:
        if len(trajectories) == 0:
            return None

        # Same steps and noise every epoch so losses are comparable.
        generator = torch.Generator().manual_seed(self.__config.seed + 1)
        total = 0.0

        with torch.no_grad():
            for start in range(0, len(trajectories), self.__config.batch_size):
                batch = slice(start, start + self.__config.batch_size)
                loss = diffusion.training_loss(denoiser, schedule, trajectories[batch], features[batch], generator)
                total += float(loss) * len(trajectories[batch])

        return total / len(trajectories)

    def train(self, examples: list[dataset_types.TrainingExample]) -> diffusion.DiffusionModel:
        if not examples:
            raise EmptyDatasetError('Cannot train on an empty dataset')

        shapes = {example.trajectory.shape for example in examples}

        if len(shapes) != 1:
            raise ValueError(f'Trajectories must share one (H, d) shape, got {sorted(shapes)}')

        config = self.__config
        horizon, dof = shapes.pop()
        configure_determinism(config.seed, config.threads)

        train_indices, heldout_indices = self.__split(len(examples))
        normalizer = diffusion_types.Normalizer.fit([examples[i].trajectory for i in train_indices])
        schedule = diffusion.linear_schedule(config.steps, config.beta_start, config.beta_end)
        train_trajectories, train_features = self.__tensors(examples, train_indices, normalizer)
        heldout_trajectories, heldout_features = self.__tensors(examples, heldout_indices, normalizer) \
            if len(heldout_indices) else (torch.empty(0), torch.empty(0))

        denoiser = denoiser_module.Denoiser(dof, horizon, self.__arch)
        optimizer = torch.optim.Adam(denoiser.parameters(), lr=config.learning_rate)
        generator = torch.Generator().manual_seed(config.seed)

        self.__logger.info(
            f'Training on {len(train_indices)} trajectories ({len(heldout_indices)} held out), '
            f'H={horizon} d={dof} T={config.steps}'
        )

        history = []
        best_loss, best_epoch, best_state = None, config.epochs, None

        for epoch in range(1, config.epochs + 1):
            denoiser.train()
            order = torch.randperm(len(train_trajectories), generator=generator)
            total = 0.0

            for start in range(0, len(order), config.batch_size):
                batch = order[start:start + config.batch_size]
                optimizer.zero_grad()
                loss = diffusion.training_loss(
                    denoiser, schedule, train_trajectories[batch], train_features[batch], generator
                )
                loss.backward()
                optimizer.step()
                total += float(loss) * len(batch)

            denoiser.eval()
            heldout = self.__heldout_loss(denoiser, schedule, heldout_trajectories, heldout_features)
            history.append(diffusion_types.EpochLoss(
                epoch=epoch,
                train_loss=total / len(order),
                heldout_loss=heldout
            ))
            self.__logger.info(f'Epoch {epoch}/{config.epochs} train={history[-1].train_loss:.6f} heldout={heldout}')

            if heldout is not None and (best_loss is None or heldout < best_loss):
                best_loss, best_epoch, best_state = heldout, epoch, copy.deepcopy(denoiser.state_dict())

        if best_state is not None:
            denoiser.load_state_dict(best_state)
            self.__logger.info(f'Keeping epoch {best_epoch} with held-out loss {best_loss:.6f}')

        return diffusion.DiffusionModel(
            denoiser=denoiser.eval(),
            normalizer=normalizer,
            schedule=schedule,
            history=history,
            best_epoch=best_epoch,
            point_scale=config.point_scale
        )


def train(
        examples: list[dataset_types.TrainingExample],
        config: diffusion_types.TrainConfig,
        arch: diffusion_types.DenoiserArch | None = None
) -> diffusion.DiffusionModel:
    return Trainer(config, arch).train(examples)
