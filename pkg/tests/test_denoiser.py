import numpy as np
import pytest
import torch

from trajdiff import denoiser, diffusion

from .conftest import relative_error


def inputs(batch: int = 3, horizon: int = 8, dof: int = 6, points: int = 20, dtype=torch.float32):
    generator = torch.Generator().manual_seed(0)
    return (
        torch.randn((batch, horizon, dof), generator=generator, dtype=dtype),
        torch.randint(1, 6, (batch,), generator=generator),
        torch.randn((batch, points, 6), generator=generator, dtype=dtype)
    )


def test_output_shape(tiny_arch):
    torch.manual_seed(0)
    network = denoiser.Denoiser(6, 8, tiny_arch)
    trajectory, steps, points = inputs()

    assert network(trajectory, steps, points).shape == (3, 8, 6)


def test_point_order_does_not_matter(tiny_arch):
    torch.manual_seed(0)
    network = denoiser.Denoiser(6, 8, tiny_arch).eval()
    trajectory, steps, points = inputs()
    shuffled = points[:, torch.randperm(points.shape[1], generator=torch.Generator().manual_seed(1))]

    with torch.no_grad():
        assert torch.allclose(network(trajectory, steps, points), network(trajectory, steps, shuffled), atol=1e-6)


def test_zero_head_predicts_zero_noise(tiny_arch):
    network = denoiser.Denoiser(6, 8, tiny_arch.model_copy(update={'zero_head': True}))
    trajectory, steps, points = inputs()

    with torch.no_grad():
        assert torch.all(network(trajectory, steps, points) == 0)


def test_rejects_wrong_shapes(tiny_arch):
    network = denoiser.Denoiser(6, 8, tiny_arch)
    trajectory, steps, points = inputs()

    with pytest.raises(ValueError):
        network(trajectory[:, :5], steps, points)

    with pytest.raises(ValueError):
        network(trajectory, steps, points[..., :4])


def test_predict_noise_returns_float64(tiny_model):
    features = np.zeros((10, 6), dtype=np.float32)
    prediction = denoiser.predict_noise(tiny_model.denoiser, np.zeros((8, 6)), 3, features)

    assert prediction.shape == (8, 6)
    assert prediction.dtype == np.float64


def test_sinusoidal_embedding_is_bounded():
    embedding = denoiser.sinusoidal_embedding(torch.arange(50, dtype=torch.float64), 16)

    assert embedding.shape == (50, 16)
    assert torch.all(embedding.abs() <= 1)


def test_parameter_gradients_match_finite_differences(tiny_arch):
    torch.manual_seed(0)
    network = denoiser.Denoiser(6, 8, tiny_arch).double()
    schedule = diffusion.linear_schedule(5)
    trajectory, _, points = inputs(dtype=torch.float64)

    def loss() -> float:
        with torch.no_grad():
            return float(diffusion.training_loss(network, schedule, trajectory, points, torch.Generator().manual_seed(7)))

    _, gradients = diffusion.loss_and_gradients(
        network, schedule, trajectory, points, torch.Generator().manual_seed(7)
    )
    rng = np.random.default_rng(0)
    parameters = dict(network.named_parameters())
    analytic, numeric = [], []

    for name in sorted(parameters):
        parameter = parameters[name]

        for _ in range(2):
            index = tuple(int(rng.integers(n)) for n in parameter.shape)
            original = float(parameter.data[index])

            parameter.data[index] = original + 1e-6
            upper = loss()
            parameter.data[index] = original - 1e-6
            lower = loss()
            parameter.data[index] = original

            analytic.append(gradients[name][index])
            numeric.append((upper - lower) / 2e-6)

    assert len(analytic) >= 20
    assert relative_error(np.array(analytic), np.array(numeric)) < 1e-4
