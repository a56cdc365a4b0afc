"""
Checkpoint layout: one line of UTF-8 JSON header, then the parameters as a little-endian float32 blob in
manifest order.
"""
import json
import math
import pathlib

import numpy as np
import pydantic
import torch

from . import artifacts
from .. import denoiser as denoiser_module
from .. import diffusion
from ..module_types import diffusion_types

SCHEMA_VERSION = 1
FRAME = 'start'
BLOB_DTYPE = np.dtype('<f4')


def to_bytes(model: diffusion.DiffusionModel) -> bytes:
    manifest = []
    chunks = []
    offset = 0

    for name, tensor in model.denoiser.state_dict().items():
        data = tensor.detach().cpu().numpy().astype(BLOB_DTYPE)
        manifest.append({'name': name, 'shape': list(data.shape), 'byte_offset': offset})
        chunks.append(data.tobytes())
        offset += data.nbytes

    header = {
        'schema_version': SCHEMA_VERSION,
        'd': model.dof,
        'H': model.horizon,
        'T': model.schedule.steps,
        'arch': model.denoiser.arch.model_dump(mode='json'),
        'normalizer': {'min': model.normalizer.minimum.tolist(), 'max': model.normalizer.maximum.tolist()},
        'schedule': {'betas': model.schedule.betas.tolist()},
        'manifest': manifest,
        'frame': FRAME,
        'point_scale': model.point_scale
    }

    return (artifacts.dumps(header) + '\n').encode('utf-8') + b''.join(chunks)


def write(path: artifacts.PathLike, model: diffusion.DiffusionModel) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(model))
    return path


def from_bytes(path: artifacts.PathLike, raw: bytes) -> diffusion.DiffusionModel:
    header_bytes, separator, blob = raw.partition(b'\n')

    if not separator:
        raise artifacts.MalformedArtifactError(path, 'Header is not newline terminated')

    try:
        header = json.loads(header_bytes.decode('utf-8'))

        if header['schema_version'] != SCHEMA_VERSION or header['frame'] != FRAME:
            raise ValueError(f'Unsupported checkpoint version {header["schema_version"]} / frame {header["frame"]}')

        arch = diffusion_types.DenoiserArch.model_validate(header['arch'])
        network = denoiser_module.Denoiser(header['d'], header['H'], arch)
        state = {}

        for entry in header['manifest']:
            count = math.prod(entry['shape'])

            if entry['byte_offset'] + count * BLOB_DTYPE.itemsize > len(blob):
                raise ValueError(f'Parameter {entry["name"]} runs past the end of the blob')

            values = np.frombuffer(blob, dtype=BLOB_DTYPE, count=count, offset=entry['byte_offset'])
            state[entry['name']] = torch.from_numpy(values.reshape(entry['shape']).astype(np.float32))

        network.load_state_dict(state, strict=True)
        normalizer = diffusion_types.Normalizer(
            minimum=np.asarray(header['normalizer']['min'], dtype=np.float64),
            maximum=np.asarray(header['normalizer']['max'], dtype=np.float64)
        )
        schedule = diffusion.schedule_from_betas(header['schedule']['betas'])

        if schedule.steps != header['T']:
            raise ValueError(f'Schedule has {schedule.steps} betas but T={header["T"]}')

    except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValueError, RuntimeError,
            pydantic.ValidationError) as e:
        raise artifacts.MalformedArtifactError(path, str(e)) from e

    return diffusion.DiffusionModel(
        denoiser=network.eval(),
        normalizer=normalizer,
        schedule=schedule,
        point_scale=header.get('point_scale', 3.0)
    )


def read(path: artifacts.PathLike) -> diffusion.DiffusionModel:
    return from_bytes(path, artifacts.require(path).read_bytes())
