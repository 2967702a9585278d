"""Seeded sampling, phantoms and noise models."""

from .imageio import read_image, write_image, write_pgm
from .noise import NoiseModel, NoiseSpec, NoisyDataset, apply_noise
from .phantom import piecewise_constant_inclusions, shepp_logan
from .rng import CounterRNG
from .sampler import IndexSampler, sample_batch

__all__ = [
    "read_image",
    "write_image",
    "write_pgm",
    "NoiseModel",
    "NoiseSpec",
    "NoisyDataset",
    "apply_noise",
    "shepp_logan",
    "piecewise_constant_inclusions",
    "CounterRNG",
    "IndexSampler",
    "sample_batch",
]
