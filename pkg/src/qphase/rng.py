"""Seeded random streams.

Every stream is a Philox (counter-based) generator keyed by a
``SeedSequence`` built from the run seed plus integer coordinates such as
``(delta_index, repetition)``.  A stream depends only on its coordinates,
never on the order in which streams are created, so parallel execution
reproduces serial results bit for bit.
"""
from __future__ import annotations

import os

import numpy as np

SEED_ENV_VAR = "QPHASE_SEED"
DEFAULT_SEED = 20240917


def stream(seed: int, *coords: int) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(c) for c in coords)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or not raw.strip():
        return DEFAULT_SEED
    return int(raw)
