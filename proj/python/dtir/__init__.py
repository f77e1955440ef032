# Copyright (c) 2026 dtir contributors
# SPDX-License-Identifier: Apache-2.0
"""Diffusion-training-enhanced image restoration: python bindings."""

from ._core import (
    ConfigError,
    ContractError,
    Model,
    NoiseSchedule,
    NumericsError,
    ShapeError,
    build_schedule,
    degrade,
    forward_diffuse,
    make_clean,
    psnr,
    restore,
    sample,
    ssim,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "Model",
    "NoiseSchedule",
    "NumericsError",
    "ShapeError",
    "build_schedule",
    "degrade",
    "forward_diffuse",
    "make_clean",
    "psnr",
    "restore",
    "sample",
    "ssim",
]
