# Copyright (c) 2026 dtir contributors
# SPDX-License-Identifier: Apache-2.0
import math

import numpy as np
import pytest

import dtir


def test_schedule_shape_and_decay():
    sched = dtir.build_schedule(T=50, beta_start=0.02, beta_end=0.30)
    assert sched.T == 50
    assert len(sched.alpha_bar) == 51
    bars = sched.alpha_bar[1:]
    assert all(b1 > b2 for b1, b2 in zip(bars, bars[1:]))
    assert bars[-1] < 1e-3


def test_schedule_rejects_bad_range():
    with pytest.raises(ValueError):
        dtir.build_schedule(T=50, beta_start=0.5, beta_end=0.1)


def test_forward_diffuse_blends():
    sched = dtir.build_schedule()
    x0 = np.zeros((1, 8, 8), dtype=np.float32)
    eps = np.ones((1, 8, 8), dtype=np.float32)
    xt = dtir.forward_diffuse(x0, eps, 50, sched)
    expected = math.sqrt(1.0 - sched.alpha_bar[50])
    assert np.allclose(xt, expected, atol=1e-6)


def test_degrade_and_metrics():
    clean = dtir.make_clean(seed=7, n=1, channels=1, height=32, width=32)[0]
    noisy = dtir.degrade(clean, "gaussian-noise:0.1", seed=11)
    assert noisy.shape == clean.shape
    assert dtir.psnr(clean, clean) == pytest.approx(99.0)
    assert dtir.ssim(clean, clean) == pytest.approx(1.0)
    assert dtir.psnr(clean, noisy) < 99.0


def test_model_forward_and_checkpoint(tmp_path):
    model = dtir.Model(in_channels=1, base_channels=4, depth=2, embed_dim=8,
                       n_experts=3, adapter_dim=2, seed=3)
    x = np.zeros((1, 1, 8, 8), dtype=np.float32)
    y = model.forward(x, [5])
    assert y.shape == (1, 1, 8, 8)

    path = str(tmp_path / "model.ckpt")
    model.save(path)
    again = dtir.Model.load(path)
    y2 = again.forward(x, [5])
    assert np.array_equal(y, y2)


def test_restore_stays_in_range():
    model = dtir.Model(in_channels=1, base_channels=4, depth=2, embed_dim=8,
                       n_experts=3, adapter_dim=2, seed=5)
    clean = dtir.make_clean(seed=9, n=1, channels=1, height=16, width=16)[0]
    restored = dtir.restore(model, clean, 10)
    assert restored.shape == clean.shape
    assert restored.min() >= 0.0 and restored.max() <= 1.0
