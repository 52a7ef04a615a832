# Copyright 2026 The ATENT Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import numpy as np
import pytest

import atent


def test_two_gaussians_and_prediction():
    x, y = atent.two_gaussians(40, 6.0, seed=1)
    assert x.shape == (40, 2)
    assert x.min() >= 0.0 and x.max() <= 1.0
    model = atent.build_mlp([2, 8, 2], seed=3)
    assert model.parameter_count == 2 * 8 + 8 + 8 * 2 + 2
    pred = model.predict(x)
    assert len(pred) == 40
    assert model.accuracy(x, np.array(y)) == np.mean(np.array(pred) == np.array(y))


def test_linf_increment_projection():
    out = atent.project_linf_increment(np.array([0.05, 0.5, -0.5]), 10.0)
    np.testing.assert_allclose(out, [0.05, 0.1, -0.1])


def test_pgd_stays_in_the_ball():
    x, y = atent.two_gaussians(20, 4.0, seed=2)
    model = atent.build_mlp([2, 8, 2], seed=4)
    cfg = atent.AttackConfig()
    cfg.epsilon = 0.1
    cfg.steps = 5
    cfg.step_size = 0.05
    adv = atent.attack(model, x, np.array(y), cfg)
    assert np.abs(adv - x).max() <= 0.1 + 1e-9


def test_chain_returns_k_samples():
    x, y = atent.two_gaussians(10, 4.0, seed=3)
    model = atent.build_mlp([2, 4, 2], seed=5)
    cfg = atent.GibbsSamplerConfig()
    cfg.gamma = 10.0
    cfg.steps = 4
    out = atent.sample_chain(model, x, np.array(y), cfg, seed=1)
    assert len(out["samples"]) == 4
    assert out["samples"][0].shape == x.shape


def test_zero_sigma_smoothing_matches_prediction():
    x, _ = atent.two_gaussians(10, 4.0, seed=4)
    model = atent.build_mlp([2, 4, 2], seed=6)
    pred = model.predict(x)
    for i in range(10):
        assert atent.smooth_predict(model, x[i], 0.0, n_samples=3) == pred[i]


def test_checkpoint_round_trip(tmp_path):
    model = atent.build_mlp([3, 4, 2], seed=7)
    model.save(tmp_path / "m.atnt")
    assert atent.load_checkpoint(tmp_path / "m.atnt") == model


def test_bad_config_raises(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"trainer": {"defense": "atent_l2", "sampler": {"gama": 1}}}')
    with pytest.raises(ValueError, match="gama"):
        atent.run_experiment(p, output_dir=tmp_path / "out")


def test_gradient_suite_passes():
    results = atent.verify("gradients")
    assert results and all(r["passed"] for r in results)
