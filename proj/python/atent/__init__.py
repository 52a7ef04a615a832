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
"""Adversarial training via entropic regularization (C++ core)."""

from ._atent import (
    AttackConfig,
    AttackKind,
    ConfigError,
    Error,
    FormatError,
    GibbsSamplerConfig,
    LinfMode,
    Model,
    NormKind,
    ShapeError,
    attack,
    build_mlp,
    load_checkpoint,
    project_linf_increment,
    robust_accuracy,
    run_experiment,
    sample_chain,
    smooth_predict,
    two_gaussians,
    verify,
)

__all__ = [
    "AttackConfig",
    "AttackKind",
    "ConfigError",
    "Error",
    "FormatError",
    "GibbsSamplerConfig",
    "LinfMode",
    "Model",
    "NormKind",
    "ShapeError",
    "attack",
    "build_mlp",
    "load_checkpoint",
    "project_linf_increment",
    "robust_accuracy",
    "run_experiment",
    "sample_chain",
    "smooth_predict",
    "two_gaussians",
    "verify",
]
