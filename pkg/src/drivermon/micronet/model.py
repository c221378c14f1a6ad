"""Forward pass of the multi-task network."""
from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .layers import (as_tensor3, conv2d, depthwise_conv, global_avg_pool, linear,
                     pointwise_conv, relu6)
from .spec import BlockSpec, ModelSpec
from .weights import WeightStore


def inverted_residual(x, spec: BlockSpec, weights, prefix: str = "") -> np.ndarray:
    """Expand (1x1, ReLU6) -> depthwise (n x n, ReLU6) -> linear project (1x1).

    ``weights`` maps ``{prefix}expand.weight`` etc. to arrays. The input is
    added back when stride is 1 and channel counts match.
    """
    x = as_tensor3(x)
    if x.shape[0] != spec.in_channels:
        raise ShapeMismatch(f"block expects {spec.in_channels} channels, got {x.shape[0]}")
    h = relu6(pointwise_conv(x, weights[f"{prefix}expand.weight"], weights.get(f"{prefix}expand.bias")))
    h = relu6(depthwise_conv(h, weights[f"{prefix}depthwise.weight"], spec.stride,
                             weights.get(f"{prefix}depthwise.bias")))
    out = pointwise_conv(h, weights[f"{prefix}project.weight"], weights.get(f"{prefix}project.bias"))
    if spec.residual:
        out = out + x
    return out


class MultiTaskNet:
    """A validated (spec, weights) pair that maps a face crop to 209 raw logits."""

    def __init__(self, spec: ModelSpec, weights: WeightStore):
        self.spec = spec
        self.weights = weights.validate(spec)

    def features(self, image) -> list[np.ndarray]:
        """Feature maps after the stem and after every block."""
        spec, w = self.spec, self.weights
        x = as_tensor3(image)
        if x.shape != spec.input_size:
            raise ShapeMismatch(f"input shape {x.shape} != model input {spec.input_size}")
        x = relu6(conv2d(x, w["stem.conv.weight"], spec.stem.stride, w["stem.conv.bias"]))
        maps = [x]
        for i, block in enumerate(spec.blocks):
            x = inverted_residual(x, block, w, prefix=f"blocks.{i}.")
            maps.append(x)
        return maps

    def pooled(self, image) -> np.ndarray:
        maps = self.features(image)
        if not self.spec.blocks:
            return global_avg_pool(maps[0])
        return np.concatenate([global_avg_pool(maps[t + 1]) for t in self.spec.taps])

    def forward(self, image) -> np.ndarray:
        return linear(self.pooled(image), self.weights["head.weight"], self.weights["head.bias"])

    __call__ = forward


def forward(spec: ModelSpec, weights: WeightStore, image) -> np.ndarray:
    return MultiTaskNet(spec, weights).forward(image)
