"""Minimal numpy inference engine for the inverted-residual multi-task network."""
from .accounting import (count_macs, count_params, separable_conv_params, separable_savings,
                         standard_conv_params)
from .layers import conv2d, depthwise_conv, global_avg_pool, linear, pointwise_conv, relu6
from .model import MultiTaskNet, forward, inverted_residual
from .spec import (BlockSpec, Layer, ModelSpec, StemSpec, bundled_spec, expected_shapes,
                   layer_inventory, load_model_spec, spec_from_dict)
from .weights import (WeightStore, dumps, load_weights, loads, random_weights, save_weights,
                      zero_weights)

__all__ = [
    "BlockSpec", "Layer", "ModelSpec", "MultiTaskNet", "StemSpec", "WeightStore",
    "bundled_spec", "conv2d", "count_macs", "count_params", "depthwise_conv", "dumps",
    "expected_shapes", "forward", "global_avg_pool", "inverted_residual", "layer_inventory",
    "linear", "load_model_spec", "load_weights", "loads", "pointwise_conv", "random_weights",
    "relu6", "save_weights", "separable_conv_params", "separable_savings", "spec_from_dict",
    "standard_conv_params", "zero_weights",
]
