"""Parameter and multiply-accumulate accounting.

MACs per layer: dense conv ``oh*ow*n*n*c*k``, depthwise ``oh*ow*n*n*c``,
pointwise ``h*w*c*k``, linear head ``in*out``. Bias additions, activations,
pooling and residual sums are not counted.
"""
from __future__ import annotations

from .spec import ModelSpec, layer_inventory


def count_params(spec: ModelSpec) -> int:
    return sum(layer.params for layer in layer_inventory(spec))


def count_macs(spec: ModelSpec, input_hw: tuple[int, int] | None = None) -> int:
    if input_hw is not None:
        spec = spec.with_input(spec.input_size[0], *input_hw)
    return sum(layer.macs for layer in layer_inventory(spec))


def standard_conv_params(n: int, c: int, k: int, bias: bool = False) -> int:
    return n * n * c * k + (k if bias else 0)


def separable_conv_params(n: int, c: int, k: int, bias: bool = False) -> int:
    """Depthwise (c filters of n x n) followed by pointwise (k filters of 1x1xc)."""
    return n * n * c + c * k + ((c + k) if bias else 0)


def separable_savings(n: int, c: int, k: int) -> int:
    """Bias-free parameter saving of the separable factorization: c(n^2(k-1) - k)."""
    return c * (n * n * (k - 1) - k)


def report(spec: ModelSpec) -> dict:
    layers = layer_inventory(spec)
    return {
        "name": spec.name,
        "input": list(spec.input_size),
        "layers": [
            {"name": l.name, "kind": l.kind, "weight_shape": list(l.weight_shape),
             "out_hw": list(l.out_hw), "params": l.params, "macs": l.macs}
            for l in layers
        ],
        "total_params": sum(l.params for l in layers),
        "total_macs": sum(l.macs for l in layers),
    }
