"""Declarative architecture description and its layer inventory.

A model is a 3x3 stem convolution, a stack of inverted residual blocks,
global average pooling of three tapped block outputs, and one linear head.
Batch normalization is assumed folded into the preceding convolution, so
every convolution carries a bias.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..indicators import OUTPUT_SIZE
from .layers import out_size


@dataclass(frozen=True)
class BlockSpec:
    in_channels: int
    out_channels: int
    expansion: int = 1
    stride: int = 1
    kernel: int = 3

    def __post_init__(self):
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("block channel counts must be positive")
        if self.expansion < 1:
            raise ValueError("expansion factor must be >= 1")
        if self.stride not in (1, 2):
            raise ValueError("stride must be 1 or 2")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError("kernel size must be odd")

    @property
    def hidden(self) -> int:
        return self.in_channels * self.expansion

    @property
    def residual(self) -> bool:
        return self.stride == 1 and self.in_channels == self.out_channels


@dataclass(frozen=True)
class StemSpec:
    out_channels: int = 16
    kernel: int = 3
    stride: int = 2
    in_channels: int = 3


@dataclass(frozen=True)
class ModelSpec:
    stem: StemSpec
    blocks: tuple[BlockSpec, ...]
    taps: tuple[int, ...]
    head_out: int = OUTPUT_SIZE
    input_size: tuple[int, int, int] = (3, 160, 160)
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "taps", tuple(int(t) for t in self.taps))
        object.__setattr__(self, "input_size", tuple(int(v) for v in self.input_size))
        if self.input_size[0] != self.stem.in_channels:
            raise ValueError("input channel count must match the stem")
        prev = self.stem.out_channels
        for i, b in enumerate(self.blocks):
            if b.in_channels != prev:
                raise ValueError(f"block {i} expects {b.in_channels} channels, previous layer gives {prev}")
            prev = b.out_channels
        if self.blocks:
            if list(self.taps) != sorted(set(self.taps)):
                raise ValueError("tap indices must be strictly increasing")
            if self.taps[-1] != len(self.blocks) - 1:
                raise ValueError("last tap must be the last block")
            if self.taps[0] < 0:
                raise ValueError("tap indices must be non-negative")
        elif self.taps:
            raise ValueError("a model without blocks cannot have taps")

    @property
    def feature_size(self) -> int:
        """Length of the pooled multi-scale vector fed to the head."""
        if not self.blocks:
            return self.stem.out_channels
        return sum(self.blocks[t].out_channels for t in self.taps)

    def with_input(self, c: int, h: int, w: int) -> "ModelSpec":
        return ModelSpec(self.stem, self.blocks, self.taps, self.head_out, (c, h, w), self.name)


@dataclass(frozen=True)
class Layer:
    """One parameterized layer: weight/bias tensor shapes and its MAC count."""

    name: str
    kind: str  # conv | depthwise | pointwise | linear
    weight_shape: tuple[int, ...]
    bias_shape: tuple[int, ...] | None
    in_hw: tuple[int, int]
    out_hw: tuple[int, int]
    macs: int
    stride: int = 1

    @property
    def params(self) -> int:
        n = 1
        for d in self.weight_shape:
            n *= d
        if self.bias_shape is not None:
            n += self.bias_shape[0]
        return n


def layer_inventory(spec: ModelSpec) -> list[Layer]:
    """Every parameterized layer of ``spec`` in execution order."""
    _, h, w = spec.input_size
    layers = []
    st = spec.stem
    oh, ow = out_size(h, st.stride), out_size(w, st.stride)
    layers.append(Layer("stem.conv", "conv", (st.out_channels, st.in_channels, st.kernel, st.kernel),
                        (st.out_channels,), (h, w), (oh, ow),
                        oh * ow * st.kernel * st.kernel * st.in_channels * st.out_channels, st.stride))
    h, w = oh, ow
    for i, b in enumerate(spec.blocks):
        p = f"blocks.{i}"
        layers.append(Layer(f"{p}.expand", "pointwise", (b.hidden, b.in_channels), (b.hidden,),
                            (h, w), (h, w), h * w * b.in_channels * b.hidden))
        oh, ow = out_size(h, b.stride), out_size(w, b.stride)
        layers.append(Layer(f"{p}.depthwise", "depthwise", (b.hidden, b.kernel, b.kernel), (b.hidden,),
                            (h, w), (oh, ow), oh * ow * b.kernel * b.kernel * b.hidden, b.stride))
        layers.append(Layer(f"{p}.project", "pointwise", (b.out_channels, b.hidden), (b.out_channels,),
                            (oh, ow), (oh, ow), oh * ow * b.hidden * b.out_channels))
        h, w = oh, ow
    f = spec.feature_size
    layers.append(Layer("head", "linear", (spec.head_out, f), (spec.head_out,), (1, 1), (1, 1),
                        f * spec.head_out))
    return layers


def expected_shapes(spec: ModelSpec) -> dict[str, tuple[int, ...]]:
    shapes = {}
    for layer in layer_inventory(spec):
        shapes[f"{layer.name}.weight"] = layer.weight_shape
        if layer.bias_shape is not None:
            shapes[f"{layer.name}.bias"] = layer.bias_shape
    return shapes


def spec_from_dict(data: dict) -> ModelSpec:
    """Build a spec from the JSON model description.

    Block entries give ``out``, ``t`` (expansion), ``s`` (stride) and
    optionally ``kernel`` and ``repeat``; input channels are chained from
    the previous layer. Repeated entries use stride ``s`` only on the first
    copy. ``taps`` index the expanded block list.
    """
    known = {"name", "input", "stem", "blocks", "taps", "head_out"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown model spec keys: {sorted(unknown)}")
    stem_d = dict(data.get("stem", {}))
    stem = StemSpec(out_channels=int(stem_d.pop("out", 16)), kernel=int(stem_d.pop("kernel", 3)),
                    stride=int(stem_d.pop("stride", 2)))
    if stem_d:
        raise ValueError(f"unknown stem keys: {sorted(stem_d)}")
    blocks = []
    prev = stem.out_channels
    for entry in data.get("blocks", []):
        entry = dict(entry)
        out = int(entry.pop("out"))
        t = int(entry.pop("t", 1))
        s = int(entry.pop("s", 1))
        kernel = int(entry.pop("kernel", 3))
        repeat = int(entry.pop("repeat", 1))
        if entry:
            raise ValueError(f"unknown block keys: {sorted(entry)}")
        for r in range(repeat):
            blocks.append(BlockSpec(prev, out, t, s if r == 0 else 1, kernel))
            prev = out
    taps = data.get("taps")
    if taps is None:
        taps = [len(blocks) - 1] if blocks else []
    input_size = tuple(data.get("input", (3, 160, 160)))
    return ModelSpec(stem, tuple(blocks), tuple(taps), int(data.get("head_out", OUTPUT_SIZE)),
                     input_size, str(data.get("name", "model")))


def load_model_spec(path) -> ModelSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


BUNDLED_MODELS = Path(__file__).resolve().parent.parent / "data" / "models"


def bundled_spec(name: str) -> ModelSpec:
    """Load one of the shipped variants: ``tiny``, ``small`` or ``large``."""
    return load_model_spec(BUNDLED_MODELS / f"{name}.json")
