"""Parameter/MAC accounting for the bundled multi-task nets, plus one forward pass.

Run: python3 demos/micronet_accounting.py
"""
import numpy as np

from drivermon.indicators import decode_output_vector
from drivermon.micronet import (MultiTaskNet, bundled_spec, count_macs, count_params, random_weights,
                                separable_conv_params, separable_savings, standard_conv_params)

for name in ("tiny", "small", "large"):
    spec = bundled_spec(name)
    print(f"{name:>6}: input {spec.input_size}  params {count_params(spec):>9,}  "
          f"MACs {count_macs(spec):>13,}")

n, c, k = 3, 8, 16
print(f"\n{n}x{n} conv {c}->{k}: standard {standard_conv_params(n, c, k)} weights, "
      f"separable {separable_conv_params(n, c, k)}, saving {separable_savings(n, c, k)}")

spec = bundled_spec("tiny")
net = MultiTaskNet(spec, random_weights(spec, seed=0))
x = np.random.default_rng(0).uniform(0, 1, spec.input_size).astype(np.float32)
out = net.forward(x)
print(f"\nforward: output vector of {out.size} values")
face = decode_output_vector(out)
print(f"decoded: eye_open {np.round(face.eye_open, 3)}  mouth {np.round(face.mouth, 3)}  head {np.round(face.head, 3)}")
