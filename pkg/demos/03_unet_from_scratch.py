"""
A U-Net in plain NumPy
======================

Four pooling levels, same padding, ELU activations and a linear 1 x 1 head.
Backpropagation is written by hand; here we check it against finite
differences on a small double-precision model.
"""

import numpy as np

from eogscrub.unet import UNet, UNetConfig, param_shapes

cfg = UNetConfig(depth=4, base_width=2)
model = UNet(cfg, seed=0, dtype=np.float64, init="he")
print(f"{model.n_params} parameters in {len(param_shapes(cfg))} tensors")
for name in ("enc0.conv1.w", "mid.conv2.w", "dec0.up.w", "head.w"):
    print(f"  {name:<13} {param_shapes(cfg)[name]}")

rng = np.random.default_rng(1)
x = rng.uniform(size=(1, 1, 16, 16))
weight = rng.standard_normal((1, 1, 16, 16))

out, cache = model.forward(x)
grads = model.backward(cache, weight)  # gradient of sum(weight * out)

# %%
# Compare a handful of entries with central differences.

h = 1e-5
for name in ("enc0.conv1.w", "enc3.conv2.b", "mid.conv1.w", "dec2.up.w", "head.b"):
    flat = model.params[name].reshape(-1)
    i = int(rng.integers(flat.size))
    old = flat[i]
    flat[i] = old + h
    up = np.sum(weight * model.forward(x)[0])
    flat[i] = old - h
    down = np.sum(weight * model.forward(x)[0])
    flat[i] = old
    numeric = (up - down) / (2 * h)
    print(f"{name:<13}[{i:>3}] backprop {grads[name].reshape(-1)[i]: .6e}  numeric {numeric: .6e}")

# %%
# The default initialization starts the network close to the identity map.

near_id = UNet(UNetConfig(base_width=4), seed=0)
plane = rng.uniform(size=(1, 1, 80, 80))
print(f"dirac init: mean |f(x) - x| = {np.abs(near_id.predict(plane) - plane).mean():.4f}")
