"""
Homogeneity and subspace chains
===============================

Greedy nets give localized covering counts; a log-log fit of those counts
estimates how many rho-balls a generic r-ball needs.  The same nets, taken
layer by layer on the difference set, produce the subspace chains that the
random maps are built on.
"""

import math

import numpy as np

from embedlab.chain import build_functional_chain, build_orthogonal_chain, project
from embedlab.covering import assouad_estimate, dyadic_scale_grid
from embedlab.fixtures import cantor_dust, decaying_orthogonal, grid
from embedlab.geometry import difference_set, dyadic_layers

# Planar grid: counts grow roughly like (r/rho)^2.  At these coarse scales
# the r-balls are only a few rho-cells wide, which pulls the fit below 2;
# the acceptance suite uses a 64x64 grid and finer rho.
fit = assouad_estimate(grid(40, 2), [(0.5, 1 / 8), (0.5, 1 / 16), (0.25, 1 / 16), (0.25, 1 / 8)])
print(f"40x40 grid: s_hom_hat = {fit.s_hom_hat:.3f}, M_hat = {fit.M_hat:.2f}")
for r, rho, count in fit.scale_pairs:
    print(f"   r={r:<6.4g} rho={rho:<8.4g} count={count:<4d} bound={fit.bound(r / rho):.1f}")

# Middle-thirds Cantor endpoints, probed at triadic scales.
fit = assouad_estimate(cantor_dust(7), [(1 / 3, 3.0 ** -(1 + m)) for m in range(1, 5)])
print(f"\nCantor level 7: s_hom_hat = {fit.s_hom_hat:.4f}  (log2/log3 = {math.log(2) / math.log(3):.4f})")

# The decaying orthogonal set and its difference set, split into dyadic layers.
X = decaying_orthogonal(10)
Z = difference_set(X)
layers = dyadic_layers(Z)
print(f"\n{len(X)} points, {len(Z)} differences, layers {layers.j_min}..{layers.j_max}")

chain = build_orthogonal_chain(layers, fit=assouad_estimate(Z, dyadic_scale_grid()))
print("orthogonal chain block sizes:", dict(sorted(chain.dims.items())))
print(f"Gram drift {chain.gram_drift():.1e}, M' = {chain.M_prime}")
worst = min(
    float(np.min(np.linalg.norm(project(chain, n, layers.layers[n]), axis=1)) * 2.0 ** (n + 2))
    for n in layers
)
print(f"min over layers of |Pi_n z| / 2^-(n+2): {worst:.3f}  (at least 1 by construction)")

# In the sup-norm model, signed coordinate functionals play the role of the blocks.
linf_layers = dyadic_layers(difference_set(decaying_orthogonal(10, "linf")))
fchain = build_functional_chain(linf_layers)
worst = min(float(np.min(fchain.best_value(n, linf_layers.layers[n]))) * 2.0 ** (n + 3) for n in linf_layers)
print(f"functional chain: min |psi(z)| / 2^-(n+3) = {worst:.3f}")
