"""
Small-ball probabilities of random probe maps
=============================================

A probe map adds up random coefficients on each chain block with weight
``j^-s``.  For a fixed vector ``z`` in layer ``j`` the probability that
``|L z| < eps 2^-j`` falls off like ``eps^N``; the script measures the
exponent for N = 1, 2, 3.
"""

import numpy as np

from embedlab.chain import OrthoChain
from embedlab.probe import ProbeConfig, loglog_slope, mu_bound_mc, sample_probe_map

# One block, aligned with z = 0.3 e_1 (layer 1).
chain = OrthoChain(bases={1: np.eye(1)}, dims={1: 1}, M_prime=1, dim=1)
z = np.array([0.3])
eps = np.logspace(-3.5, 0, 22)

for N in (1, 2, 3):
    res = mu_bound_mc(chain, ProbeConfig(N, 0.6, seed=N), None, z, 1, eps, 100_000)
    print(f"N={N}: slope {loglog_slope(res['rows']):.3f}, C_hat {res['C_hat']:.3g}")

print("\n  eps        p       95% CI              eps^N j^(sN)")
for row in res["rows"][::3]:
    print(f"  {row['eps']:.2e}  {row['p']:.5f}  [{row['ci_low']:.5f}, {row['ci_high']:.5f}]  {row['reference']:.2e}")

# A map on a three-block chain; the coefficients stay inside the cube.
chain = OrthoChain(bases={j: np.eye(3)[[j - 1]] for j in (1, 2, 3)}, dims={1: 1, 2: 1, 3: 1}, M_prime=1, dim=3)
L = sample_probe_map(chain, ProbeConfig(2, 1.0, seed=0))
print("\nsampled 2x3 map:\n", np.array2string(L.matrix, precision=4))
