"""
Log-Lipschitz exponents on the decaying orthogonal set
======================================================

On ``x_k = 2^-k e_k`` the random maps lose a logarithmic factor on small
differences.  Fitting ``min |L z| 2^j ~ c j^-gamma`` layer by layer shows a
smaller exponent in the Hilbert model than in the sup-norm model, and the
failure sets ``Q_j`` become rare once gamma is large enough.
"""

import numpy as np

from embedlab.chain import build_functional_chain, build_orthogonal_chain
from embedlab.covering import assouad_estimate, dyadic_scale_grid
from embedlab.distortion import gamma_threshold, failure_measure, fit_bilip_constants, profile, verify_almost_bilip
from embedlab.fixtures import decaying_orthogonal
from embedlab.geometry import difference_set, dyadic_layers
from embedlab.probe import ProbeConfig, sample_probe_map

K, N = 12, 3
X = decaying_orthogonal(K)
Z = difference_set(X)
layers = dyadic_layers(Z)
fit = assouad_estimate(Z, dyadic_scale_grid())
d_used = fit.s_hom_hat + 0.1
gamma = gamma_threshold(0.6, N, d_used) + 0.1
print(f"s_hom_hat {fit.s_hom_hat:.3f} -> d_used {d_used:.3f}, gamma {gamma:.3f}")

hilbert = build_orthogonal_chain(layers, fit=fit)
linf_layers = dyadic_layers(difference_set(decaying_orthogonal(K, "linf")))
banach = build_functional_chain(linf_layers)

g_h = [profile(sample_probe_map(hilbert, ProbeConfig(N, 0.6, "hilbert", seed=k)), layers).gamma_hat for k in range(100)]
g_b = [profile(sample_probe_map(banach, ProbeConfig(N, 1.1, "banach", seed=k)), linf_layers).gamma_hat
       for k in range(100)]
print(f"median gamma_hat: Hilbert {np.median(g_h):.3f}, sup-norm {np.median(g_b):.3f}")

# Each map with its own fitted constants.
ok = 0
for k in range(100):
    L = sample_probe_map(hilbert, ProbeConfig(N, 0.6, seed=k))
    c_L, rho_L = fit_bilip_constants(L, layers, gamma)
    ok += bool(verify_almost_bilip(L, X, gamma, c_L, rho_L))
print(f"{ok}/100 maps pass the two-sided log-Lipschitz check")

# Failure measures for a gamma above the threshold and for gamma = s.
cfg = ProbeConfig(N, 0.6, seed=1)
for g in (gamma, 0.6):
    rep = failure_measure(hilbert, cfg, None, layers, g, 2000, d_used)
    cum = rep.cumulative()
    print(f"\ngamma={g:.3f}: sum mu(Q_j) = {rep.tail_sum:.3f}, gamma threshold {'met' if rep.threshold_met else 'not met'}")
    print("   j  mu_hat   partial sum")
    for (j, s), row in zip(cum, (rep.per_j[j] for j, _ in cum)):
        print(f"  {j:>2}  {row['mu_hat']:.4f}  {s:.4f}")
