"""
Sections and slabs of the unit cube
===================================

The (D-1)-volume of the hyperplane ``{x . a = r}`` inside ``[-1/2, 1/2]^D``
equals the density at ``r`` of ``sum_k a_k U_k`` for independent uniforms
``U_k``.  This script evaluates it exactly for small D, by quadrature for
large D, and compares slab probabilities with Monte Carlo.
"""

import math

import numpy as np

from embedlab.cube_slice import SliceQuery, section_density, slab_volume_exact, slab_volume_mc, verify_ball_bound

# A coordinate normal cuts out a unit (D-1)-cube, whatever D is.
for D in (2, 7, 30):
    e1 = np.zeros(D)
    e1[0] = 1.0
    print(f"D={D:>2}  section through e_1: {section_density(e1, 0.0):.15f}")

# The diagonal of a 2-face gives the largest central section, sqrt(2).
a = np.zeros(6)
a[:2] = 1 / math.sqrt(2)
print(f"\nsection normal to (1,1,0,...)/sqrt2: {section_density(a, 0.0):.15f}  (sqrt2 = {math.sqrt(2):.15f})")

# Moving the hyperplane off-centre only shrinks the section.
for r in (0.0, 0.2, 0.4, 0.6, 0.7):
    print(f"  offset r={r:.1f}: {section_density(a, r):.6f}")

# Random normals stay below sqrt(2); central sections also stay above 1.
print()
for D in (3, 10, 40):
    rep = verify_ball_bound(D, 300, seed=D)
    print(f"D={D:>2}  central sections in [{rep['min_central']:.4f}, {rep['max_central']:.4f}]  "
          f"exceeds bound: {rep['exceeds_bound']}")

# A slab |y + a.x| <= eps: exact value against 10^6 uniform samples.
q = SliceQuery(np.array([3.0, 1.0, 2.0]) / math.sqrt(14), y=0.1, eps=0.05)
exact = slab_volume_exact(q).value
mc = slab_volume_mc(q, 10**6, seed=1)
print(f"\nslab probability exact {exact:.6f}, Monte Carlo {mc.value:.6f} +/- {mc.stderr:.6f}")
