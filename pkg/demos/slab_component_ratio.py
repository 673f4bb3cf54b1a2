"""
A thin slab where one component escapes the support
====================================================

The measure lives on a slab of half-width delta around the hyperplane
x1 = 0, cut off to the unit ball. As delta shrinks, the first component
of R^s mu stays bounded on the support but grows just outside it, so the
ratio of global to support sup grows without bound.

Runs in about three minutes on one core.
"""

from rieszlab import Params, QuadratureSpec, SupSearchSpec, sup_norm
from rieszlab.constructions import SlabMeasureSpec, prop21_measure

d, s = 3, 0.5
q = QuadratureSpec(rel_tol=1e-5)
search = SupSearchSpec(component=0, coarse_points=9, refine_rounds=2)

for delta in (0.2, 0.1, 0.05):
    mu = prop21_measure(SlabMeasureSpec(d=d, s=s, delta=delta))
    on = sup_norm(mu, Params(d, s), search, "support", q)
    off = sup_norm(mu, Params(d, s), search, "global", q)
    print(f"delta = {delta:5.2f}  sup on support {on.value:8.4f}  "
          f"global sup {off.value:8.4f} at {off.argmax.round(3)}  ratio {off.value / on.value:6.3f}")
