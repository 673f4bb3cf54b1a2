"""
Where is the field of a radial measure largest?
===============================================

For a nonnegative radial measure, the field at any point off the support
is controlled by the field at a point of the support on the same ray:
the inner edge of the mass if the point sits in a hole, the outer edge
of the mass below it otherwise. ``radial_witness`` finds that point.
"""

import numpy as np

from rieszlab import Params, radial_witness, riesz_vector
from rieszlab import corpus

mu = corpus.random_radial(seed=7, d=3)
p = Params(3, 1.5)
print("support radii:", mu.density.support)

for w in corpus.off_support_queries(mu, 5, seed=7):
    res = radial_witness(mu, p, w)
    here = np.linalg.norm(riesz_vector(mu, w, p).vector)
    print(f"|x| = {np.linalg.norm(w):5.3f}  branch {res.branch:5s}  r* = {res.r_star:.4f}  "
          f"|R(x)| = {here:.4f}  ratio {res.ratio:.3f}  bound holds: {res.bound_holds}")
