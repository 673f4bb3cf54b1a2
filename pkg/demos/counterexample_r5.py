"""
A signed radial measure in R^5
==============================

U is a mollified radial function in R^5 which is constant on the unit
ball and decays like 1/r outside. Its bilaplacian nu is a signed radial
measure supported near the unit sphere, and R^2 nu = 16 pi^2 grad U.
Away from the support the field approaches the value 3 pi^2 at 2 e1,
while on the support it shrinks with the mollification scale.
"""

import math

import numpy as np

from rieszlab import Params, QuadratureSpec, riesz_vector, total_mass
from rieszlab.constructions import (SIXTEEN_PI2, Counterexample5Spec, mollified_fields,
                                    nu_measure)

spec = Counterexample5Spec(delta=0.1)
nu = nu_measure(spec)
fields = mollified_fields(spec)
q = QuadratureSpec(rel_tol=1e-8)

print("total mass of nu:", total_mass(nu, q), " 16 pi^2 =", SIXTEEN_PI2)

# Two routes to the field: direct quadrature of the density, and the gradient of U
for r in (0.5, 1.0, 1.5, 2.0, 3.0):
    x = np.zeros(5)
    x[0] = r
    direct = riesz_vector(nu, x, Params(5, 2.0), q).vector[0]
    print(f"r = {r:3.1f}  direct {direct: .6f}  16 pi^2 dU/dr {SIXTEEN_PI2 * fields.grad_U(r)[0]: .6f}")

print("limit at 2 e1: -3 pi^2 =", -3 * math.pi ** 2)
