"""Poisson on a single quadrilateral, including absurdly skinny ones.

Solves -with manufactured forcing- on a moderately distorted quad, then on
elements with aspect ratios up to 1e100, printing the sampled error.  The
point: accuracy does not degrade as the element degenerates.
"""

import numpy as np

from ultrasem import PdeCoefficients, Quad, bilinear_coeffs, solve_element_dirichlet

pde = PdeCoefficients.poisson()

uex = lambda x, y: np.sin(np.pi * x) * np.cos(np.pi * y) + x * y
fex = lambda x, y: -2 * np.pi ** 2 * np.sin(np.pi * x) * np.cos(np.pi * y)


def sampled_error(sol, quad):
    t = np.linspace(-1, 1, 40)
    R, S = np.meshgrid(t, t)
    X, Y = bilinear_coeffs(quad)(R, S)
    return np.max(np.abs(sol.eval(R, S) - uex(X, Y)))


print("convergence on a distorted quadrilateral")
quad = Quad([(0.0, 0.0), (1.1, 0.2), (1.3, 1.4), (-0.2, 0.9)])
for n in (6, 10, 14, 18, 22):
    sol = solve_element_dirichlet(pde, quad, n, fex, uex)
    print(f"  n = {n:2d}   max error = {sampled_error(sol, quad):.3e}")

print("\nskinny elements: vertices (0,0), (1,1-eps/2), (1,1), (1/2,(1+eps)/2)")
for eps in (1e-2, 1e-6, 1e-10):
    quad = Quad([(0, 0), (1, 1 - 0.5 * eps), (1, 1), (0.5, 0.5 + 0.5 * eps)])
    sol = solve_element_dirichlet(pde, quad, 24, fex, uex)
    print(f"  eps = {eps:7.0e}   max error = {sampled_error(sol, quad):.3e}")

print("\nan element 1e100 times longer than wide (harmonic solution)")
L = 1e100
quad = Quad([(0, 0), (L, 0), (L, 2), (0, 1)])
g = lambda x, y: (x / L) + y + (x / L) * y
sol = solve_element_dirichlet(pde, quad, 10, lambda x, y: 0 * x, g)
t = np.linspace(-1, 1, 30)
R, S = np.meshgrid(t, t)
X, Y = bilinear_coeffs(quad)(R, S)
print(f"  max error = {np.max(np.abs(sol.eval(R, S) - g(X, Y))):.3e}")
