"""Conditioning of the row-scaled operator as an element degenerates.

Sweeps the skinny quadrilateral family down to eps = 1e-12 and prints the
1-norm and sup-norm condition numbers of the bordered, row-scaled Poisson
operator.  The numbers rise at first and then plateau: the discretization
stays solvable no matter how thin the element gets.

Equivalent CLI:  ultrasem cond-bench --n 12 --eps 1,1e-2,1e-4,...
"""

from ultrasem.cli import cond_bench

eps = [1.0, 1e-1, 1e-2, 1e-3, 1e-6, 1e-9, 1e-12]
for n in (8, 12):
    report = cond_bench(eps, n)
    print(f"n = {n}")
    print("  eps        kappa_1       kappa_inf")
    for e, k1, ki in zip(report.eps, report.kappa1, report.kappainf):
        print(f"  {e:8.0e}  {k1:12.5e}  {ki:12.5e}")
    plateau = report.kappainf[-1]
    drift = abs(report.kappainf[-2] - plateau) / plateau
    print(f"  plateau kappa_inf = {plateau:.5e} "
          f"(relative drift over last decade {drift:.1e})\n")
