"""
Counting lattice points with Gaussian integers
==============================================

The points on x**2 + y**2 = S come from the prime factors of S. Primes
1 mod 4 split as (a + ib)(a - ib), and every way of picking one factor from
each conjugate pair gives a new point.
"""
from goodrot import count_quadruplets, enumerate_solutions, factorize, gaussian_root

f = factorize(1025)
print("1025 =", f)
for q, _ in f.f_list:
    z = gaussian_root(q)
    print(f"  {q} = {z.re}**2 + {z.im}**2")

sols = enumerate_solutions(1025)
print("quadruplets:", sols.quadruplet_count)
print("first octant:", sols.octant())

# 625 = 5**4 has an axis point (25, 0) among its five quadruplets
print("625:", sorted((z.re, z.im) for z in enumerate_solutions(625).representatives))

# the family 2**(2n) + 1 has only primes 1 mod 4, so it is rich in points
for n in (39, 45, 51):
    S = 4**n + 1
    print(f"n={n}: h = {count_quadruplets(factorize(S))}  ({factorize(S)})")
