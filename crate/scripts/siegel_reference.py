#!/usr/bin/env python3
"""Haar-average of primitive-vector ball counts on unimodular lattices in R^2.

Samples tau = x + iy from the standard fundamental domain
    F = { |x| <= 1/2, |tau| >= 1 }
of the modular group with the hyperbolic measure dx dy / y^2, maps tau to the
unimodular lattice spanned by (1, 0)/sqrt(y) and (x, y)/sqrt(y), and averages
S_r = #{primitive v in lattice : |v| <= r}.

With u = 1/y the measure becomes dx du on { |x| <= 1/2, 0 < u <= 1/sqrt(1-x^2) },
so rejection sampling from a box gives exact Haar samples.

Usage: siegel_reference.py [samples] [seed]
"""
import math
import sys

import numpy as np


def primitive_count(b1, b2, r):
    # reduced basis (tau in F) => coefficient box |a|,|b| <= ceil(r/|b|_min)+1 suffices
    # for r <= 2; use a generous box.
    k = int(math.ceil(2.0 * r / min(np.linalg.norm(b1), np.linalg.norm(b2)))) + 2
    count = 0
    for a in range(-k, k + 1):
        for b in range(-k, k + 1):
            if math.gcd(a, b) != 1:
                continue
            v = a * b1 + b * b2
            if v @ v <= r * r:
                count += 1
    return count


def main():
    samples = int(sys.argv[1]) if len(sys.argv) > 1 else 400_000
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 20240611
    rng = np.random.default_rng(seed)
    umax = 2.0 / math.sqrt(3.0)
    radii = [0.5, 1.0, 1.5]
    sums = {r: 0.0 for r in radii}
    sq = {r: 0.0 for r in radii}
    n = 0
    while n < samples:
        x = rng.uniform(-0.5, 0.5)
        u = rng.uniform(0.0, umax)
        if u <= 0.0 or u > 1.0 / math.sqrt(1.0 - x * x):
            continue
        y = 1.0 / u
        s = 1.0 / math.sqrt(y)
        b1 = np.array([s, 0.0])
        b2 = np.array([x * s, y * s])
        for r in radii:
            c = primitive_count(b1, b2, r)
            sums[r] += c
            sq[r] += c * c
        n += 1
    for r in radii:
        mean = sums[r] / n
        var = sq[r] / n - mean * mean
        se = math.sqrt(var / n)
        print(f"r={r} mean={mean:.6f} se={se:.6f} exact_6r2_over_pi={6*r*r/math.pi:.6f}")


if __name__ == "__main__":
    main()
