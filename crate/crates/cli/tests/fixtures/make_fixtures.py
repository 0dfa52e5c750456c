"""Regenerates the CLI test fixtures.

fpca_curves.csv: 12 noiseless curves in the span of a 5-term Fourier basis
on [0, 1], observed at 50 points. fpca_golden_eigenvalues.csv: eigenvalues
of the covariance operator from a weighted PCA of the curves on a
2001-point grid with trapezoid weights, which is exact for these
trigonometric polynomials.

bundles_curves.csv / bundles_labels.csv: two well separated bundles of 20
noisy curves each, with the generating labels.
"""

import numpy as np


def fourier(t, k):
    cols = [np.ones_like(t)]
    for j in range(1, (k - 1) // 2 + 1):
        cols.append(np.sqrt(2.0) * np.sin(2 * np.pi * j * t))
        cols.append(np.sqrt(2.0) * np.cos(2 * np.pi * j * t))
    return np.column_stack(cols)


def write_long(path, ids, t, values):
    with open(path, "w") as f:
        f.write("id,t,value\n")
        for cid, row in zip(ids, values):
            for tl, v in zip(t, row):
                f.write(f"{cid},{float(tl)!r},{float(v)!r}\n")


def fpca_fixture(rng):
    n, k = 12, 5
    scale = np.array([3.0, 2.0, 1.2, 0.7, 0.4])
    coef = rng.standard_normal((n, k)) * scale + np.array([1.0, 0.5, -0.3, 0.0, 0.2])
    ids = [f"c{i:02d}" for i in range(n)]
    t = np.linspace(0.0, 1.0, 50)
    write_long("fpca_curves.csv", ids, t, coef @ fourier(t, k).T)

    grid = np.linspace(0.0, 1.0, 2001)
    w = np.full(grid.size, grid[1] - grid[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    x = coef @ fourier(grid, k).T
    x -= x.mean(axis=0)
    dual = (x * w) @ x.T / n
    lam = np.sort(np.linalg.eigvalsh(dual))[::-1][:k]
    with open("fpca_golden_eigenvalues.csv", "w") as f:
        f.write("component,eigenvalue\n")
        for j, v in enumerate(lam, start=1):
            f.write(f"{j},{float(v)!r}\n")


def bundles_fixture(rng):
    per, groups = 20, 2
    t = np.linspace(0.0, 1.0, 30)
    templates = [3.0 * np.sin(2 * np.pi * t), 3.0 * np.cos(2 * np.pi * t) + 4.0]
    ids, labels, rows = [], [], []
    for g in range(groups):
        for i in range(per):
            ids.append(f"b{g}_{i:02d}")
            labels.append(g + 1)
            amp = 1.0 + 0.03 * rng.standard_normal()
            rows.append(amp * templates[g] + 0.05 * rng.standard_normal() + 0.02 * rng.standard_normal(t.size))
    write_long("bundles_curves.csv", ids, t, np.array(rows))
    with open("bundles_labels.csv", "w") as f:
        f.write("id,label\n")
        for cid, lab in zip(ids, labels):
            f.write(f"{cid},{lab}\n")


if __name__ == "__main__":
    rng = np.random.default_rng(20240501)
    fpca_fixture(rng)
    bundles_fixture(rng)
