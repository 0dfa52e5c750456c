"""Smoke test for the fdakit_py extension module.

Build and install first:  maturin develop -m crates/py/Cargo.toml --release
"""

import math

import fdakit_py as fk


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    basis = fk.Basis.fourier(7)
    assert basis.n_basis == 7 and basis.kind == "fourier"
    gram = basis.gram()
    for i in range(7):
        for j in range(7):
            assert close(gram[i][j], 1.0 if i == j else 0.0, 1e-9)

    curves = fk.simulate(200, [4.0, 1.0, 0.25], k=7, mean=[1.0, 0.5], grid_size=41, noise_sd=0.05, seed=7)
    assert len(curves) == 200
    ds = fk.Dataset.from_curves(curves, basis)
    assert len(ds) == 200 and ds.ids[0] == curves[0][0]

    pca = fk.fpca(ds, 3)
    lam = pca["eigenvalues"]
    assert len(lam) == 3 and lam[0] >= lam[1] >= lam[2] > 0
    assert 2.5 < lam[0] < 6.0, lam
    assert len(pca["scores"]) == 200 and len(pca["scores"][0]) == 3

    y = [2.0 + 1.5 * s[0] - 0.5 * s[1] for s in pca["scores"]]
    model = fk.regress(ds, y, p=3)
    assert close(model.alpha, 2.0, 1e-6), model.alpha
    pred = model.predict(ds)
    assert max(abs(a - b) for a, b in zip(pred, y)) < 1e-6
    assert len(model.beta([0.0, 0.5, 1.0])) == 3

    two = fk.Dataset.from_coefficients(
        basis,
        [[5.0 * (g * 2 - 1) + 0.01 * i, 0, 0, 0, 0, 0, 0] for g in range(2) for i in range(10)],
    )
    km = fk.kmeans(two, 2, seed=3)
    labels = km["assignments"]
    assert len(set(labels[:10])) == 1 and len(set(labels[10:])) == 1 and labels[0] != labels[10]
    sel = fk.select_g(two, 2, 4, seed=3)
    assert sel["best_g"] == 2

    coords = [(math.cos(i), math.sin(i) * 2.0) for i in range(30)]
    small = fk.Dataset.from_curves(curves[:30], basis)
    res = fk.scan(small, coords, n_perm=99, grid_size=41, seed=5)
    assert 0.0 < res["p_value"] <= 1.0 and len(res["window"]) >= 1

    try:
        fk.Basis.fourier(6)
    except ValueError:
        pass
    else:
        raise AssertionError("even Fourier size accepted")

    print("fdakit_py", fk.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
