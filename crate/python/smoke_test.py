"""Quick end-to-end check of the srblab Python module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`.
Exits non-zero on the first failed check.
"""

import math

import srblab


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    # Free gas: weights are (2πk)^{-d/2} exactly.
    free = srblab.GammaTable.free_gas(3, 10)
    assert close(free.values()[4], (2 * math.pi * 5) ** -1.5, 1e-14)
    assert srblab.GammaTable.from_text(free.to_text()).checksum() == free.checksum()

    model = srblab.Model(3, 0.3, steps_per_leg=8)
    table = srblab.GammaTable.estimate(model, 4, 500, seed=1)
    longer = table.extend(model, 6, 500)
    assert longer.values()[:4] == table.values()
    bracket = srblab.estimate_lambda_c(longer)
    assert 1.0 <= bracket["lower"] <= bracket["point"] <= bracket["upper"]

    try:
        srblab.GammaTable.from_text(table.to_text().replace(",500\n", ",501\n", 1))
    except srblab.SrblabError as e:
        assert "checksum" in str(e)
    else:
        raise AssertionError("tampered table was accepted")

    thermo = srblab.Thermo.free_gas(5, 400)
    rc = thermo.critical_density()
    c, regime = thermo.solve_c(rc / 2)
    assert c > 0 and regime == "subcritical"
    assert thermo.solve_c(2 * rc) == (0.0, "condensate")
    fe = thermo.free_energy(rc / 2)
    assert fe["gap"] < 1e-8, fe

    sampler = srblab.PartitionSampler.free_gas(3, 50, 400.0)
    draws = sampler.sample(200, seed=3)
    assert all(sum((k + 1) * l for k, l in enumerate(d)) == 50 for d in draws)
    assert draws == sampler.sample(200, seed=3)

    assert srblab.lace_of(4, [(1, 3), (2, 4), (1, 4)]) == [(1, 4)]
    assert srblab.is_irreducible(3, [(1, 3)])
    _, _, gap = srblab.lace_identity_check([[0, 0.3, 0.5, 0.2], [0.3, 0, 0.7, 0.1], [0.5, 0.7, 0, 0.9], [0.2, 0.1, 0.9, 0]])
    assert gap < 1e-12
    assert srblab.characterization_check(5)[1] == 0
    assert srblab.characterization_check(5, flipped=True)[1] > 0

    rows = srblab.convolution_identity_check(srblab.Model(3, 0.5, steps_per_leg=8), 3, 2000, seed=4)
    assert abs(rows[0][3]) < 1e-12 and abs(rows[1][3]) < 1e-12

    grid = srblab.GridFn.zeros(1, 12.0, 0.02)
    phi = grid.heat_kernel(1.0)
    s, info = srblab.neumann_deconvolve(phi.scale(0.5), phi)
    assert s.sub(srblab.g_mu_grid(grid, 0.5)).l1() < 1e-6, info

    (r, g, lead, res), = srblab.green_asymptotics(5, [20.0])
    assert res < 1e-12 * g

    print(f"srblab {srblab.__version__}: all smoke checks passed")


if __name__ == "__main__":
    main()
