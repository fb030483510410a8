"""Interpolants, derivatives, and Holder norms against brute-force oracles."""
import numpy as np
import pytest

from hbvp.grid import (GridFunction, HolderIndex, ShapeError,
                       algebra_constant, holder_norm, holder_seminorm,
                       interpolate, product, sup_norm)


def _from_values(vals, interval=(0.0, 1.0)):
    vals = np.asarray(vals, dtype=complex)
    if vals.ndim == 1:
        vals = vals.reshape(1, 1, -1)
    return GridFunction(vals, interval)


def test_holder_index_validation():
    HolderIndex(0, 1.0)
    with pytest.raises(ValueError):
        HolderIndex(-1, 0.5)
    with pytest.raises(ValueError):
        HolderIndex(0, 0.0)
    with pytest.raises(ValueError):
        HolderIndex(0, 1.5)


def test_interpolate_polynomial_exact():
    g = interpolate("t", (0.0, 1.0), 8)
    ts = np.linspace(0, 1, 101)
    assert np.max(np.abs(g.eval_at(ts)[0, 0] - ts)) < 1e-14


def test_interpolate_sin_accuracy():
    g = interpolate("sin(t)", (0.0, np.pi), 32)
    # force the barycentric path to judge interpolation itself
    bare = _from_values(g.values[0, 0], (0.0, np.pi))
    ts = np.linspace(0, np.pi, 1000)
    assert np.max(np.abs(bare.eval_at(ts)[0, 0] - np.sin(ts))) < 1e-10


def test_interpolate_constant():
    g = interpolate("1", (0.0, 1.0), 8)
    assert np.allclose(g.values, 1.0)


def test_interpolate_rejects_low_degree():
    with pytest.raises(ValueError):
        interpolate("t", (0.0, 1.0), 4)


def test_derivative_polynomial_exact():
    g = interpolate("t^2", (0.0, 1.0), 8)
    ts = np.linspace(0, 1, 50)
    assert np.max(np.abs(g.derivative().eval_at(ts)[0, 0] - 2 * ts)) < 1e-13


def test_derivative_constant_zero():
    g = interpolate("3", (0.0, 1.0), 8)
    assert np.max(np.abs(g.derivative().values)) < 1e-14


def test_spectral_derivative_sin():
    src = interpolate("sin(t)", (0.0, np.pi), 32)
    bare = _from_values(src.values[0, 0], (0.0, np.pi))  # no symbolic source
    ts = np.linspace(0, np.pi, 200)
    err = np.max(np.abs(bare.derivative().eval_at(ts)[0, 0] - np.cos(ts)))
    assert err < 1e-9


def test_sup_norm_examples():
    one = interpolate("1", (0.0, 1.0), 8)
    ramp = interpolate("t", (0.0, 1.0), 8)
    assert abs(sup_norm(one, 64) - 1.0) < 1e-14
    assert abs(sup_norm(ramp, 64) - 1.0) < 1e-14
    s = interpolate("sin(t)", (0.0, np.pi), 32)
    assert abs(sup_norm(s, 4096) - 1.0) < 1e-6


def test_sup_norm_entrywise_sum():
    g = interpolate([["t"], ["1"]], (0.0, 1.0), 8)
    assert abs(sup_norm(g, 64) - 2.0) < 1e-14


def test_seminorm_constant_and_ramp():
    idx = HolderIndex(0, 1.0)
    const = interpolate("2", (0.0, 1.0), 8)
    ramp = interpolate("t", (0.0, 1.0), 8)
    assert holder_seminorm(const, idx, 256) < 1e-13
    assert abs(holder_seminorm(ramp, idx, 256) - 1.0) < 1e-13


def test_seminorm_refinement_flag():
    g = interpolate("sin(3*t)", (0.0, 1.0), 24)
    val, converged = holder_seminorm(g, HolderIndex(0, 1.0), 256,
                                     check_refinement=True)
    assert converged
    assert abs(val - 3.0) < 1e-2


def test_holder_norm_examples():
    idx = HolderIndex(0, 1.0)
    ramp = interpolate("t", (0.0, 1.0), 8)
    assert abs(holder_norm(ramp, idx, 256).total - 2.0) < 1e-12
    const = interpolate("neg(1.5)", (0.0, 1.0), 8)
    assert abs(holder_norm(const, idx, 256).total - 1.5) < 1e-13


def test_holder_norm_sin_n1_brute_force():
    g = interpolate("sin(t)", (0.0, 1.0), 24)
    idx = HolderIndex(1, 1.0)
    nv = holder_norm(g, idx, 512)
    ts = np.linspace(0, 1, 2001)
    sup0 = np.max(np.abs(np.sin(ts)))
    sup1 = np.max(np.abs(np.cos(ts)))
    dv = np.abs(np.cos(ts)[:, None] - np.cos(ts)[None, :])
    dt = np.abs(ts[:, None] - ts[None, :])
    semi = np.max(np.divide(dv, dt, out=np.zeros_like(dv), where=dt > 0))
    assert abs(nv.total - (sup0 + sup1 + semi)) < 1e-3
    assert nv.total == pytest.approx(sum(nv.sup_parts) + nv.seminorm)


def test_product_identity_and_square():
    one = interpolate("1", (0.0, 1.0), 8)
    ramp = interpolate("t", (0.0, 1.0), 8)
    p = product(one, ramp)
    ts = np.linspace(0, 1, 64)
    assert np.max(np.abs(p.eval_at(ts)[0, 0] - ts)) < 1e-13
    sq = product(ramp, ramp)
    assert np.max(np.abs(sq.eval_at(ts)[0, 0] - ts ** 2)) < 1e-13


def test_product_matches_convolution_oracle():
    rng = np.random.default_rng(7)
    p = rng.standard_normal(9)  # degree 8
    q = rng.standard_normal(9)
    N = 8
    from hbvp.chebyshev import lobatto_nodes
    nodes = lobatto_nodes(N, 0.0, 1.0)
    f = _from_values(np.polyval(p, nodes))
    g = _from_values(np.polyval(q, nodes))
    fg = product(f, g)
    pq = np.polymul(p, q)
    ts = lobatto_nodes(fg.N, 0.0, 1.0)
    assert np.max(np.abs(fg.eval_at(ts)[0, 0] - np.polyval(pq, ts))) < 1e-12


def test_product_shape_rules():
    A = interpolate([["1", "t"], ["0", "1"]], (0.0, 1.0), 8)
    v = interpolate([["t"], ["1"]], (0.0, 1.0), 8)
    Av = product(A, v)
    assert Av.shape == (2, 1)
    ts = np.linspace(0, 1, 20)
    assert np.allclose(Av.eval_at(ts)[0, 0], 2 * ts)
    with pytest.raises(ShapeError):
        product(v, A)


def test_product_degree_cap_warns():
    f = interpolate("t", (0.0, 1.0), 400)
    with pytest.warns(UserWarning):
        product(f, f)


def _random_pair(rng, N=16):
    a = _from_values(rng.standard_normal(N + 1)
                     + 1j * rng.standard_normal(N + 1))
    b = _from_values(rng.standard_normal(N + 1)
                     + 1j * rng.standard_normal(N + 1))
    return a, b


def test_homogeneity_and_triangle_50_random_pairs():
    rng = np.random.default_rng(11)
    idx = HolderIndex(0, 0.7)
    for _ in range(50):
        f, g = _random_pair(rng)
        c = rng.standard_normal() * 3.0
        nf = holder_norm(f, idx, 256).total
        ng = holder_norm(g, idx, 256).total
        ncf = holder_norm(f.scale(c), idx, 256).total
        assert abs(ncf - abs(c) * nf) <= 1e-12 * (1 + abs(c) * nf)
        nsum = holder_norm(f + g, idx, 256).total
        assert nsum <= nf + ng + 1e-12


def test_monotone_sampling():
    g = interpolate("powabs(t-0.3, 0.5)", (0.0, 1.0), 32)
    idx = HolderIndex(0, 0.5)
    coarse = holder_seminorm(g, idx, 256)
    fine = holder_seminorm(g, idx, 512)
    assert coarse <= fine + 1e-12


def test_banach_algebra_certificate():
    pairs = [("sin(t)", "exp(t)"), ("t^2", "cos(t)"), ("1+t", "sqrt(t+1)")]
    for n in (0, 1, 2):
        idx = HolderIndex(n, 0.8)
        K = algebra_constant(idx)
        assert K == 2.0 ** (n + 1) * (n + 1) ** 2
        for sf, sg in pairs:
            f = interpolate(sf, (0.0, 1.0), 16)
            g = interpolate(sg, (0.0, 1.0), 16)
            nfg = holder_norm(product(f, g), idx, 256).total
            bound = K * holder_norm(f, idx, 256).total \
                * holder_norm(g, idx, 256).total
            assert nfg <= bound + 1e-10


def test_nested_space_comparison():
    # on [0,1] the comparison constant max(1, (b-a)^(alpha-alpha')) is 1
    for src in ("sin(t)", "t^3", "powabs(t-0.5, 0.9)"):
        g = interpolate(src, (0.0, 1.0), 24)
        hi = holder_norm(g, HolderIndex(0, 0.9), 512).total
        lo = holder_norm(g, HolderIndex(0, 0.4), 512).total
        assert lo <= hi + 1e-10


def test_symbolic_source_matches_nodes():
    g = interpolate("exp(t)*sin(3*t)", (0.0, 2.0), 20)
    import hbvp.expr as ex
    direct = ex.evaluate(g.sources[0, 0], g.nodes, 0.0)
    assert np.max(np.abs(g.values[0, 0] - direct)) < 1e-13 * np.max(
        np.abs(direct) + 1)


def test_arithmetic_mixed_degrees():
    f = interpolate("t^2", (0.0, 1.0), 8)
    g = interpolate("sin(t)", (0.0, 1.0), 24)
    h = f + g
    assert h.N == 24
    ts = np.linspace(0, 1, 33)
    assert np.max(np.abs(h.eval_at(ts)[0, 0] - (ts ** 2 + np.sin(ts)))) < 1e-12
