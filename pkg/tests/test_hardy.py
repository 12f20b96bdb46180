import json
from fractions import Fraction
from math import comb, factorial, pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from equikernel.geometry import SpherePoint, intersection_point, random_points, random_unitary
from equikernel.hardy import (
    Poly,
    dim_by_trace,
    highest_weight_vector,
    isotype_basis,
    kernel,
    kernel_diagonal,
    kernel_pairs,
    level_kernel,
    level_range,
    lower,
    moment_norm_bounds,
    monomial_norm_sq,
    poly_norm_sq,
    quadrature_kernel,
    raise_,
    wedge,
)
from equikernel.lie_rep import Weight, isotype_dimension

import oracles

NU = Weight(2, 1)


def pts(example, n, seed):
    return [SpherePoint(example, c) for c in random_points(example, n, np.random.default_rng(seed))]


def test_poly_arithmetic():
    z1 = Poly.variable(4, 0)
    w2 = Poly.variable(4, 3)
    p = (z1 + w2) ** 3
    assert len(p) == 4 and p.degrees == {3}
    assert p.terms[(1, 0, 0, 2)] == 3
    assert (p - p).terms == {}
    assert (p * Fraction(1, 2)).terms[(3, 0, 0, 0)] == Fraction(1, 2)


def test_monomial_norm_examples():
    assert float(monomial_norm_sq("P3", (0, 0, 0, 0))) == pytest.approx(pi ** 3 / 6)
    assert float(monomial_norm_sq("P3", (1, 0, 0, 0))) == pytest.approx(pi ** 3 / 24)
    assert monomial_norm_sq("P3", (1, 0, 0, 0)).rational == Fraction(1, 24)


@pytest.mark.parametrize("example", ["P3", "P4"])
def test_monomial_norms_reproduce_level_kernel(example):
    from itertools import product

    d = 3 if example == "P3" else 4
    rng = np.random.default_rng(1)
    for l in range(7):
        x = random_points(example, 1, rng)[0]
        total = 0.0
        for e in product(range(l + 1), repeat=d + 1):
            if sum(e) == l:
                total += abs(np.prod(x ** np.array(e))) ** 2 / float(monomial_norm_sq(example, e))
        assert total == pytest.approx(comb(l + d, d) * factorial(d) / pi ** d, rel=1e-12)


def test_monomial_norm_matches_sphere_moments():
    # Monte Carlo free check via the Dirichlet law of |x_i|^2 on the sphere
    rng = np.random.default_rng(2)
    x = random_points("P3", 400_000, rng)
    mc = np.mean(np.abs(x[:, 0]) ** 4 * np.abs(x[:, 3]) ** 2) * pi ** 3 / 6
    assert mc == pytest.approx(float(monomial_norm_sq("P3", (2, 0, 0, 1))), rel=0.02)


def test_highest_weight_examples():
    assert highest_weight_vector("P3", 2, 1, 1) == wedge(4)
    assert highest_weight_vector("P3", 2, 0, 0) == Poly.monomial((0, 0, 2, 0))
    with pytest.raises(ValueError):
        highest_weight_vector("P3", 2, 0, 1)
    with pytest.raises(ValueError):
        highest_weight_vector("P4", 3, (1, 0, 2), 1)


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_highest_weight_annihilated_by_raising(data):
    l = data.draw(st.integers(0, 10))
    if data.draw(st.booleans()):
        h = data.draw(st.integers(0, l))
        a = data.draw(st.integers(0, min(h, l - h)))
        v = highest_weight_vector("P3", l, h, a)
    else:
        r = data.draw(st.integers(0, l))
        p = data.draw(st.integers(0, l - r))
        q = l - r - p
        a = data.draw(st.integers(0, min(p, q)))
        v = highest_weight_vector("P4", l, (p, q, r), a)
    assert not raise_(v)
    assert v.degrees == {l}


def test_isotype_basis_small_cases():
    b = isotype_basis("P3", 1, NU)
    assert len(b) == 1
    assert b.sections[0].poly == wedge(4)
    assert b.sections[0].norm_sq.rational == Fraction(1, 60)
    assert len(isotype_basis("P3", 2, NU)) == isotype_dimension("P3", 2, NU)[0] == 4


def exact_inner(example, p, q):
    """Exact L2 pairing of two polynomials over the sphere."""
    total = Fraction(0)
    for e, c in p.terms.items():
        if e in q.terms:
            total += Fraction(c) * Fraction(q.terms[e]) * monomial_norm_sq(example, e).rational
    return total


@pytest.mark.parametrize("example,k", [("P3", 1), ("P3", 2), ("P3", 3), ("P4", 1), ("P4", 2)])
def test_exact_gram_is_diagonal(example, k):
    secs = isotype_basis(example, k, NU).sections
    for i, s in enumerate(secs):
        for j, t in enumerate(secs):
            val = exact_inner(example, s.poly, t.poly)
            if i == j:
                assert val == s.norm_sq.rational > 0
            else:
                assert val == 0


@pytest.mark.parametrize("example", ["P3", "P4"])
def test_count_equals_dimension(example):
    for nu in (Weight(2, 1), Weight(3, 1), Weight(3, 2)):
        for k in range(1, 9 if example == "P3" else 5):
            assert len(isotype_basis(example, k, nu)) == isotype_dimension(example, k, nu)[0]


def test_sections_carry_the_right_weights():
    b = isotype_basis("P4", 2, Weight(3, 1))
    knu = (6, 2)
    for s in b.sections:
        assert s.weight == (knu[0] - 1 - s.j, knu[1] + s.j)
    bottoms = [s for s in b.sections if s.j == b.k * b.nu.dim - 1]
    assert bottoms and all(not lower(s.poly) for s in bottoms)


def test_kernel_examples():
    x = intersection_point(NU)
    assert kernel("P3", 1, NU, x, x).value == pytest.approx(40 / (3 * pi ** 3))
    for p in pts("P3", 5, 3):
        c = p.coords
        expected = 60 / pi ** 3 * abs(c[0] * c[3] - c[1] * c[2]) ** 2
        assert kernel("P3", 1, NU, p, p).value == pytest.approx(expected)


@pytest.mark.parametrize("example", ["P3", "P4"])
def test_kernel_hermitian(example):
    xs, ys = pts(example, 20, 4), pts(example, 20, 5)
    for x, y in zip(xs, ys):
        a = kernel(example, 2, NU, x, y).value
        b = kernel(example, 2, NU, y, x).value
        assert abs(a - np.conj(b)) < 1e-12 * max(1, abs(a))
    diag = kernel_diagonal(example, 3, NU, xs)
    assert np.all(diag >= 0)


@pytest.mark.parametrize("k", [1, 2, 3, 6])
def test_kernel_matches_schur_closed_form_p3(k):
    xs, ys = pts("P3", 6, 10 + k), pts("P3", 6, 20 + k)
    for nu in (Weight(2, 1), Weight(3, 1)):
        vals = kernel_pairs("P3", k, nu, xs, ys)
        for v, x, y in zip(vals, xs, ys):
            ref = oracles.closed_kernel_p3(k, nu.as_tuple(), x.coords, y.coords)
            assert abs(v - ref) <= 1e-9 * max(1.0, abs(ref))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_kernel_matches_schur_closed_form_p4(k):
    xs, ys = pts("P4", 6, 30 + k), pts("P4", 6, 40 + k)
    vals = kernel_pairs("P4", k, NU, xs, ys)
    for v, x, y in zip(vals, xs, ys):
        ref = oracles.closed_kernel_p4(k, NU.as_tuple(), x.coords, y.coords)
        assert abs(v - ref) <= 1e-9 * max(1.0, abs(ref))


def test_large_k_diagonal_matches_eigenvalue_closed_form():
    from equikernel.geometry import spectra

    x = np.array([p.coords for p in pts("P3", 8, 50)])
    for k in (8, 16, 24):
        got = kernel_diagonal("P3", k, NU, x)
        ref = oracles.closed_diag_p3(k, NU.as_tuple(), spectra("P3", x)[:, 0])
        assert np.allclose(got, ref, rtol=1e-9, atol=1e-12)


def test_diagonal_g_invariance_and_circle_equivariance():
    rng = np.random.default_rng(6)
    k = 3
    l = k * NU.total - 1
    for x in pts("P3", 5, 7):
        g = random_unitary(rng)
        a = kernel_diagonal("P3", k, NU, [x, x.act(g)])
        assert a[1] == pytest.approx(a[0], rel=1e-9)
        y = pts("P3", 1, 8)[0]
        th = 0.37
        lhs = kernel("P3", k, NU, x.phase(th), y).value
        rhs = np.exp(1j * l * th) * kernel("P3", k, NU, x, y).value
        assert abs(lhs - rhs) < 1e-10 * abs(rhs)


def test_level_kernel():
    x, y = pts("P3", 2, 9)
    assert level_kernel("P3", 4, x, x) == pytest.approx(comb(7, 3) * 6 / pi ** 3)
    assert level_kernel("P3", 0, x, y) == pytest.approx(6 / pi ** 3)
    assert abs(level_kernel("P3", 5, x, y)) <= level_kernel("P3", 5, x, x).real


def test_moment_norm_bounds():
    a, b = moment_norm_bounds("P3")
    assert a == pytest.approx(1 / np.sqrt(2), abs=1e-8) and b == pytest.approx(1, abs=1e-8)
    a, b = moment_norm_bounds("P4")
    assert a == pytest.approx(1 / np.sqrt(2), abs=1e-8) and b == pytest.approx(np.sqrt(2), abs=1e-8)


def test_level_range_contains_contributing_levels():
    for example in ("P3", "P4"):
        for k in (1, 2, 3):
            lo, hi = level_range(example, k, NU)
            levels = isotype_dimension(example, k, NU)[1]
            assert lo <= min(levels) and max(levels) <= hi


@pytest.mark.parametrize("k", [1, 2, 3])
def test_quadrature_matches_exact(k):
    x, y = pts("P3", 2, 60 + k)
    e = kernel("P3", k, NU, x, y).value
    q = quadrature_kernel("P3", k, NU, x, y)
    assert abs(e - q) <= 1e-6 * abs(e)


def test_quadrature_matches_exact_p4():
    x, y = pts("P4", 2, 70)
    e = kernel("P4", 2, NU, x, y).value
    assert abs(quadrature_kernel("P4", 2, NU, x, y, n_torus=32, n_flag=16) - e) <= 1e-8 * abs(e)


def test_quadrature_splits_level_kernel():
    # level 2 of P3 holds exactly the (3,0) and (2,1) isotypes
    x, y = pts("P3", 2, 71)
    other = quadrature_kernel("P3", 1, Weight(3, 0), x, y, levels=(2, 2))
    assert other + kernel("P3", 1, NU, x, y).value == pytest.approx(level_kernel("P3", 2, x, y), abs=1e-10)


def test_quadrature_kills_other_rungs():
    x, y = pts("P3", 2, 73)
    # weight 2*nu lives at level 5; the level-2 kernel has no such component
    assert abs(quadrature_kernel("P3", 2, NU, x, y, levels=(2, 2))) < 1e-10
    assert abs(quadrature_kernel("P3", 1, NU, x, y, levels=(5, 5))) < 1e-10


def test_quadrature_torus_grid_refinement():
    x, y = pts("P3", 2, 72)
    a = quadrature_kernel("P3", 2, NU, x, y, n_torus=32, n_flag=16)
    b = quadrature_kernel("P3", 2, NU, x, y, n_torus=64, n_flag=16)
    assert abs(a - b) < 1e-10


@pytest.mark.parametrize("k,exact", [(1, 1), (2, 4)])
def test_dim_by_trace(k, exact):
    est, se = dim_by_trace("P3", k, NU, 100_000, k)
    assert abs(est - exact) <= 3 * se


def test_trace_by_eigenvalue_reduction():
    # the one-dimensional reduction of the trace integral reproduces k^2 exactly
    for k in (1, 4, 16):
        assert oracles.p3_integral_of_diag(k, NU.as_tuple()) == pytest.approx(k * k, rel=1e-9)


def test_dim_by_trace_rotation_invariance():
    rng = np.random.default_rng(3)
    x = random_points("P3", 20_000, rng)
    g = random_unitary(rng)
    from equikernel.geometry import block_action

    xr = x @ block_action("P3", g).T
    a = kernel_diagonal("P3", 2, NU, x).mean()
    b = kernel_diagonal("P3", 2, NU, xr).mean()
    assert a == pytest.approx(b, rel=1e-9)


def test_projector_idempotence_monte_carlo():
    k = 2
    x, y = pts("P3", 2, 80)
    rng = np.random.default_rng(81)
    w = random_points("P3", 200_000, rng)
    vals = kernel_pairs("P3", k, NU, np.repeat(x.coords[None], len(w), 0), w) * \
        kernel_pairs("P3", k, NU, w, np.repeat(y.coords[None], len(w), 0))
    vol = pi ** 3 / 6
    est = vol * vals.mean()
    se = vol * np.sqrt(vals.real.var() + vals.imag.var()) / np.sqrt(len(w))
    target = kernel("P3", k, NU, x, y).value
    assert abs(est - target) <= 3 * se * np.sqrt(2)


def test_basis_json_roundtrip():
    b = isotype_basis("P3", 2, NU)
    data = json.loads(json.dumps(b.to_json()))
    assert len(data["sections"]) == 4
    s = data["sections"][0]
    poly = Poly(4, {tuple(e): Fraction(c) for e, c in s["terms"]})
    assert poly == b.sections[0].poly
    assert Fraction(s["norm_sq"]["rational"]) == poly_norm_sq("P3", poly).rational
