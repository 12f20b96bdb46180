import numpy as np
import pytest

from equikernel.geometry import (
    Locus,
    SpherePoint,
    TangentVector,
    boundary_ratio,
    classify,
    contact_form,
    d_nu_invariant,
    evaluation_rank,
    fs_distance,
    fundamental_vector_field,
    heisenberg_displace,
    horizontal_basis,
    intersection_point,
    metric_pair,
    moment_map,
    moment_pairing,
    perp_h_basis,
    point_from_blocks,
    point_with_spectrum,
    random_points,
    random_unitary,
    sample_boundary,
    spectrum_for_t,
    torus_moment,
    upsilon,
)
from equikernel.lie_rep import Weight, algebra_pairing, u2_basis

NU = Weight(2, 1)


def rand_point(example, rng):
    return SpherePoint(example, random_points(example, 1, rng)[0])


def rand_xi(rng):
    return sum(c * b for c, b in zip(rng.standard_normal(4), u2_basis()))


def rand_horizontal(x, rng):
    hb = horizontal_basis(x)
    c = rng.standard_normal(len(hb)) + 1j * rng.standard_normal(len(hb))
    return TangentVector(x, c @ hb)


def test_sphere_point_validation():
    with pytest.raises(ValueError):
        SpherePoint("P3", [1, 1, 0, 0])
    with pytest.raises(ValueError):
        SpherePoint("P3", [1, 0, 0, 0, 0])
    assert SpherePoint.normalized("P4", [1, 1, 0, 0, 1]).d == 4


def test_moment_map_examples():
    x = SpherePoint("P3", [np.sqrt(2 / 3), 0, 0, np.sqrt(1 / 3)])
    assert np.allclose(-1j * moment_map(x).matrix, np.diag([2 / 3, 1 / 3]))
    mv = moment_map(SpherePoint("P3", [1, 0, 0, 0]))
    assert np.allclose(-1j * mv.matrix, np.diag([1, 0]))
    assert np.linalg.matrix_rank(mv.matrix) == 1
    mv = moment_map(SpherePoint.normalized("P3", [1, 0, 0, 1]))
    assert (mv.lambda1, mv.lambda2) == pytest.approx((0.5, 0.5)) and mv.degenerate


def test_torus_moment_examples():
    x = SpherePoint("P3", [np.sqrt(2 / 3), 0, 0, np.sqrt(1 / 3)])
    assert torus_moment(x) == pytest.approx((2 / 3, 1 / 3))
    assert torus_moment(SpherePoint("P3", [1, 0, 0, 0])) == pytest.approx((1, 0))
    assert torus_moment(SpherePoint("P4", [0, 0, 0, 0, 1])) == pytest.approx((1, 1))


@pytest.mark.parametrize("example", ["P3", "P4"])
def test_torus_moment_is_diagonal_of_moment(example):
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = rand_point(example, rng)
        assert np.allclose(torus_moment(x), np.diag(-1j * moment_map(x).matrix).real)


@pytest.mark.parametrize("example", ["P3", "P4"])
def test_equivariance_and_trace_law(example):
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, g = rand_point(example, rng), random_unitary(rng)
        lhs = moment_map(x.act(g)).matrix
        rhs = g @ moment_map(x).matrix @ g.conj().T
        assert np.max(np.abs(lhs - rhs)) < 1e-10
        mv = moment_map(x)
        tr = mv.lambda1 + mv.lambda2
        if example == "P3":
            assert tr == pytest.approx(1, abs=1e-12)
        else:
            assert 1 - 1e-12 <= tr <= 2 + 1e-12


def test_determinant_law():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = rand_point("P3", rng)
        mv = moment_map(x)
        c = x.coords
        assert mv.lambda1 * mv.lambda2 == pytest.approx(abs(c[0] * c[3] - c[1] * c[2]) ** 2, abs=1e-10)


def test_classify_examples():
    x = intersection_point(NU)
    lc = classify(x, NU)
    assert lc.tag is Locus.BOUNDARY and abs(lc.t_value) < 1e-12
    assert {Locus.CORE, Locus.TORUS} <= lc.tags
    lc = classify(point_with_spectrum("P3", 0.5, 0.5), NU)
    assert lc.tag is Locus.OUTER and lc.t_value is None
    lc = classify(point_with_spectrum("P3", 0.6, 0.4), NU)
    assert lc.tag is Locus.OUTER and lc.t_value == pytest.approx(-1 / 3)
    with pytest.raises(ValueError):
        classify(x, Weight(2, 0))


def test_classify_inner_by_construction():
    rng = np.random.default_rng(8)
    lam = spectrum_for_t(NU, 0.25)
    x = point_with_spectrum("P3", *lam, rng=rng)
    lc = classify(x, NU)
    assert lc.tag is Locus.INNER and lc.t_value == pytest.approx(0.25)
    # the interpolation (1-t) lam1 + t lam2 lands on the ray of nu
    mix = ((1 - 0.25) * lam[0] + 0.25 * lam[1], 0.25 * lam[0] + (1 - 0.25) * lam[1])
    assert mix[0] / mix[1] == pytest.approx(NU.nu1 / NU.nu2)


def test_core_implies_boundary_and_torus():
    rng = np.random.default_rng(9)
    pts = [rand_point("P3", rng) for _ in range(200)] + sample_boundary(NU, 20, 1)
    pts.append(intersection_point(NU))
    for p in pts:
        lc = classify(p, NU)
        if Locus.CORE in lc.tags:
            assert lc.tag is Locus.BOUNDARY and Locus.TORUS in lc.tags


def test_fundamental_vector_field_examples():
    rng = np.random.default_rng(10)
    x = rand_point("P3", rng)
    v = fundamental_vector_field(1j * np.eye(2), x)
    assert np.allclose(v.vec, -1j * x.coords)
    assert np.allclose(v.horizontal.vec, 0)
    p = intersection_point(NU)
    v = fundamental_vector_field(np.diag([1j, 0]), p)
    assert np.allclose(v.vec, [-1j * np.sqrt(2 / 3), 0, 0, 0])


@pytest.mark.parametrize("example", ["P3", "P4"])
def test_contact_identity(example):
    rng = np.random.default_rng(12)
    for _ in range(20):
        x, xi = rand_point(example, rng), rand_xi(rng)
        assert contact_form(fundamental_vector_field(xi, x)) == pytest.approx(
            -algebra_pairing(moment_map(x).matrix, xi), abs=1e-9)


def test_metric_pair_properties():
    rng = np.random.default_rng(13)
    x = rand_point("P3", rng)
    for _ in range(10):
        u, v = rand_horizontal(x, rng), rand_horizontal(x, rng)
        g, _ = metric_pair(x, v, v)
        gj, _ = metric_pair(x, v * 1j, v * 1j)
        assert gj == pytest.approx(g)
        assert metric_pair(x, v, v)[1] == pytest.approx(0, abs=1e-14)
        g_uv, w_uv = metric_pair(x, u, v)
        assert w_uv == pytest.approx(metric_pair(x, u * 1j, v)[0])
    with pytest.raises(ValueError):
        metric_pair(x, TangentVector(x, 1j * x.coords), u)


@pytest.mark.parametrize("example", ["P3", "P4"])
def test_hamiltonian_normalization(example):
    rng = np.random.default_rng(14)
    h = 1e-6
    for _ in range(10):
        x, xi = rand_point(example, rng), rand_xi(rng)
        v = rand_horizontal(x, rng)
        plus = SpherePoint.normalized(example, x.coords + h * v.vec)
        minus = SpherePoint.normalized(example, x.coords - h * v.vec)
        deriv = (moment_pairing(plus, xi) - moment_pairing(minus, xi)) / (2 * h)
        xm = fundamental_vector_field(xi, x).horizontal
        assert deriv == pytest.approx(2 * metric_pair(x, xm, v)[1], abs=1e-6)


def test_local_freeness_rank():
    rng = np.random.default_rng(15)
    for _ in range(10):
        x = rand_point("P3", rng)
        assert evaluation_rank(x) == 4
    Z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    X = np.stack([Z, (0.3 - 0.2j) * Z], axis=1)
    assert evaluation_rank(point_from_blocks("P3", X)) == 3


def test_sample_boundary():
    pts = sample_boundary(NU, 30, 0)
    assert len(pts) == 30
    for p in pts:
        assert boundary_ratio(p) == pytest.approx(np.sqrt(2) / 3, abs=1e-10)
        assert classify(p, NU).tag is Locus.BOUNDARY
    assert sample_boundary(NU, 0, 0) == []
    for p in sample_boundary(Weight(3, 1), 5, 1, "P4"):
        assert classify(p, Weight(3, 1)).on_boundary


def test_boundary_lambda_consistency():
    for p in sample_boundary(NU, 10, 2):
        mv = moment_map(p)
        assert mv.norm / NU.norm == pytest.approx((mv.lambda1 + mv.lambda2) / NU.total, abs=1e-9)


def test_upsilon_at_intersection_point():
    x = intersection_point(NU)
    u = upsilon(x, NU)
    a, b = np.sqrt(2 / 3), np.sqrt(1 / 3)
    assert np.allclose(u.vec, [-a, 0, 0, 2 * b])
    assert u.is_horizontal()
    with pytest.raises(ValueError):
        upsilon(point_with_spectrum("P3", 0.6, 0.4), NU)


def test_upsilon_nonvanishing_and_outward():
    for p in sample_boundary(NU, 50, 3):
        u = upsilon(p, NU)
        assert u.norm > 0.1
        moved = heisenberg_displace(p, 0.0, u * (1e-3 / u.norm))
        assert classify(moved, NU).tag is Locus.OUTER


def test_upsilon_normal_to_boundary():
    # tangent directions of the locus are kernels of dt; Upsilon pairs to zero
    # with them under the Riemannian metric
    rng = np.random.default_rng(16)
    h = 1e-6
    for p in sample_boundary(NU, 5, 4):
        u = upsilon(p, NU)
        hb = horizontal_basis(p)
        dirs = [TangentVector(p, c * e) for e in hb for c in (1, 1j)]

        def tval(v, s):
            return classify(SpherePoint.normalized("P3", p.coords + s * v.vec), NU, tol_t=0).t_value

        grads = np.array([(tval(v, h) - tval(v, -h)) / (2 * h) for v in dirs])
        for _ in range(5):
            c = rng.standard_normal(len(dirs))
            c -= (c @ grads) / (grads @ grads) * grads
            w = TangentVector(p, sum(ci * v.vec for ci, v in zip(c, dirs)))
            assert abs(metric_pair(p, u, w)[0]) < 1e-5 * w.norm


def test_d_nu_invariant():
    x = intersection_point(NU)
    assert d_nu_invariant(x, NU) == pytest.approx(np.sqrt(5 / 2), abs=1e-12)
    for p in sample_boundary(NU, 50, 5):
        assert d_nu_invariant(p, NU) > 0
        assert d_nu_invariant(p, NU) == pytest.approx(d_nu_invariant(p, NU.scaled(2)), abs=1e-12)


def test_heisenberg_displace():
    rng = np.random.default_rng(17)
    x = rand_point("P3", rng)
    assert np.allclose(heisenberg_displace(x, 0.0, TangentVector(x, np.zeros(4))).coords, x.coords)
    v = rand_horizontal(x, rng)
    for r in (1e-2, 1e-3):
        w = v * (r / v.norm)
        y = heisenberg_displace(x, 0.7, w)
        assert abs(np.linalg.norm(y.coords) - 1) < 1e-14
        assert abs(fs_distance(x, y) - r) <= 10 * r ** 3
    with pytest.raises(ValueError):
        heisenberg_displace(x, 0.0, v * (2.0 / v.norm))


@pytest.mark.parametrize("example", ["P3", "P4"])
def test_perp_h_basis(example):
    rng = np.random.default_rng(18)
    for _ in range(5):
        x = rand_point(example, rng)
        basis = perp_h_basis(x)
        # at free points the orbit directions span the whole tangent space
        assert len(basis) == 0
        x_rank1 = point_from_blocks(example, np.outer([1, 0.5j], [0.6, 0.8]))
        basis = perp_h_basis(x_rank1)
        assert len(basis) >= 1
        for i, v in enumerate(basis):
            for b in u2_basis():
                xm = fundamental_vector_field(b, x_rank1).horizontal
                g, w = metric_pair(x_rank1, v, xm)
                assert abs(g) < 1e-9 and abs(w) < 1e-9
            for j, u in enumerate(basis):
                g, w = metric_pair(x_rank1, v, u)
                assert complex(g, -w) == pytest.approx(float(i == j), abs=1e-10)
