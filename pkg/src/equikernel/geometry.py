"""Moment maps, locus classification and horizontal geometry on the model spheres.

Points of the unit sphere in C^4 (P3) or C^5 (P4) are ordered as
(z1, z2, w1, w2[, t]); the two columns Z = (z1, z2) and W = (w1, w2) form
the 2x2 matrix X = [Z W] on which U(2) acts from the left, and t is
twisted by det.

Sign conventions: the connection form is alpha(v) = Im<v, x>, the
symplectic pairing of horizontal vectors is omega(u, v) = -Im<u, v> and
the Riemannian one is g(u, v) = Re<u, v>. With these, the generator of
xi acts as v = -xi.x, which is the choice compatible with the
contact-lift identity alpha(xi_X) = -<Phi, xi> and with
d<Phi, xi> = 2 omega(xi_M, .).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .lie_rep import (
    AMBIENT_DIM,
    Diagonalization,
    Weight,
    algebra_pairing,
    check_example,
    check_skew_hermitian,
    diagonalize_moment,
    u2_basis,
)

SPHERE_TOL = 1e-12
TANGENT_TOL = 1e-10
T_TOL = 1e-9


def hermitian_inner(u: np.ndarray, v: np.ndarray) -> complex:
    """<u, v> = sum u_i conj(v_i)."""
    return complex(np.vdot(v, u))


@dataclass(frozen=True, eq=False)
class SpherePoint:
    example: str
    coords: np.ndarray

    def __post_init__(self):
        check_example(self.example)
        c = np.asarray(self.coords, dtype=complex).reshape(-1)
        if c.size != AMBIENT_DIM[self.example] + 1:
            raise ValueError(f"{self.example} points need {AMBIENT_DIM[self.example] + 1} coordinates")
        if abs(np.linalg.norm(c) - 1) > SPHERE_TOL:
            raise ValueError("point is not on the unit sphere")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    @classmethod
    def normalized(cls, example: str, coords) -> "SpherePoint":
        c = np.asarray(coords, dtype=complex).reshape(-1)
        return cls(example, c / np.linalg.norm(c))

    @property
    def d(self) -> int:
        return AMBIENT_DIM[self.example]

    @property
    def matrix(self) -> np.ndarray:
        """X = [Z W] as a 2x2 matrix."""
        c = self.coords
        return np.array([[c[0], c[2]], [c[1], c[3]]])

    @property
    def t(self) -> complex:
        return complex(self.coords[4]) if self.example == "P4" else 0j

    def act(self, g: np.ndarray) -> "SpherePoint":
        return SpherePoint.normalized(self.example, block_action(self.example, g) @ self.coords)

    def phase(self, theta: float) -> "SpherePoint":
        return SpherePoint.normalized(self.example, np.exp(1j * theta) * self.coords)


def block_action(example: str, a: np.ndarray, det_twist: complex | None = None) -> np.ndarray:
    """Matrix of the linear action of a 2x2 matrix on the coordinate vector."""
    m = np.zeros((AMBIENT_DIM[example] + 1,) * 2, dtype=complex)
    m[np.ix_([0, 1], [0, 1])] = a
    m[np.ix_([2, 3], [2, 3])] = a
    if example == "P4":
        m[4, 4] = np.linalg.det(a) if det_twist is None else det_twist
    return m


def algebra_action(example: str, xi: np.ndarray) -> np.ndarray:
    """Infinitesimal version of block_action; the det twist becomes trace."""
    return block_action(example, xi, det_twist=np.trace(xi))


@dataclass(frozen=True, eq=False)
class MomentValue:
    matrix: np.ndarray
    lambda1: float
    lambda2: float
    h: np.ndarray
    degenerate: bool

    @property
    def norm(self) -> float:
        return float(np.hypot(self.lambda1, self.lambda2))


def moment_matrix(x: SpherePoint) -> np.ndarray:
    X = x.matrix
    herm = X @ X.conj().T + abs(x.t) ** 2 * np.eye(2)
    return 1j * herm


def moment_map(x: SpherePoint) -> MomentValue:
    phi = moment_matrix(x)
    dg: Diagonalization = diagonalize_moment(phi)
    return MomentValue(phi, max(dg.lambda1, 0.0), max(dg.lambda2, 0.0), dg.h, dg.degenerate)


def torus_moment(x: SpherePoint) -> tuple[float, float]:
    c = x.coords
    tt = abs(x.t) ** 2
    return (float(abs(c[0]) ** 2 + abs(c[2]) ** 2 + tt), float(abs(c[1]) ** 2 + abs(c[3]) ** 2 + tt))


def spectra(example: str, pts: np.ndarray) -> np.ndarray:
    """Eigenvalues (lambda1 >= lambda2) of -i Phi for a stack of coordinate rows."""
    pts = np.asarray(pts, dtype=complex)
    a = np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 2]) ** 2
    b = np.abs(pts[:, 1]) ** 2 + np.abs(pts[:, 3]) ** 2
    c = pts[:, 0] * np.conj(pts[:, 1]) + pts[:, 2] * np.conj(pts[:, 3])
    if example == "P4":
        tt = np.abs(pts[:, 4]) ** 2
        a, b = a + tt, b + tt
    mean = (a + b) / 2
    rad = np.sqrt(((a - b) / 2) ** 2 + np.abs(c) ** 2)
    return np.stack([mean + rad, mean - rad], axis=1)


# -- classification -----------------------------------------------------------

class Locus(str, Enum):
    OUTER = "Outer_A"
    BOUNDARY = "Boundary_MGO"
    INNER = "Inner_B"
    TORUS = "TorusLocus_MTnu"
    CORE = "Core_MGnu"


@dataclass(frozen=True)
class LocusClass:
    tag: Locus
    t_value: float | None
    tags: frozenset

    @property
    def on_boundary(self) -> bool:
        return self.tag is Locus.BOUNDARY


def _require_transversal(nu: Weight):
    if nu.nu2 <= 0:
        raise ValueError(f"weight {nu} outside the regime nu1 > nu2 > 0")


def t_value(lam1, lam2, nu: Weight):
    """(lam1 nu2 - lam2 nu1) / ((nu1 + nu2)(lam1 - lam2)); vectorized."""
    return (lam1 * nu.nu2 - lam2 * nu.nu1) / (nu.total * (lam1 - lam2))


def classify(x: SpherePoint, nu: Weight, tol_t: float = T_TOL, tol_torus: float = 1e-9) -> LocusClass:
    _require_transversal(nu)
    mv = moment_map(x)
    tags = set()
    ft = torus_moment(x)
    on_torus = abs(nu.nu2 * ft[0] - nu.nu1 * ft[1]) <= tol_torus
    if on_torus:
        tags.add(Locus.TORUS)
    if mv.degenerate:
        tags.add(Locus.OUTER)
        return LocusClass(Locus.OUTER, None, frozenset(tags))
    t = float(t_value(mv.lambda1, mv.lambda2, nu))
    if abs(t) <= tol_t:
        tag = Locus.BOUNDARY
        if on_torus:
            tags.add(Locus.CORE)
    elif tol_t < t < 0.5:
        tag = Locus.INNER
    else:
        tag = Locus.OUTER
    tags.add(tag)
    return LocusClass(tag, t, frozenset(tags))


# -- tangent data -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TangentVector:
    base: SpherePoint
    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=complex).reshape(-1)
        if v.size != self.base.coords.size:
            raise ValueError("dimension mismatch between vector and base point")
        if abs(hermitian_inner(v, self.base.coords).real) > TANGENT_TOL * max(1.0, np.linalg.norm(v)):
            raise ValueError("vector is not tangent to the sphere")
        object.__setattr__(self, "vec", v)

    @property
    def horizontal(self) -> "TangentVector":
        x = self.base.coords
        return TangentVector(self.base, self.vec - hermitian_inner(self.vec, x) * x)

    def is_horizontal(self, tol: float = TANGENT_TOL) -> bool:
        return abs(hermitian_inner(self.vec, self.base.coords)) <= tol * max(1.0, np.linalg.norm(self.vec))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.base, self.vec + other.vec)

    def __mul__(self, s: float) -> "TangentVector":
        return TangentVector(self.base, s * self.vec)

    __rmul__ = __mul__


def contact_form(v: TangentVector) -> float:
    return hermitian_inner(v.vec, v.base.coords).imag


def fundamental_vector_field(xi: np.ndarray, x: SpherePoint) -> TangentVector:
    xi = check_skew_hermitian(xi)
    return TangentVector(x, -(algebra_action(x.example, xi) @ x.coords))


def moment_pairing(x: SpherePoint, xi: np.ndarray) -> float:
    return algebra_pairing(moment_matrix(x), xi)


def metric_pair(x: SpherePoint, u: TangentVector, v: TangentVector) -> tuple[float, float]:
    """Riemannian and symplectic pairings (g, omega) of horizontal vectors."""
    for w in (u, v):
        if w.base is not x and not np.allclose(w.base.coords, x.coords, atol=1e-14):
            raise ValueError("tangent vector based at a different point")
        if not w.is_horizontal():
            raise ValueError("metric_pair needs horizontal vectors")
    h = hermitian_inner(u.vec, v.vec)
    return h.real, -h.imag


def horizontal_basis(x: SpherePoint) -> np.ndarray:
    """Complex orthonormal basis of the horizontal space (rows)."""
    c = x.coords[:, None]
    q, _ = np.linalg.qr(np.hstack([c, np.eye(c.size)]))
    return q[:, 1:c.size].T


def evaluation_rank(x: SpherePoint, tol: float = 1e-9) -> int:
    """Real rank of xi -> xi_X(x) on u(2)."""
    cols = [fundamental_vector_field(b, x).vec for b in u2_basis()]
    real = np.array([np.concatenate([c.real, c.imag]) for c in cols]).T
    return int(np.linalg.matrix_rank(real, tol=tol))


def perp_h_basis(x: SpherePoint, tol: float = 1e-9) -> list[TangentVector]:
    """Hermitian complement of the complex span of the induced vector fields."""
    cols = [x.coords] + [fundamental_vector_field(b, x).vec for b in u2_basis()]
    A = np.array(cols).T
    u, s, _ = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > tol * s[0]))
    return [TangentVector(x, u[:, j]) for j in range(rank, A.shape[0])]


# -- the boundary hypersurface ------------------------------------------------

def _rho(mv: MomentValue, nu: Weight) -> np.ndarray:
    p1, p2 = nu.perp()
    return 1j * mv.h @ np.diag([p1, p2]) @ mv.h.conj().T


def _require_boundary(x: SpherePoint, nu: Weight, tol_t: float) -> MomentValue:
    lc = classify(x, nu, tol_t=tol_t)
    if not lc.on_boundary:
        raise ValueError(f"point is not on the boundary locus (t = {lc.t_value})")
    return moment_map(x)


def upsilon(x: SpherePoint, nu: Weight, tol_t: float = 1e-8) -> TangentVector:
    """Normal field J(rho_M) along the boundary hypersurface."""
    mv = _require_boundary(x, nu, tol_t)
    v = 1j * fundamental_vector_field(_rho(mv, nu), x).vec
    return TangentVector(x, v).horizontal


def d_nu_invariant(x: SpherePoint, nu: Weight, tol_t: float = 1e-8) -> float:
    mv = _require_boundary(x, nu, tol_t)
    den = fundamental_vector_field(_rho(mv, nu), x).horizontal.norm
    if den < 1e-10:
        raise ArithmeticError("induced vector field vanishes; action not locally free here")
    return nu.norm / den


def random_points(example: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the unit sphere as an (n, d+1) array."""
    m = AMBIENT_DIM[check_example(example)] + 1
    v = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def point_from_blocks(example: str, X: np.ndarray, t: complex = 0j) -> SpherePoint:
    c = [X[0, 0], X[1, 0], X[0, 1], X[1, 1]]
    if example == "P4":
        c.append(t)
    return SpherePoint.normalized(example, c)


def point_with_spectrum(example: str, lam1: float, lam2: float, rng: np.random.Generator | None = None) -> SpherePoint:
    """A point whose moment eigenvalues are (lam1, lam2).

    On P4 the excess lam1 + lam2 - 1 is carried by |t|^2. The orientation
    is random when a generator is supplied and the standard one otherwise.
    """
    tau = lam1 + lam2 - 1 if example == "P4" else 0.0
    if example == "P3" and abs(lam1 + lam2 - 1) > 1e-12:
        raise ValueError("P3 spectra have unit trace")
    if tau < -1e-12 or lam2 - tau < -1e-12:
        raise ValueError("spectrum not attained on this example")
    tau = max(tau, 0.0)
    s = np.sqrt(np.maximum([lam1 - tau, lam2 - tau], 0.0))
    U = V = np.eye(2)
    phase = 1.0
    if rng is not None:
        U, V = random_unitary(rng), random_unitary(rng)
        phase = np.exp(2j * np.pi * rng.random())
    X = U @ np.diag(s) @ V.conj().T
    return point_from_blocks(example, X, np.sqrt(tau) * phase)


def intersection_point(nu: Weight, example: str = "P3") -> SpherePoint:
    """Z along e1 and W along e2 with spectrum proportional to nu."""
    return point_with_spectrum(example, nu.nu1 / nu.total, nu.nu2 / nu.total)


def spectrum_for_t(nu: Weight, t0: float) -> tuple[float, float]:
    """Unit-trace spectrum with classifier value t0."""
    lam1 = (nu.nu1 - t0 * nu.total) / (nu.total * (1 - 2 * t0))
    return lam1, 1 - lam1


def boundary_ratio(x: SpherePoint) -> float:
    """|Z wedge W| / (|Z|^2 + |W|^2)."""
    c = x.coords
    wedge = abs(c[0] * c[3] - c[1] * c[2])
    return float(wedge / (np.linalg.norm(c[:4]) ** 2))


def _deform(example, U, V, sig0, tau0, tphase, sig_end, s):
    sig = (1 - s) * sig0 + s * sig_end
    tau = (1 - s) * tau0
    X = U @ np.diag(sig) @ V.conj().T
    c = np.array([X[0, 0], X[1, 0], X[0, 1], X[1, 1]] + ([tau * tphase] if example == "P4" else []))
    return c / np.linalg.norm(c)


def sample_boundary(nu: Weight, n: int, seed: int, example: str = "P3", max_iter: int = 100) -> list[SpherePoint]:
    """Random points on the boundary hypersurface.

    Each seeded draw is pushed along a path that keeps the singular
    vectors of X fixed and moves its singular values toward either the
    rank-one configuration (inside) or the balanced one (outside), and
    the crossing is located with Brent's method on nu2*lam1 - nu1*lam2.
    """
    _require_transversal(nu)
    rng = np.random.default_rng(seed)
    out = []
    inner_end = np.array([1.0, 0.0])
    outer_end = np.array([1.0, 1.0]) / np.sqrt(2)
    while len(out) < n:
        x0 = random_points(example, 1, rng)[0]
        X = np.array([[x0[0], x0[2]], [x0[1], x0[3]]])
        U, sig, Vh = np.linalg.svd(X)
        V = Vh.conj().T
        tau0 = abs(x0[4]) if example == "P4" else 0.0
        tphase = x0[4] / tau0 if tau0 > 0 else 1.0

        def f(s, end):
            lam = spectra(example, _deform(example, U, V, sig, tau0, tphase, end, s)[None, :])[0]
            return nu.nu2 * lam[0] - nu.nu1 * lam[1]

        f0 = nu.nu2 * spectra(example, x0[None, :])[0][0] - nu.nu1 * spectra(example, x0[None, :])[0][1]
        end = outer_end if f0 > 0 else inner_end
        try:
            s = brentq(f, 0.0, 1.0, args=(end,), xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
        except (ValueError, RuntimeError) as err:
            raise RuntimeError(f"boundary root-finding failed for draw {len(out)}: {err}") from err
        p = SpherePoint.normalized(example, _deform(example, U, V, sig, tau0, tphase, end, s))
        if not classify(p, nu, tol_t=1e-9).on_boundary:
            continue
        out.append(p)
    return out


def heisenberg_displace(x: SpherePoint, theta: float, v: TangentVector) -> SpherePoint:
    """Move along the horizontal great circle in direction v, then rotate the fiber phase."""
    if not v.is_horizontal():
        raise ValueError("displacement must be horizontal")
    r = v.norm
    if r >= np.pi / 2:
        raise ValueError("displacement too large")
    if r == 0:
        return x.phase(theta)
    c = np.cos(r) * x.coords + np.sin(r) * v.vec / r
    return SpherePoint.normalized(x.example, np.exp(1j * theta) * c)


def fs_distance(x: SpherePoint, y: SpherePoint) -> float:
    """Distance between the images in projective space."""
    return float(np.arccos(min(1.0, abs(hermitian_inner(x.coords, y.coords)))))
