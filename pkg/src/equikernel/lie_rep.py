"""U(2) weights, characters, Clebsch-Gordan branching and Haar quadrature."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Callable, NamedTuple

import numpy as np

EXAMPLES = ("P3", "P4")
AMBIENT_DIM = {"P3": 3, "P4": 4}

UNITARY_TOL = 1e-12
COINCIDENCE_GAP = 1e-9
DEGENERACY_TOL = 1e-10


def check_example(example: str) -> str:
    if example not in AMBIENT_DIM:
        raise ValueError(f"unknown example {example!r}; expected one of {EXAMPLES}")
    return example


@dataclass(frozen=True, order=True)
class Weight:
    """Dominant integer pair (nu1 > nu2) labelling an irreducible of U(2)."""

    nu1: int
    nu2: int

    def __post_init__(self):
        if int(self.nu1) != self.nu1 or int(self.nu2) != self.nu2:
            raise ValueError("weight entries must be integers")
        if not self.nu1 > self.nu2:
            raise ValueError(f"weight {(self.nu1, self.nu2)} is not strictly dominant")

    @property
    def dim(self) -> int:
        return self.nu1 - self.nu2

    @property
    def norm(self) -> float:
        return float(np.hypot(self.nu1, self.nu2))

    @property
    def total(self) -> int:
        return self.nu1 + self.nu2

    def scaled(self, k: int) -> "Weight":
        return Weight(k * self.nu1, k * self.nu2)

    def perp(self) -> tuple[int, int]:
        # rotation by 90 degrees; not dominant in general, so a plain tuple
        return (-self.nu2, self.nu1)

    def as_tuple(self) -> tuple[int, int]:
        return (self.nu1, self.nu2)

    @classmethod
    def parse(cls, text: str) -> "Weight":
        parts = text.replace("(", "").replace(")", "").split(",")
        if len(parts) != 2:
            raise ValueError(f"cannot parse weight from {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    def __str__(self):
        return f"({self.nu1},{self.nu2})"


def _reduce_angle(theta: float) -> float:
    r = float(np.mod(theta + np.pi, 2 * np.pi) - np.pi)
    return np.pi if r == -np.pi else r


@dataclass(frozen=True)
class TorusElement:
    theta1: float
    theta2: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", _reduce_angle(self.theta1))
        object.__setattr__(self, "theta2", _reduce_angle(self.theta2))

    @classmethod
    def from_complex(cls, t1: complex, t2: complex) -> "TorusElement":
        return cls(float(np.angle(t1)), float(np.angle(t2)))

    @property
    def t(self) -> tuple[complex, complex]:
        return complex(np.exp(1j * self.theta1)), complex(np.exp(1j * self.theta2))

    def matrix(self) -> np.ndarray:
        return np.diag(self.t)


def check_unitary(g: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    g = np.asarray(g, dtype=complex)
    if g.shape != (2, 2):
        raise ValueError("group element must be 2x2")
    if np.max(np.abs(g @ g.conj().T - np.eye(2))) > tol:
        raise ValueError("matrix is not unitary")
    return g


def check_skew_hermitian(xi: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != (2, 2):
        raise ValueError("Lie algebra element must be 2x2")
    if np.max(np.abs(xi + xi.conj().T)) > tol:
        raise ValueError("matrix is not skew-Hermitian")
    return xi


def algebra_pairing(b1: np.ndarray, b2: np.ndarray) -> float:
    """trace(b1 * b2^*), real for skew-Hermitian arguments."""
    return float(np.real(np.trace(b1 @ np.asarray(b2).conj().T)))


def u2_basis() -> list[np.ndarray]:
    """Real basis of u(2): i E11, i E22, E12 - E21, i (E12 + E21)."""
    return [
        np.array([[1j, 0], [0, 0]]),
        np.array([[0, 0], [0, 1j]]),
        np.array([[0, 1], [-1, 0]], dtype=complex),
        np.array([[0, 1j], [1j, 0]]),
    ]


# -- characters ---------------------------------------------------------------

def character_values(nu: Weight, t1, t2) -> np.ndarray:
    """Vectorized character on torus parameters t1, t2 (complex arrays)."""
    t1 = np.asarray(t1, dtype=complex)
    t2 = np.asarray(t2, dtype=complex)
    t1, t2 = np.broadcast_arrays(t1, t2)
    n = nu.dim
    out = np.empty(t1.shape, dtype=complex)
    close = np.abs(t1 - t2) < COINCIDENCE_GAP
    far = ~close
    if np.any(far):
        a, b = t1[far], t2[far]
        out[far] = (a ** nu.nu1 * b ** nu.nu2 - a ** nu.nu2 * b ** nu.nu1) / (a - b)
    if np.any(close):
        a, b = t1[close], t2[close]
        acc = np.zeros(a.shape, dtype=complex)
        for j in range(n):
            acc += a ** (nu.nu1 - 1 - j) * b ** (nu.nu2 + j)
        out[close] = acc
    return out


def character(nu: Weight, t: TorusElement) -> complex:
    t1, t2 = t.t
    return complex(character_values(nu, t1, t2))


def character_of_matrix(nu: Weight, g: np.ndarray) -> np.ndarray:
    """Character on arbitrary (batched) group elements without eigensolves.

    Uses det^nu2 times the complete symmetric polynomial h_n in the
    eigenvalues, with h_n = tr*h_{n-1} - det*h_{n-2}.
    """
    g = np.asarray(g, dtype=complex)
    tr = g[..., 0, 0] + g[..., 1, 1]
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    h_prev = np.zeros_like(tr)
    h = np.ones_like(tr)
    for _ in range(nu.dim - 1):
        h_prev, h = h, tr * h - det * h_prev
    return det ** nu.nu2 * h if nu.nu2 >= 0 else h / det ** (-nu.nu2)


# -- branching ----------------------------------------------------------------

def clebsch_gordan(p: int, q: int) -> list[Weight]:
    """Sym^p x Sym^q as a list of weights (p+1+q-a, a), a = 0..min(p, q)."""
    if p < 0 or q < 0:
        raise ValueError("symmetric powers must be non-negative")
    if p < q:
        p, q = q, p
    return [Weight(p + 1 + q - a, a) for a in range(q + 1)]


@dataclass
class BranchingTable:
    level: int
    entries: dict[Weight, int] = field(default_factory=dict)

    def add(self, nu: Weight, mult: int = 1):
        self.entries[nu] = self.entries.get(nu, 0) + mult

    def multiplicity(self, nu: Weight) -> int:
        return self.entries.get(nu, 0)

    @property
    def total_dim(self) -> int:
        return sum(m * nu.dim for nu, m in self.entries.items())


@lru_cache(maxsize=512)
def branch_level(example: str, l: int) -> BranchingTable:
    check_example(example)
    if l < 0:
        raise ValueError("level must be non-negative")
    table = BranchingTable(level=l)
    if example == "P3":
        for h in range(l + 1):
            for nu in clebsch_gordan(h, l - h):
                table.add(nu)
    else:
        for r in range(l + 1):
            for p in range(l - r + 1):
                q = l - r - p
                for nu in clebsch_gordan(p, q):
                    table.add(Weight(nu.nu1 + r, nu.nu2 + r))
    return table


def ambient_level_dim(example: str, l: int) -> int:
    d = AMBIENT_DIM[check_example(example)]
    return comb(l + d, d)


def isotype_dimension(example: str, k: int, nu: Weight) -> tuple[int, dict[int, int]]:
    """Dimension of the k*nu isotypical component and its per-level multiplicities."""
    check_example(example)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if nu.nu2 <= 0:
        raise ValueError(f"weight {nu} outside the transversal regime nu1 > nu2 > 0")
    knu = nu.scaled(k)
    # every weight at level l has nu1 + nu2 >= l + 1, so higher levels never contribute
    top = knu.total - 1
    per_level = {}
    for l in range(top + 1):
        m = branch_level(example, l).multiplicity(knu)
        if m:
            per_level[l] = m
    total = sum(per_level.values()) * knu.dim
    return total, per_level


# -- Weyl quadrature ----------------------------------------------------------

def flag_nodes(n_flag: int) -> tuple[np.ndarray, np.ndarray]:
    """Coset representatives of G/T = S^2 with probability weights.

    Gauss-Legendre in the cosine of the polar angle times a uniform
    azimuthal grid of 2*n_flag points.
    """
    x, w = np.polynomial.legendre.leggauss(n_flag)
    beta = np.arccos(x)
    phi = 2 * np.pi * np.arange(2 * n_flag) / (2 * n_flag)
    B, P = np.meshgrid(beta, phi, indexing="ij")
    W = np.repeat(w[:, None] / 2, 2 * n_flag, axis=1) / (2 * n_flag)
    c = np.cos(B / 2).ravel()
    s = np.sin(B / 2).ravel()
    e = np.exp(1j * P.ravel())
    h = np.empty((c.size, 2, 2), dtype=complex)
    h[:, 0, 0] = c
    h[:, 0, 1] = -np.conj(e) * s
    h[:, 1, 0] = e * s
    h[:, 1, 1] = c
    return h, W.ravel()


def torus_nodes(n_torus: int) -> tuple[np.ndarray, np.ndarray]:
    ang = 2 * np.pi * np.arange(n_torus) / n_torus
    T1, T2 = np.meshgrid(np.exp(1j * ang), np.exp(1j * ang), indexing="ij")
    return T1.ravel(), T2.ravel()


def weyl_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    n_torus: int = 64,
    n_flag: int = 32,
    chunk: int = 8,
) -> complex:
    """Integrate f over U(2) against normalized Haar measure.

    ``f`` receives a stack of group elements of shape (N, 2, 2) and must
    return N values. The torus factor is an n_torus x n_torus trapezoid rule
    (exact for trigonometric polynomials of degree < n_torus) and G/T is
    sampled on an S^2 product rule, so accuracy is limited only by the
    polynomial degree of the integrand.
    """
    if n_torus < 4 or n_flag < 4:
        raise ValueError("grid sizes must be at least 4")
    t1, t2 = torus_nodes(n_torus)
    weyl_w = 0.5 * np.abs(t1 - t2) ** 2 / (n_torus * n_torus)
    hs, hw = flag_nodes(n_flag)
    total = 0.0 + 0.0j
    for start in range(0, len(hw), chunk):
        h = hs[start:start + chunk]
        # g = h diag(t) h^{-1}, built for every (coset, torus) pair
        hinv = np.conj(np.swapaxes(h, 1, 2))
        g = np.einsum("cij,nj,cjk->cnik", h, np.stack([t1, t2], axis=1), hinv)
        vals = np.asarray(f(g.reshape(-1, 2, 2))).reshape(len(h), -1)
        total += np.sum(hw[start:start + chunk, None] * weyl_w[None, :] * vals)
    return complex(total)


# -- moment diagonalization ---------------------------------------------------

class Diagonalization(NamedTuple):
    lambda1: float
    lambda2: float
    h: np.ndarray
    degenerate: bool


def diagonalize_moment(xi: np.ndarray) -> Diagonalization:
    """Eigen-data of -i*xi with an SU(2) diagonalizer.

    The first column is normalized so its first nonzero entry is real
    positive; for a scalar matrix the identity is returned and the
    degeneracy flag is set.
    """
    xi = check_skew_hermitian(xi, tol=1e-10)
    herm = -1j * xi
    herm = (herm + herm.conj().T) / 2
    vals, vecs = np.linalg.eigh(herm)
    lam1, lam2 = float(vals[1]), float(vals[0])
    if lam1 - lam2 < DEGENERACY_TOL:
        return Diagonalization(lam1, lam2, np.eye(2, dtype=complex), True)
    v = vecs[:, 1]
    lead = v[0] if abs(v[0]) > 1e-14 else v[1]
    v = v * (abs(lead) / lead)
    h = np.array([[v[0], -np.conj(v[1])], [v[1], np.conj(v[0])]])
    return Diagonalization(lam1, lam2, h, False)
