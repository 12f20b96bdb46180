"""Exact isotypical bases of homogeneous polynomials and their reproducing kernels.

Sections are polynomials in (z1, z2, w1, w2[, t]) with exact rational
coefficients. Squared norms are kept as rational multiples of pi^d and
the kernels are evaluated in floating point only at the last step.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, lgamma, log, pi, prod
from typing import Iterable

import numpy as np
from scipy import sparse
from scipy.optimize import minimize

from .geometry import SpherePoint, random_points, spectra
from .lie_rep import (
    AMBIENT_DIM,
    Weight,
    character_of_matrix,
    check_example,
    isotype_dimension,
    weyl_integrate,
)

Z1, Z2, W1, W2, T = range(5)
DEFAULT_CAP = 100_000


class Poly:
    """Sparse multivariate polynomial with exact coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        self.terms = {e: c for e, c in (terms or {}).items() if c != 0}

    @classmethod
    def monomial(cls, exps: Iterable[int], coeff=1) -> "Poly":
        e = tuple(exps)
        return cls(len(e), {e: coeff})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls.monomial(e)

    @classmethod
    def one(cls, nvars: int) -> "Poly":
        return cls.monomial([0] * nvars)

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.nvars == other.nvars and self.terms == other.terms

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return Poly(self.nvars, out)

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return Poly(self.nvars, {e: c * other for e, c in self.terms.items()})
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        out, base = Poly.one(self.nvars), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        names = ["z1", "z2", "w1", "w2", "t"][: self.nvars]
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"{n}^{k}" if k > 1 else n for n, k in zip(names, e) if k)
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        return " + ".join(parts)

    def shift(self, src: int, dst: int) -> "Poly":
        """Apply x_dst * d/dx_src."""
        out: dict = {}
        for e, c in self.terms.items():
            k = e[src]
            if k == 0:
                continue
            f = list(e)
            f[src] -= 1
            f[dst] += 1
            f = tuple(f)
            out[f] = out.get(f, 0) + c * k
        return Poly(self.nvars, out)

    @property
    def degrees(self) -> set[int]:
        return {sum(e) for e in self.terms}

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        acc = np.zeros(len(pts), dtype=complex)
        for e, c in self.terms.items():
            acc += float(c) * np.prod(pts ** np.array(e), axis=1)
        return acc


def lower(p: Poly) -> Poly:
    """F = z2 d/dz1 + w2 d/dw1."""
    return p.shift(Z1, Z2) + p.shift(W1, W2)


def raise_(p: Poly) -> Poly:
    """E = z1 d/dz2 + w1 d/dw2."""
    return p.shift(Z2, Z1) + p.shift(W2, W1)


def torus_weight(exps: tuple[int, ...]) -> tuple[int, int]:
    w = (exps[Z1] + exps[W1], exps[Z2] + exps[W2])
    if len(exps) > T:
        w = (w[0] + exps[T], w[1] + exps[T])
    return w


def multidegree(exps: tuple[int, ...]) -> tuple[int, ...]:
    md = (exps[Z1] + exps[Z2], exps[W1] + exps[W2])
    return md + (exps[T],) if len(exps) > T else md


@dataclass(frozen=True)
class PiRational:
    """rational * pi**power."""

    rational: Fraction
    power: int

    def __float__(self):
        return float(self.rational) * pi ** self.power

    def log(self) -> float:
        return log(self.rational.numerator) - log(self.rational.denominator) + self.power * log(pi)


def monomial_norm_sq(example: str, alpha: Iterable[int]) -> PiRational:
    """Integral of |x^alpha|^2 over the sphere of total volume pi^d/d!."""
    d = AMBIENT_DIM[check_example(example)]
    alpha = tuple(alpha)
    if len(alpha) != d + 1 or min(alpha) < 0:
        raise ValueError("bad exponent vector")
    return PiRational(Fraction(prod(factorial(a) for a in alpha), factorial(d + sum(alpha))), d)


def poly_norm_sq(example: str, p: Poly) -> PiRational:
    d = AMBIENT_DIM[example]
    degs = p.degrees
    if len(degs) != 1:
        raise ValueError("norm defined here for homogeneous polynomials only")
    l = degs.pop()
    s = sum(Fraction(c) ** 2 * prod(factorial(a) for a in e) for e, c in p.terms.items())
    return PiRational(s / factorial(d + l), d)


def wedge(nvars: int) -> Poly:
    """z1 w2 - z2 w1."""
    z1, z2, w1, w2 = (Poly.variable(nvars, i) for i in (Z1, Z2, W1, W2))
    return z1 * w2 - z2 * w1


def highest_weight_vector(example: str, l: int, block, a: int) -> Poly:
    """(Z wedge W)^a times the pure first-coordinate monomial completing the block."""
    check_example(example)
    nv = AMBIENT_DIM[example] + 1
    if example == "P3":
        h = int(block)
        if not (0 <= a <= min(h, l - h)):
            raise ValueError(f"invalid block h={h}, a={a} at level {l}")
        exps = [h - a, 0, l - h - a, 0]
    else:
        p, q, r = block
        if p + q + r != l or min(p, q, r) < 0 or not (0 <= a <= min(p, q)):
            raise ValueError(f"invalid block {(p, q, r)}, a={a} at level {l}")
        exps = [p - a, 0, q - a, 0, r]
    v = wedge(nv) ** a * Poly.monomial(exps)
    if raise_(v):
        raise AssertionError("highest weight vector not annihilated by E")
    return v


@dataclass
class Section:
    poly: Poly
    norm_sq: PiRational
    level: int
    block: object
    j: int

    @property
    def weight(self) -> tuple[int, int]:
        return torus_weight(next(iter(self.poly.terms)))


def isotype_blocks(example: str, k: int, nu: Weight) -> list[tuple[int, object, int]]:
    """(level, block, a) for every highest weight vector of weight k*nu."""
    knu = nu.scaled(k)
    out = []
    if example == "P3":
        l = knu.total - 1
        for h in range(knu.nu2, knu.nu1):
            out.append((l, h, knu.nu2))
    else:
        for r in range(knu.nu2 + 1):
            a = knu.nu2 - r
            s = knu.total - 1 - 2 * r   # p + q
            for p in range(a, s - a + 1):
                out.append((s + r, (p, s - p, r), a))
    return out


@dataclass
class IsotypeBasis:
    example: str
    k: int
    nu: Weight
    sections: list[Section] = field(default_factory=list)
    _compiled: tuple | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return AMBIENT_DIM[self.example]

    def __len__(self):
        return len(self.sections)

    def compiled(self):
        """Exponent matrix, log|coeff|, sign and section index of all terms.

        Each section is divided by the square root of its norm so that the
        kernel becomes a plain sum of products.
        """
        if self._compiled is None:
            d = self.d
            exps, logc, sign, owner = [], [], [], []
            for i, s in enumerate(self.sections):
                num = sum(Fraction(c) ** 2 * prod(factorial(a) for a in e) for e, c in s.poly.terms.items())
                lognorm = log(num.numerator) - log(num.denominator)
                base = 0.5 * (lgamma(d + s.level + 1) - d * log(pi) - lognorm)
                for e, c in s.poly.terms.items():
                    c = Fraction(c)
                    exps.append(e)
                    logc.append(base + log(abs(c.numerator)) - log(c.denominator))
                    sign.append(1.0 if c > 0 else -1.0)
                    owner.append(i)
            exps = np.array(exps, dtype=float)
            owner = np.array(owner)
            reduce = sparse.csr_matrix(
                (np.array(sign), (owner, np.arange(len(owner)))), shape=(len(self.sections), len(owner)))
            self._compiled = (exps, np.array(logc), reduce)
        return self._compiled

    def section_values(self, pts: np.ndarray, chunk_terms: int = 4_000_000) -> np.ndarray:
        """Normalized section values, shape (n_sections, n_points)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        exps, logc, reduce = self.compiled()
        logs = np.log(np.where(pts == 0, 1e-300, pts)).T
        n = max(1, chunk_terms // max(1, len(logc)))
        out = np.empty((len(self.sections), len(pts)), dtype=complex)
        for s in range(0, len(pts), n):
            terms = np.exp(exps @ logs[:, s:s + n] + logc[:, None])
            out[:, s:s + n] = reduce @ terms
        return out

    def to_json(self) -> dict:
        return {
            "example": self.example,
            "k": self.k,
            "nu": list(self.nu.as_tuple()),
            "sections": [
                {
                    "level": s.level,
                    "weight": list(s.weight),
                    "terms": [[list(e), str(Fraction(c))] for e, c in sorted(s.poly.terms.items())],
                    "norm_sq": {"rational": str(s.norm_sq.rational), "pi_power": s.norm_sq.power},
                }
                for s in self.sections
            ],
        }


@lru_cache(maxsize=64)
def isotype_basis(example: str, k: int, nu: Weight, cap: int = DEFAULT_CAP) -> IsotypeBasis:
    """Exact orthogonal basis of the k*nu isotypical component.

    Every highest weight vector is lowered k*(nu1-nu2)-1 times. Sections
    with different (multidegree, torus weight) signatures are orthogonal
    because monomials are, and the construction checks that no signature
    repeats.
    """
    check_example(example)
    total, _ = isotype_dimension(example, k, nu)
    if total > cap:
        raise MemoryError(f"isotypical dimension {total} exceeds cap {cap}")
    basis = IsotypeBasis(example, k, nu)
    seen = set()
    steps = k * nu.dim
    for l, block, a in isotype_blocks(example, k, nu):
        v = highest_weight_vector(example, l, block, a)
        for j in range(steps):
            sigs = {(multidegree(e), torus_weight(e)) for e in v.terms}
            if len(sigs) != 1:
                raise AssertionError("section is not homogeneous in degree and weight")
            sig = sigs.pop()
            if sig in seen:
                raise AssertionError(f"repeated signature {sig}; orthogonality not guaranteed")
            seen.add(sig)
            basis.sections.append(Section(v, poly_norm_sq(example, v), l, block, j))
            v = lower(v)
        if v:
            raise AssertionError("lowering chain longer than the representation dimension")
    if len(basis.sections) != total:
        raise AssertionError(f"built {len(basis.sections)} sections, expected {total}")
    return basis


@dataclass(frozen=True)
class KernelValue:
    value: complex
    k: int
    nu: Weight
    x: SpherePoint
    y: SpherePoint


def _coords(pts) -> np.ndarray:
    if isinstance(pts, SpherePoint):
        return pts.coords[None, :]
    if isinstance(pts, (list, tuple)) and pts and isinstance(pts[0], SpherePoint):
        return np.array([p.coords for p in pts])
    return np.atleast_2d(np.asarray(pts, dtype=complex))


def kernel(example: str, k: int, nu: Weight, x: SpherePoint, y: SpherePoint) -> KernelValue:
    b = isotype_basis(example, k, nu)
    sv = b.section_values(np.vstack([x.coords, y.coords]))
    val = complex(np.sum(sv[:, 0] * np.conj(sv[:, 1])))
    if x is y or np.array_equal(x.coords, y.coords):
        val = complex(val.real, 0.0)
    return KernelValue(val, k, nu, x, y)


def kernel_diagonal(example: str, k: int, nu: Weight, pts) -> np.ndarray:
    """Pi(x, x) at many points at once."""
    b = isotype_basis(example, k, nu)
    sv = b.section_values(_coords(pts))
    return np.sum(np.abs(sv) ** 2, axis=0)


def kernel_pairs(example: str, k: int, nu: Weight, xs, ys) -> np.ndarray:
    b = isotype_basis(example, k, nu)
    sx = b.section_values(_coords(xs))
    sy = b.section_values(_coords(ys))
    return np.sum(sx * np.conj(sy), axis=0)


def level_kernel(example: str, l: int, x: SpherePoint, y: SpherePoint) -> complex:
    d = AMBIENT_DIM[check_example(example)]
    return factorial(d) / pi ** d * comb(l + d, d) * complex(np.vdot(y.coords, x.coords)) ** l


@lru_cache(maxsize=4)
def moment_norm_bounds(example: str, n_samples: int = 20_000, seed: int = 0) -> tuple[float, float]:
    """(min, max) of the Frobenius norm of the moment map, sampled then polished."""
    rng = np.random.default_rng(seed)
    pts = random_points(example, n_samples, rng)
    # coordinate axes catch extremes sitting on lower-dimensional strata
    pts = np.vstack([pts, np.eye(pts.shape[1], dtype=complex)])
    norms = np.linalg.norm(spectra(example, pts), axis=1)
    m = pts.shape[1]

    def to_pt(v):
        c = v[:m] + 1j * v[m:]
        return (c / np.linalg.norm(c))[None, :]

    def obj(v, sgn):
        return sgn * float(np.linalg.norm(spectra(example, to_pt(v))[0]))

    def polish(idx, sgn):
        p = pts[idx]
        res = minimize(obj, np.concatenate([p.real, p.imag]), args=(sgn,), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20_000})
        return sgn * res.fun

    lo = min(polish(np.argmin(norms), 1), norms.min())
    hi = max(polish(np.argmax(norms), -1), norms.max())
    return float(lo), float(hi)


def level_range(example: str, k: int, nu: Weight) -> tuple[int, int]:
    """Levels that can carry weight k*nu, bracketed through the moment norm bounds."""
    a_g, big_a = moment_norm_bounds(example)
    upper = int(np.ceil(nu.norm / a_g * k + 1 / a_g))
    lower_ = max(0, int(np.floor(nu.norm / big_a * k - 1 / big_a)))
    if upper < lower_:
        raise ValueError("empty level range")
    return lower_, upper


def quadrature_kernel(example: str, k: int, nu: Weight, x: SpherePoint, y: SpherePoint,
                      n_torus: int = 64, n_flag: int = 32, levels: tuple[int, int] | None = None) -> complex:
    """Project the full level kernels onto the k*nu isotype by Haar quadrature.

    Integrates d * conj(chi(g)) * sum_l Pi_l(g x, y) over U(2). Under the
    torus convention used here (z1, w1 carry weight (1,0)) this is the
    projector whose image is the k*nu isotypical component.
    """
    knu = nu.scaled(k)
    d = AMBIENT_DIM[example]
    lo, hi = levels or level_range(example, k, nu)
    coeffs = [factorial(d) / pi ** d * comb(l + d, d) for l in range(lo, hi + 1)]
    xc, yc = x.coords, y.coords
    M = np.outer(xc[[0, 1]], np.conj(yc[[0, 1]])) + np.outer(xc[[2, 3]], np.conj(yc[[2, 3]]))
    twist = xc[4] * np.conj(yc[4]) if example == "P4" else 0.0

    def integrand(g):
        s = np.einsum("nij,ji->n", g, M)
        if example == "P4":
            s = s + (g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]) * twist
        acc = np.zeros_like(s)
        for c in reversed(coeffs):
            acc = acc * s + c
        acc = acc * s ** lo
        return np.conj(character_of_matrix(knu, g)) * acc

    return knu.dim * weyl_integrate(integrand, n_torus=n_torus, n_flag=n_flag)


def sphere_volume(example: str) -> float:
    d = AMBIENT_DIM[example]
    return pi ** d / factorial(d)


def dim_by_trace(example: str, k: int, nu: Weight, n_mc: int, seed: int) -> tuple[float, float]:
    """Monte Carlo trace of the isotypical projector: (estimate, standard error)."""
    rng = np.random.default_rng(seed)
    vals = kernel_diagonal(example, k, nu, random_points(example, n_mc, rng))
    vol = sphere_volume(example)
    return float(vol * vals.mean()), float(vol * vals.std(ddof=1) / np.sqrt(n_mc))


def basis_json(basis: IsotypeBasis) -> str:
    return json.dumps(basis.to_json())
