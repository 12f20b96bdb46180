"""Leading-order predictions for the isotypical kernels and a harness comparing them with exact values."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from math import factorial, pi, sqrt

import numpy as np

from .geometry import (
    SpherePoint,
    TangentVector,
    d_nu_invariant,
    fundamental_vector_field,
    hermitian_inner,
    metric_pair,
    moment_map,
    point_with_spectrum,
    random_points,
    sample_boundary,
    spectrum_for_t,
    t_value,
)
from .hardy import kernel_diagonal
from .lie_rep import AMBIENT_DIM, Weight, flag_nodes, u2_basis


def d_gt_constant() -> float:
    """(2 pi)^(-1/2) divided by the area 2 pi^2 of the unit three-sphere."""
    return 1.0 / (sqrt(2 * pi) * 2 * pi ** 2)


def gt_chart_density() -> float:
    """Density at the origin of probability Haar measure on G/T in the exponential chart."""
    return 1.0 / pi


def gt_density_by_quadrature(n_flag: int = 256, n0: int = 100, levels: int = 5) -> float:
    """Chart density of the G/T rule used by weyl_integrate, read off numerically.

    Integrates exp(-n |w|^2) over G/T with the flag quadrature, divides by
    the flat integral pi/n and Richardson-extrapolates in 1/n.
    """
    h, w = flag_nodes(n_flag)
    r = np.arccos(np.clip(np.abs(h[:, 0, 0]), 0.0, 1.0))
    ns = [n0 * 2 ** i for i in range(levels)]
    table = [float(np.sum(w * np.exp(-n * r ** 2)) * n / pi) for n in ns]
    for j in range(1, levels):
        table = [(2 ** j * table[i + 1] - table[i]) / (2 ** j - 1) for i in range(len(table) - 1)]
    return table[0]


@dataclass(frozen=True)
class LeadingTermInputs:
    m: SpherePoint
    nu: Weight
    d: int
    norm_phi: float
    lambda_nu: float
    d_nu: float

    def __post_init__(self):
        if min(self.norm_phi, self.lambda_nu, self.d_nu) <= 0:
            raise ValueError("leading-term inputs must be positive")
        if abs(self.norm_phi - self.lambda_nu * self.nu.norm) > 1e-9 * self.norm_phi:
            raise ValueError("norm_phi inconsistent with lambda_nu")

    @classmethod
    def at(cls, x: SpherePoint, nu: Weight) -> "LeadingTermInputs":
        mv = moment_map(x)
        return cls(x, nu, x.d, mv.norm, mv.norm / nu.norm, d_nu_invariant(x, nu))


def leading_diag(inputs: LeadingTermInputs, k: int, gt_constant: float | None = None) -> float:
    c = d_gt_constant() if gt_constant is None else gt_constant
    d = inputs.d
    return (c / sqrt(2) * inputs.norm_phi ** (-(d + 0.5))
            * (k * inputs.nu.norm / pi) ** (d - 0.5) * inputs.d_nu)


def psi2(v1: TangentVector, v2: TangentVector) -> complex:
    if not np.allclose(v1.base.coords, v2.base.coords, atol=1e-14):
        raise ValueError("vectors based at different points")
    _, omega = metric_pair(v1.base, v1, v2)
    diff = v1.vec - v2.vec
    return complex(-0.5 * float(np.vdot(diff, diff).real), -omega)


def _check_perp(v: TangentVector, tol: float = 1e-9):
    for b in u2_basis():
        field_ = fundamental_vector_field(b, v.base).horizontal
        if abs(hermitian_inner(v.vec, field_.vec)) > tol * max(1.0, v.norm):
            raise ValueError("vector is not Hermitian-orthogonal to the orbit directions")


def leading_rescaled(inputs: LeadingTermInputs, k: int, v1: TangentVector, v2: TangentVector,
                     gt_constant: float | None = None) -> complex:
    _check_perp(v1)
    _check_perp(v2)
    return leading_diag(inputs, k, gt_constant) * complex(np.exp(psi2(v1, v2) / inputs.lambda_nu))


# -- surface integral over the boundary hypersurface --------------------------

def _t_field(example: str, pts: np.ndarray, nu: Weight) -> np.ndarray:
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    a = np.abs(pts[:, 0]) ** 2 + np.abs(pts[:, 2]) ** 2
    b = np.abs(pts[:, 1]) ** 2 + np.abs(pts[:, 3]) ** 2
    c = pts[:, 0] * np.conj(pts[:, 1]) + pts[:, 2] * np.conj(pts[:, 3])
    if example == "P4":
        tt = np.abs(pts[:, 4]) ** 2
        a, b = a + tt, b + tt
    mean, rad = (a + b) / 2, np.sqrt(((a - b) / 2) ** 2 + np.abs(c) ** 2)
    return t_value(mean + rad, mean - rad, nu)


def _grad_norm(example: str, pts: np.ndarray, nu: Weight, step: float = 1e-5) -> np.ndarray:
    """Norm of the gradient of t on projective space by central differences.

    t is extended to a phase-invariant, degree-zero function on C^{d+1}, so
    its Euclidean gradient is automatically horizontal.
    """
    m = pts.shape[1]
    sq = np.zeros(len(pts))
    for j in range(m):
        for unit in (1.0, 1j):
            e = np.zeros(m, dtype=complex)
            e[j] = unit
            df = (_t_field(example, pts + step * e, nu) - _t_field(example, pts - step * e, nu)) / (2 * step)
            sq += df ** 2
    return np.sqrt(sq)


def _density_factor(example: str, pts: np.ndarray, nu: Weight) -> tuple[np.ndarray, np.ndarray]:
    """Moment norm and the D_nu factor for a stack of points."""
    X = np.stack([pts[:, [0, 1]], pts[:, [2, 3]]], axis=2)
    herm = X @ np.conj(np.swapaxes(X, 1, 2))
    if example == "P4":
        herm = herm + (np.abs(pts[:, 4]) ** 2)[:, None, None] * np.eye(2)
    vals, vecs = np.linalg.eigh(herm)
    h = vecs[:, :, ::-1]
    p1, p2 = nu.perp()
    rho = 1j * h @ np.diag([p1, p2]) @ np.conj(np.swapaxes(h, 1, 2))
    rx = rho @ X
    parts = [-rx[:, :, 0], -rx[:, :, 1]]
    if example == "P4":
        parts.append((-np.trace(rho, axis1=1, axis2=2) * pts[:, 4])[:, None])
    v = np.concatenate(parts, axis=1)
    v = v - np.sum(v * np.conj(pts), axis=1)[:, None] * pts
    return np.linalg.norm(vals, axis=1), nu.norm / np.linalg.norm(v, axis=1)


@dataclass(frozen=True)
class SurfaceIntegral:
    value: float
    stderr: float
    n_hits: int
    n_draws: int


def boundary_surface_integral(nu: Weight, n_surface: int, seed: int, example: str = "P3",
                              shell: float = 0.01, batch: int = 500_000) -> SurfaceIntegral:
    """Integral of |Phi|^-d * D_nu over the boundary hypersurface.

    Uses the co-area formula on a thin shell |t| < shell: uniform draws in
    the shell are weighted by |grad t| / (2 shell).
    """
    d = AMBIENT_DIM[example]
    rng = np.random.default_rng(seed)
    vol = pi ** d / factorial(d)
    total = total_sq = 0.0
    hits = draws = 0
    while hits < n_surface:
        pts = random_points(example, batch, rng)
        draws += batch
        t = _t_field(example, pts, nu)
        sel = np.abs(t) < shell
        if not np.any(sel):
            continue
        p = pts[sel]
        norm_phi, dnu = _density_factor(example, p, nu)
        w = norm_phi ** (-d) * dnu * _grad_norm(example, p, nu) / (2 * shell)
        total += w.sum()
        total_sq += (w ** 2).sum()
        hits += int(sel.sum())
    mean = total / draws
    var = total_sq / draws - mean ** 2
    return SurfaceIntegral(vol * mean, vol * sqrt(max(var, 0.0) / draws), hits, draws)


@dataclass(frozen=True)
class OuterDimEstimate:
    value: float
    stderr: float
    surface: SurfaceIntegral


def outer_dim_leading(nu: Weight, k: int, n_surface: int = 100_000, seed: int = 0, example: str = "P3",
                      gt_constant: float | None = None, surface: SurfaceIntegral | None = None) -> OuterDimEstimate:
    if nu.nu2 <= 0:
        raise ValueError("weight outside the regime nu1 > nu2 > 0")
    c = d_gt_constant() if gt_constant is None else gt_constant
    d = AMBIENT_DIM[example]
    s = surface or boundary_surface_integral(nu, n_surface, seed, example)
    scale = 0.25 * c * (k * nu.norm / pi) ** (d - 1)
    return OuterDimEstimate(scale * s.value, scale * s.stderr, s)


def decay_fit(series) -> float:
    """Least-squares slope of log(value) against log(k)."""
    series = list(series)
    if len(series) < 4:
        raise ValueError("need at least four points")
    ks = np.array([s[0] for s in series], dtype=float)
    vals = np.array([s[1] for s in series], dtype=float)
    if np.any(vals < 0) or np.any(ks <= 0) or np.ptp(ks) == 0:
        raise ValueError("degenerate series")
    vals = np.maximum(vals, 1e-300)
    return float(np.polyfit(np.log(ks), np.log(vals), 1)[0])


# -- reports ------------------------------------------------------------------

@dataclass
class AsymptoticReport:
    name: str
    k_grid: list[int]
    rows: list[dict] = field(default_factory=list)
    slopes: dict[str, float] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    passed: dict[str, bool] = field(default_factory=dict)
    notes: dict[str, object] = field(default_factory=dict)

    CSV_FIELDS = ("series", "point_id", "k", "exact", "prediction", "ratio")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=float)

    @classmethod
    def from_json(cls, text: str) -> "AsymptoticReport":
        return cls(**json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema: equikernel.asymptotic_report/1\n")
        w = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(r)
        return buf.getvalue()


def normalized_outer_value(example: str, k: int, nu: Weight, x: SpherePoint) -> float:
    d = AMBIENT_DIM[example]
    return float(kernel_diagonal(example, k, nu, x)[0]) * (pi / (k * nu.norm)) ** (d - 0.5)


def compare_diag(nu: Weight, k_grid, n_points: int, seed: int, example: str = "P3",
                 gt_constant: float | None = None, outer_t: float = -1 / 3,
                 slope_max: float = -3.0) -> AsymptoticReport:
    k_grid = sorted(int(k) for k in k_grid)
    rep = AsymptoticReport("compare_diag", k_grid,
                           tolerances={"outer_slope_max": slope_max},
                           notes={"example": example, "nu": list(nu.as_tuple()),
                                  "gt_constant": d_gt_constant() if gt_constant is None else gt_constant})
    pts = sample_boundary(nu, n_points, seed, example)
    inputs = [LeadingTermInputs.at(p, nu) for p in pts]
    coords = np.array([p.coords for p in pts])
    dev_by_k = []
    positive = True
    for k in k_grid:
        exact = kernel_diagonal(example, k, nu, coords)
        devs = []
        for i, (e, inp) in enumerate(zip(exact, inputs)):
            pred = leading_diag(inp, k, gt_constant)
            ratio = float(e / pred)
            positive &= ratio > 0
            devs.append(abs(ratio - 1))
            rep.rows.append({"series": "boundary", "point_id": i, "k": k, "exact": float(e),
                             "prediction": pred, "ratio": ratio})
        dev_by_k.append(float(np.median(devs)))
    upper = dev_by_k[len(dev_by_k) // 2:]
    rep.passed["boundary_positive"] = bool(positive)
    rep.passed["boundary_trend"] = bool(all(b <= a + 1e-12 for a, b in zip(upper, upper[1:])))
    rep.notes["median_deviation"] = dev_by_k

    lam1, lam2 = spectrum_for_t(nu, outer_t)
    x_out = point_with_spectrum(example, lam1, lam2)
    series = []
    for k in k_grid:
        v = normalized_outer_value(example, k, nu, x_out)
        series.append((k, v))
        rep.rows.append({"series": "outer", "point_id": 0, "k": k, "exact": v, "prediction": 0.0,
                         "ratio": float("nan")})
    if len(series) >= 4:
        rep.slopes["outer"] = decay_fit(series)
        rep.passed["outer_slope"] = rep.slopes["outer"] <= slope_max
    return rep
