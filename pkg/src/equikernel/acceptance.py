"""Acceptance criteria AC1-AC10 as runnable checks with wall-clock timing."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from .config import RunConfig, parallel_map
from .geometry import (
    SpherePoint,
    TangentVector,
    heisenberg_displace,
    perp_h_basis,
    point_with_spectrum,
    random_points,
    sample_boundary,
    spectrum_for_t,
    upsilon,
)
from .hardy import (
    dim_by_trace,
    isotype_basis,
    kernel,
    kernel_diagonal,
    kernel_pairs,
    quadrature_kernel,
    sphere_volume,
)
from .lie_rep import (
    AMBIENT_DIM,
    Weight,
    ambient_level_dim,
    branch_level,
    character_of_matrix,
    isotype_dimension,
    weyl_integrate,
)

DIM_WEIGHTS = (Weight(2, 1), Weight(3, 1), Weight(3, 2))


@dataclass
class CriterionResult:
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.seconds:.1f}s) {self.summary}"


def ac1(cfg: RunConfig) -> CriterionResult:
    rows, ok = [], True
    for nu in DIM_WEIGHTS:
        for k in range(1, 9):
            total, _ = isotype_dimension("P3", k, nu)
            count = len(isotype_basis("P3", k, nu))
            expected = k * k * nu.dim ** 2
            off_by_one = (k * nu.dim - 1) * k * nu.dim
            ok &= count == total == expected
            rows.append({"nu": str(nu), "k": k, "basis": count, "dim": total, "k2(n1-n2)2": expected,
                         "(k(n1-n2)-1)k(n1-n2)": off_by_one})
    return CriterionResult("AC1", ok, "P3 basis count = dimension = k^2 (nu1-nu2)^2 for k <= 8", {"rows": rows})


def ac2(cfg: RunConfig) -> CriterionResult:
    rows, formula_ok, levels_ok = [], True, True
    for nu in DIM_WEIGHTS:
        for k in range(1, 7):
            total, per_level = isotype_dimension("P4", k, nu)
            count = len(isotype_basis("P4", k, nu))
            stated = k * k * nu.nu1 * (k * nu.nu2 + 1) * nu.dim
            knu = nu.scaled(k)
            levels = sorted(per_level) == list(range(knu.nu1 - 1, knu.total))
            formula_ok &= total == stated and count == total
            levels_ok &= levels
            rows.append({"nu": str(nu), "k": k, "dim": total, "basis": count, "stated": stated,
                         "(k nu2+1) k^2 (nu1-nu2)^2": (k * nu.nu2 + 1) * k * k * nu.dim ** 2,
                         "levels_fill": levels})
    summary = (f"stated P4 total {'matches' if formula_ok else 'does NOT match'}; "
               f"levels fill {'yes' if levels_ok else 'no'}")
    return CriterionResult("AC2", formula_ok and levels_ok, summary,
                           {"rows": rows, "formula_ok": formula_ok, "levels_ok": levels_ok})


def ac3(cfg: RunConfig) -> CriterionResult:
    rng = np.random.default_rng(cfg.seeds + 3)
    nu, ex = cfg.nu, cfg.example
    pairs = [(SpherePoint(ex, a), SpherePoint(ex, b))
             for a, b in zip(random_points(ex, 10, rng), random_points(ex, 10, rng))]
    tol = cfg.tol("AC3.rel")
    worst = 0.0
    for k in (1, 2, 3):
        def one(p):
            e = kernel(ex, k, nu, *p).value
            q = quadrature_kernel(ex, k, nu, *p, n_torus=cfg.grids.get("torus", 64),
                                  n_flag=cfg.grids.get("flag", 32))
            return abs(e - q) / abs(e)
        worst = max(worst, max(parallel_map(one, pairs)))
    return CriterionResult("AC3", worst <= tol, f"max relative gap {worst:.2e} (tol {tol:g})", {"max_rel": worst})


def ac4(cfg: RunConfig) -> CriterionResult:
    rows, ok = [], True
    z = cfg.tol("AC4.sigmas")
    for k in (1, 2, 3):
        exact, _ = isotype_dimension(cfg.example, k, cfg.nu)
        est, se = dim_by_trace(cfg.example, k, cfg.nu, 100_000, cfg.seeds + k)
        good = abs(est - exact) <= z * se
        ok &= good
        rows.append({"k": k, "exact": exact, "estimate": est, "stderr": se, "ok": good})
    return CriterionResult("AC4", ok, "trace estimates " + ", ".join(
        f"k={r['k']}: {r['estimate']:.3f}+-{r['stderr']:.3f} vs {r['exact']}" for r in rows), {"rows": rows})


def _boundary_ratios(cfg, pts, ks, constant=None):
    inputs = [asy.LeadingTermInputs.at(p, cfg.nu) for p in pts]
    coords = np.array([p.coords for p in pts])
    out = {}
    for k in ks:
        exact = kernel_diagonal(cfg.example, k, cfg.nu, coords)
        out[k] = np.array([e / asy.leading_diag(i, k, constant) for e, i in zip(exact, inputs)])
    return out


def ac5(cfg: RunConfig) -> CriterionResult:
    band = cfg.tol("AC5.band")
    pts = sample_boundary(cfg.nu, 10, cfg.seeds + 5, cfg.example)
    r = _boundary_ratios(cfg, pts, (8, 32))
    in_band = bool(np.all(np.abs(r[32] - 1) <= band))
    med8, med32 = float(np.median(np.abs(r[8] - 1))), float(np.median(np.abs(r[32] - 1)))
    ok = in_band and med32 < med8
    alt = _boundary_ratios(cfg, pts, (8, 32), asy.gt_chart_density())
    details = {"ratios_k8": r[8].tolist(), "ratios_k32": r[32].tolist(), "median_dev_k8": med8,
               "median_dev_k32": med32,
               "ratios_k32_chart_density": alt[32].tolist(), "ratios_k8_chart_density": alt[8].tolist()}
    summary = (f"k=32 ratio range [{r[32].min():.3f}, {r[32].max():.3f}] (band 1+-{band:g}), "
               f"median dev k=8 {med8:.3f} -> k=32 {med32:.3f}; with 1/pi flag density: "
               f"[{alt[32].min():.3f}, {alt[32].max():.3f}]")
    return CriterionResult("AC5", ok, summary, details)


def ac6(cfg: RunConfig) -> CriterionResult:
    nu, ex = cfg.nu, cfg.example
    ks = list(range(8, 41, 4))
    x_out = point_with_spectrum(ex, *spectrum_for_t(nu, -1 / 3))
    series = [(k, asy.normalized_outer_value(ex, k, nu, x_out)) for k in ks]
    slope = asy.decay_fit(series)
    slope_ok = slope <= cfg.tol("AC6.slope")

    foot = sample_boundary(nu, 1, cfg.seeds + 6, ex)[0]
    n = upsilon(foot, nu)
    unit = n * (1 / n.norm)
    ratios = {}
    for k in (8, 40):
        moved = heisenberg_displace(foot, 0.0, unit * k ** -0.4)
        vals = kernel_diagonal(ex, k, nu, [moved, foot])
        ratios[k] = float(vals[0] / vals[1])
    factor = ratios[8] / ratios[40]
    factor_ok = factor >= cfg.tol("AC6.factor")
    summary = (f"outer slope {slope:.3f} (need <= {cfg.tol('AC6.slope'):g}); "
               f"off-locus relative decay 8->40 factor {factor:.2f} (need >= {cfg.tol('AC6.factor'):g})")
    return CriterionResult("AC6", slope_ok and factor_ok, summary,
                           {"series": series, "slope": slope, "relative": ratios, "factor": factor})


def ac7(cfg: RunConfig) -> CriterionResult:
    nu, ex, k = cfg.nu, cfg.example, 32
    rng = np.random.default_rng(cfg.seeds + 7)
    pts = sample_boundary(nu, 10, cfg.seeds + 7, ex)
    band, phase_tol = cfg.tol("AC7.band"), cfg.tol("AC7.phase")
    rows, ok, perp_dims = [], True, []

    def draw(x, basis):
        if not basis:
            return TangentVector(x, np.zeros_like(x.coords))
        c = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        v = sum((ci * b.vec for ci, b in zip(c, basis)), np.zeros_like(x.coords))
        return TangentVector(x, v * rng.random() / np.linalg.norm(v))

    for x in pts:
        basis = perp_h_basis(x)
        perp_dims.append(len(basis))
        v1, v2 = draw(x, basis), draw(x, basis)
        inp = asy.LeadingTermInputs.at(x, nu)
        pred = asy.leading_rescaled(inp, k, v1, v2)
        alt = asy.leading_rescaled(inp, k, v1, v2, asy.gt_chart_density())
        a = heisenberg_displace(x, 0.0, v1 * (1 / np.sqrt(k)))
        b = heisenberg_displace(x, 0.0, v2 * (1 / np.sqrt(k)))
        exact = complex(kernel_pairs(ex, k, nu, [a], [b])[0])
        mod = abs(exact) / abs(pred)
        dphase = abs(np.angle(exact / pred))
        good = abs(mod - 1) <= band and dphase <= phase_tol
        ok &= good
        rows.append({"modulus_ratio": mod, "phase_gap": dphase, "modulus_ratio_chart_density": abs(exact) / abs(alt)})
    mods = [r["modulus_ratio"] for r in rows]
    summary = (f"perp_h complex dims {sorted(set(perp_dims))}; modulus ratios [{min(mods):.3f}, {max(mods):.3f}], "
               f"max phase gap {max(r['phase_gap'] for r in rows):.2e}")
    return CriterionResult("AC7", ok, summary, {"rows": rows, "perp_dims": perp_dims})


def outer_region_integral(example: str, k: int, nu: Weight, n_mc: int, seed: int, tol_t: float = 1e-9):
    """Monte Carlo integral of Pi(x, x) over the outer region: (estimate, stderr)."""
    rng = np.random.default_rng(seed)
    pts = random_points(example, n_mc, rng)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = asy._t_field(example, pts, nu)
    outer = ~((t >= -tol_t) & (t < 0.5))
    vals = np.zeros(n_mc)
    vals[outer] = kernel_diagonal(example, k, nu, pts[outer])
    vol = sphere_volume(example)
    return float(vol * vals.mean()), float(vol * vals.std(ddof=1) / np.sqrt(n_mc))


def ac8(cfg: RunConfig) -> CriterionResult:
    nu, ex, k = cfg.nu, cfg.example, 16
    n_mc = int(cfg.tol("AC8.n_mc"))
    est, se = outer_region_integral(ex, k, nu, n_mc, cfg.seeds + 8)
    pred = asy.outer_dim_leading(nu, k, n_surface=100_000, seed=cfg.seeds + 8, example=ex)
    alt = asy.outer_dim_leading(nu, k, example=ex, gt_constant=asy.gt_chart_density(), surface=pred.surface)
    total, _ = isotype_dimension(ex, k, nu)
    ratio = est / pred.value
    ok = abs(ratio - 1) <= cfg.tol("AC8.rel") and est <= total
    summary = (f"outer integral {est:.2f}+-{se:.2f}, prediction {pred.value:.3f}+-{pred.stderr:.3f} "
               f"(ratio {ratio:.3f}); with 1/pi flag density {alt.value:.2f} (ratio {est / alt.value:.3f}); "
               f"total dim {total}")
    return CriterionResult("AC8", ok, summary, {"estimate": est, "stderr": se, "prediction": pred.value,
                                                "prediction_chart_density": alt.value, "total_dim": total})


def ac9(cfg: RunConfig) -> CriterionResult:
    nu, ex = cfg.nu, cfg.example
    d = AMBIENT_DIM[ex]
    rng = np.random.default_rng(cfg.seeds + 9)
    pts = np.vstack([np.array([p.coords for p in sample_boundary(nu, 20, cfg.seeds + 9, ex)]),
                     random_points(ex, 200, rng)])
    ks = list(range(8, 41, 4))
    sups = {k: float(kernel_diagonal(ex, k, nu, pts).max()) for k in ks}
    C = sups[8] / 8 ** (d + 1)
    ok = all(sups[k] <= C * k ** (d + 1) * (1 + 1e-12) for k in ks)
    growth = asy.decay_fit(list(sups.items()))
    return CriterionResult("AC9", ok, f"C = {C:.4g}; sampled sup grows like k^{growth:.2f} (bound k^{d + 1})",
                           {"sup": sups, "C": C, "growth": growth})


def ac10(cfg: RunConfig) -> CriterionResult:
    weights = [Weight(a, b) for b in range(-2, 3) for a in range(b + 1, b + 6)]
    tol = cfg.tol("AC10.orth")
    worst = 0.0
    for i, mu in enumerate(weights):
        for nu in weights[i:]:
            val = weyl_integrate(lambda g: character_of_matrix(mu, g) * np.conj(character_of_matrix(nu, g)),
                                 n_torus=64, n_flag=4)
            worst = max(worst, abs(val - (1.0 if mu == nu else 0.0)))
    balance = all(branch_level(ex, l).total_dim == ambient_level_dim(ex, l) for ex in ("P3", "P4") for l in range(31))
    ok = worst <= tol and balance
    return CriterionResult("AC10", ok, f"max Gram deviation {worst:.1e} over {len(weights)} weights; "
                                       f"dimension balance l<=30 {'holds' if balance else 'FAILS'}",
                           {"max_gram_dev": worst, "balance": balance})


CRITERIA = {f"AC{i}": fn for i, fn in enumerate([ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10], start=1)}


def run_criterion(name: str, cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        res = CRITERIA[name](cfg)
    except Exception as err:  # reported as a failure entry, never swallowed silently
        res = CriterionResult(name, False, f"error: {type(err).__name__}: {err}")
    res.seconds = time.perf_counter() - t0
    return res


def run_all(cfg: RunConfig, only=None) -> list[CriterionResult]:
    names = list(CRITERIA) if not only else list(only)
    return [run_criterion(n, cfg) for n in names]
