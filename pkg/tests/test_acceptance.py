"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py`` or under pytest.
"""

import math
import sys
import time

import numpy as np
import pytest

from fockhankel.bergman import (
    hermitian_residual,
    kernel_eval,
    kernel_norm_report,
    reproducing_residual,
)
from fockhankel.decomposition import (
    DecompParams,
    factor_norm_report,
    identity_residual,
    remainder_deriv,
)
from fockhankel.fock_core import (
    SpaceParams,
    monomial_norm_sq,
    multi_indices,
    pairing_poly,
    random_poly,
)
from fockhankel.hankel import (
    family_ratios,
    rank_one_check,
    representation_sweep,
    schatten_from_singular_values,
)
from fockhankel.lp_calculus import family_bands, reconstruction_defect
from fockhankel.mittag_leffler import overlap_check
from fockhankel.quadrature import phi_norm_report, unit_ball_volume
from fockhankel.scaled import ScaledComplex

INF = math.inf
FLAT_RADII = np.linspace(1.0, 5.0, 9)
FLAT_SLOPE = 1e-3
FLAT_SPREAD = 100.0


class Criterion:
    """Collects named checks for one criterion and reports them on one line."""

    def __init__(self, number: int, title: str, budget: float) -> None:
        self.number = number
        self.title = title
        self.budget = budget
        self.checks = []
        self.start = time.perf_counter()

    def check(self, name: str, value: float, limit: float, passed: bool | None = None) -> None:
        if passed is None:
            passed = bool(value <= limit)
        self.checks.append((name, float(value), limit, passed))

    def finish(self) -> None:
        elapsed = time.perf_counter() - self.start
        self.check("runtime_s", elapsed, self.budget)
        failed = [c for c in self.checks if not c[3]]
        status = "PASS" if not failed else "FAIL"
        line = f"{status} criterion {self.number} ({self.title}): {len(self.checks) - len(failed)}/{len(self.checks)} checks, {elapsed:.1f} s"
        if failed:
            line += "; failing: " + ", ".join(f"{name}={value:.3g} (limit {limit:g})"
                                              for name, value, limit, _ in failed)
        print(line, flush=True)
        assert not failed, line


def random_points(rng, n, count, radius):
    raw = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return raw * (radius * rng.uniform(size=(count, 1)) ** (1.0 / (2 * n)))


def flatness(criterion, name, report):
    stats = report.stats()
    criterion.check(f"{name}.slope", abs(stats["slope_r2l"]), FLAT_SLOPE)
    criterion.check(f"{name}.spread", report.spread(), FLAT_SPREAD)


def test_criterion_1_planar_closed_forms():
    crit = Criterion(1, "l=1 closed forms", 30.0)
    rng = np.random.default_rng(0)
    for n in (1, 2):
        for gamma in (1.0, 0.7):
            worst = 0.0
            for z, w in zip(random_points(rng, n, 20, 3.0), random_points(rng, n, 20, 3.0)):
                exact = ScaledComplex.from_complex(gamma ** n / math.factorial(n) * np.exp(gamma * np.sum(z * np.conj(w))))
                worst = max(worst, kernel_eval(gamma, n, 1.0, z, w).relative_difference(exact))
            crit.check(f"kernel(n={n},gamma={gamma})", worst, 1e-10)
        for alpha in (1.0, 2.5):
            worst = 0.0
            for nu in multi_indices(n, 10):
                exact = math.factorial(n) * math.prod(math.factorial(v) for v in nu) / alpha ** (sum(nu) + n)
                worst = max(worst, abs(monomial_norm_sq(n, 1.0, alpha, nu) - exact) / exact)
            crit.check(f"monomial_norms(n={n},alpha={alpha})", worst, 1e-12)
    worst = 0.0
    for theta in (0.25, 0.5, 0.8):
        for m in (0, 1, 2):
            for lam in (0.5, 3.0 + 4.0j, -7.0, 20.0 - 5.0j, 60.0, -40.0 + 1.0j):
                value = remainder_deriv(1.0, theta, m, lam)
                if math.isfinite(value.log_mag):
                    worst = max(worst, math.exp(value.log_mag - max(0.0, lam.real)))
    crit.check("remainder_zero", worst, 1e-12)
    for n in (1, 2):
        for alpha, beta in ((1.0, 1.0), (1.0, 2.0), (3.0, 1.0)):
            params = DecompParams(1.0, 1.0, alpha, beta, n)
            worst = max(identity_residual(params, z, w)
                        for z, w in zip(random_points(rng, n, 10, 3.0), random_points(rng, n, 10, 3.0)))
            crit.check(f"decomposition(n={n},alpha={alpha},beta={beta})", worst, 1e-12)
    for w0 in (0.5, 1.0 + 0.5j, 2.0j):
        record = rank_one_check([w0], 1.0, 0.0, 40)
        predicted = 0.5 * math.exp(abs(w0) ** 2 / 4.0)
        crit.check(f"rank_one_s1(w0={w0})", abs(record["s1"] - predicted) / predicted, 1e-4)
    crit.finish()


def test_criterion_2_mittag_leffler_overlap():
    crit = Criterion(2, "Mittag-Leffler overlap", 60.0)
    for a, b in ((1.0, 1.0), (0.5, 0.5), (0.5, 0.75), (1.0 / 3.0, 1.0 / 3.0)):
        for m in (0, 1, 2):
            row = overlap_check(a, b, m, rays=16)
            crit.check(f"overlap(a={a:.3g},b={b:.3g},m={m})", row["worst"], 1e-6)
    crit.finish()


def test_criterion_3_decomposition_identity():
    crit = Criterion(3, "decomposition identity", 120.0)
    rng = np.random.default_rng(0)
    for ell, n in ((2.0, 1), (2.0, 2), (3.0, 1), (1.5, 1)):
        for alpha, beta in ((1.0, 1.0), (1.0, 2.0), (3.0, 1.0)):
            params = DecompParams(ell, 1.0, alpha, beta, n)
            worst = 0.0
            for _ in range(200):
                z, w = random_points(rng, n, 2, 1.0)
                reach = 15.0 * rng.uniform()
                scale = math.sqrt(reach / abs(complex(np.sum(z * np.conj(w)))))
                worst = max(worst, identity_residual(params, z * scale, w * scale))
            crit.check(f"identity(l={ell},n={n},alpha={alpha},beta={beta})", worst, 1e-6)
    crit.finish()


KERNEL_SETS = [  # (ell, n, p, rho)
    (1.0, 1, 2.0, 0.0), (2.0, 1, 2.0, 0.0), (2.0, 1, 1.0, 0.0), (2.0, 1, INF, 0.0),
    (2.0, 2, 2.0, 0.0), (1.5, 1, 2.0, 0.0), (2.0, 1, 2.0, 1.0),
]
PHI_SETS = [(1.0, 1, 2.0), (2.0, 1, 2.0), (2.0, 2, 2.0), (2.0, 1, INF)]  # (ell, n, p)
DECOMP_SETS = [(1.0, 1.0), (1.0, 2.0)]  # (alpha, beta) at ell = 2, n = 1, gamma = 1, p = 2


def test_criterion_4_norm_envelope_flatness():
    crit = Criterion(4, "norm-envelope flatness", 300.0)
    for ell, n, p, rho in KERNEL_SETS:
        report = kernel_norm_report(SpaceParams(n, ell, 1.0, rho, p), 1.0, FLAT_RADII)
        flatness(crit, f"kernel(l={ell},n={n},p={p},rho={rho})", report)
    for ell, n, p in PHI_SETS:
        for c in (1.0 / 3.0, 0.5, 1.0):
            report = phi_norm_report(SpaceParams(n, ell, 1.0, 0.0, p), c, FLAT_RADII)
            flatness(crit, f"phi(l={ell},n={n},p={p},c={c:.3g})", report)
    for alpha, beta in DECOMP_SETS:
        reports = factor_norm_report(DecompParams(2.0, 1.0, alpha, beta, 1), 2.0, 0.0, 0.0, FLAT_RADII)
        for name, report in sorted(reports.items()):
            if name != "R_sharp":
                flatness(crit, f"decomp(alpha={alpha},beta={beta}).{name}", report)
    crit.finish()


def test_criterion_5_littlewood_paley_band():
    crit = Criterion(5, "Littlewood-Paley band", 120.0)
    for ell, n in ((1.0, 1), (2.0, 1), (2.0, 2)):
        for p in (1.0, 2.0, INF):
            bands = family_bands(SpaceParams(n, ell, 1.0, 0.0, p), (1, 2))
            for k, entry in bands.items():
                crit.check(f"band(l={ell},n={n},p={p},k={k})", entry["band"], 50.0)
    rng = np.random.default_rng(0)
    defects = sum(len(reconstruction_defect(random_poly(n, 8, rng))) for n in (1, 2, 3) for _ in range(3))
    crit.check("reconstruction_defect", float(defects), 0.0)
    crit.finish()


def test_criterion_6_schatten_band():
    crit = Criterion(6, "Schatten characterization", 180.0)
    for ell in (1.0, 2.0):
        for p in (1.0, 2.0, 4.0, INF):
            bare = family_ratios(1, ell, p, rho=0.0)
            weighted = family_ratios(1, ell, p, rho=1.0)
            ratios = list(bare["ratios"].values()) + list(weighted["ratios"].values())
            crit.check(f"band(l={ell},p={p})", max(ratios) / min(ratios), 20.0)
            factor = max(max(weighted["ratios"][k] / v, v / weighted["ratios"][k]) for k, v in bare["ratios"].items())
            crit.check(f"rho_factor(l={ell},p={p})", factor, 10.0)
    crit.finish()


def test_criterion_7_representation_formula():
    crit = Criterion(7, "representation formula", 120.0)
    rng = np.random.default_rng(0)
    for ell in (1.0, 2.0):
        for n in (1, 2):
            params = DecompParams(ell, 1.0, 1.0, 1.0, n)
            b = random_poly(n, 4, rng)
            direction = np.ones(n) / math.sqrt(n)
            worst, monotone = 0.0, True
            for t in np.linspace(0.0, 2.0, 10):
                sweep = representation_sweep(b, t * direction, params, list(range(41)))
                worst = max(worst, sweep["residuals"][-1])
                monotone = monotone and sweep["monotone"]
            crit.check(f"residual_N40(l={ell},n={n})", worst, 1e-6)
            crit.check(f"monotone(l={ell},n={n})", 0.0, 0.0, monotone)
    crit.finish()


def test_criterion_8_structural_invariants():
    crit = Criterion(8, "structural invariants", 60.0)
    rng = np.random.default_rng(0)
    crit.check("unit_ball_volume", max(abs(unit_ball_volume(n) - 1.0) for n in (1, 2, 3)), 1e-8)
    dilation, hermitian, reproduce = 0.0, 0.0, 0.0
    for ell in (1.0, 1.5, 2.0, 3.0):
        for n in (1, 2):
            f, g = random_poly(n, 6, rng), random_poly(n, 6, rng)
            lhs = pairing_poly(f, g, 1.0, ell)
            rhs = 1.3 ** (2 * n) * pairing_poly(f, g.dilate(1.3 ** 2), 1.3 ** (2 * ell), ell)
            dilation = max(dilation, abs(lhs - rhs) / abs(lhs))
            for z, w in zip(random_points(rng, n, 6, 2.0), random_points(rng, n, 6, 2.0)):
                hermitian = max(hermitian, hermitian_residual(1.0, n, ell, z, w))
    for ell, n in ((1.0, 1), (1.5, 1), (2.0, 1), (3.0, 1), (2.0, 2)):
        f = random_poly(n, 8, rng)
        z = random_points(rng, n, 1, 1.0)[0]
        reproduce = max(reproduce, reproducing_residual(f, 1.0, ell, z))
    crit.check("pairing_dilation", dilation, 1e-10)
    crit.check("hermitian_symmetry", hermitian, 1e-10)
    crit.check("reproducing_property", reproduce, 1e-6)
    singular = np.sort(rng.uniform(0.0, 2.0, 16))[::-1]
    values = [schatten_from_singular_values(singular, q) for q in (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0, INF)]
    crit.check("schatten_monotone", 0.0, 0.0, all(b <= a for a, b in zip(values, values[1:])))
    crit.finish()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
