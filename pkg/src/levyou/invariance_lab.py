"""Invariance diagnostics: infinitesimal defects, CF distances, symmetry
defects and necessary conditions for self-decomposability."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .generator_calculus import GeneratorSpec, TestFunction, apply_generator
from .levy_core import char_exponent
from .quadrature import DensityMeasure
from .sampler import SampleEnsemble

QUADRATURE_TOL = 1e-6


class MeasureRep:
    """A probability measure known by its density, a sample ensemble or its CF."""

    def __init__(self, kind, *, density: DensityMeasure | None = None,
                 ensemble: SampleEnsemble | None = None, cf=None, mass_tol=1e-6):
        if kind not in ("density", "ensemble", "cf"):
            raise ValueError(f"unknown measure kind {kind!r}")
        self.kind = kind
        self.density, self.ensemble, self.cf = density, ensemble, cf
        if kind == "density":
            if density is None:
                raise ValueError("density kind needs a DensityMeasure")
            err = density.mass_error()
            if err > mass_tol:
                raise ValueError(f"density integrates to 1 only within {err:.3g}")
        elif kind == "ensemble":
            if ensemble is None or ensemble.n == 0:
                raise ValueError("ensemble kind needs a nonempty ensemble")
        elif cf is None:
            raise ValueError("cf kind needs a characteristic function")

    @classmethod
    def from_density(cls, density):
        return cls("density", density=density)

    @classmethod
    def normal(cls, mean=0.0, var=1.0):
        return cls("density", density=DensityMeasure.normal(mean, var))

    @classmethod
    def from_ensemble(cls, ensemble):
        return cls("ensemble", ensemble=ensemble)

    @classmethod
    def from_cf(cls, cf):
        return cls("cf", cf=cf)

    def integrate(self, fun):
        if self.kind == "density":
            return self.density.integrate(fun)
        if self.kind == "ensemble":
            return float(np.mean(fun(self.ensemble.states)))
        raise TypeError("cannot integrate point functions against a cf-only measure")


@dataclass
class DefectReport:
    test_functions: list
    defects: list
    tolerance: float
    max_defect: float = field(init=False)
    verdict: bool = field(init=False)
    label: str = ""

    def __post_init__(self):
        self.max_defect = float(max(self.defects)) if self.defects else 0.0
        self.verdict = bool(self.max_defect < self.tolerance)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _density_of(mu):
    if isinstance(mu, MeasureRep):
        if mu.kind != "density":
            raise TypeError("this check needs a density measure")
        return mu.density
    return mu


def infinitesimal_invariance_defect(spec: GeneratorSpec, mu, fs, tol=1e-8, label=""):
    """|int A f dmu| for each test function f."""
    dens = _density_of(mu)
    defects = [abs(dens.integrate(lambda X, f=f: apply_generator(spec, f, X))) for f in fs]
    return DefectReport([f.name for f in fs], defects, tol, label or "infinitesimal-invariance")


def ecf(ensemble, z):
    """(1/n) sum_j exp(i <z, X_j>); ``ensemble`` is a SampleEnsemble or an (n, d) array."""
    X = ensemble.states if isinstance(ensemble, SampleEnsemble) else np.asarray(ensemble, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    z = np.atleast_1d(np.asarray(z, dtype=float))
    phase = X @ z
    return complex(np.mean(np.cos(phase)), np.mean(np.sin(phase)))


@dataclass
class CFDistance:
    distance: float
    band: float
    per_point: list
    z_grid: list
    n: int
    tolerance: float = math.nan

    @property
    def verdict(self):
        tol = self.tolerance if np.isfinite(self.tolerance) else self.band + 0.01
        return self.distance < tol

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = bool(self.verdict)
        return d


def cf_distance(analytic_cf, ensemble, z_grid, tolerance=math.nan):
    """max over z of |ecf(z) - analytic_cf(z)| with its Monte Carlo band 3/sqrt(n)."""
    X = ensemble.states if isinstance(ensemble, SampleEnsemble) else np.asarray(ensemble)
    n = X.shape[0]
    if n < 100:
        raise ValueError("cf_distance needs at least 100 samples")
    per = [abs(ecf(X, z) - complex(analytic_cf(z))) for z in z_grid]
    grid = [np.atleast_1d(np.asarray(z, dtype=float)).tolist() for z in z_grid]
    return CFDistance(float(max(per)), 3 / math.sqrt(n), per, grid, n, tolerance)


def symmetry_defect(apply_H, mu, f: TestFunction, g: TestFunction):
    """|<H f, g>_mu - <f, H g>_mu| for an operator apply_H(f, X) on (n, d) points."""
    dens = _density_of(mu)
    lhs = dens.integrate(lambda X: apply_H(f, X) * g.value(X))
    rhs = dens.integrate(lambda X: f.value(X) * apply_H(g, X))
    return abs(lhs - rhs)


@dataclass
class SelfDecompReport:
    b: float
    unit_at_zero: float
    max_modulus: float
    hermitian_defect: float
    min_gram_eigenvalue: float
    checks: dict
    passed: bool

    def to_dict(self):
        return asdict(self)


def selfdecomp_check(cf_evaluator, b, z_grid, subgrid_size=6, mod_tol=1e-8, psd_tol=1e-10):
    """Necessary conditions for r_b(z) = cf(z) / cf(z / b) to be a characteristic function.

    Checks r_b(0) = 1, |r_b| <= 1 + mod_tol, r_b(-z) = conj r_b(z), and that
    the Gram matrices [r_b(z_i - z_j)] are PSD on consecutive subgrids.
    """
    if b <= 1:
        raise ValueError("b must exceed 1")
    z_grid = np.asarray(z_grid, dtype=float)
    cf_ = lambda z: complex(cf_evaluator(float(z)))

    def r(z):
        den = cf_(z / b)
        if abs(den) < 1e-300:
            raise ZeroDivisionError(f"cf vanishes at z = {z / b:.6g}")
        return cf_(z) / den

    r0 = r(0.0)
    vals = np.array([r(z) for z in z_grid])
    max_mod = float(np.max(np.abs(vals)))
    herm = float(max(abs(r(-z) - np.conj(v)) for z, v in zip(z_grid, vals)))
    min_eig = math.inf
    zs = np.sort(z_grid)
    for start in range(0, max(1, zs.size - subgrid_size + 1)):
        sub = zs[start:start + subgrid_size]
        G = np.array([[r(zi - zj) for zj in sub] for zi in sub])
        G = 0.5 * (G + G.conj().T)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(G).min()))
    scale = max(1.0, subgrid_size)
    checks = {
        "unit_at_zero": abs(r0 - 1) < 1e-12,
        "modulus": max_mod <= 1 + mod_tol,
        "hermitian": herm < 1e-10,
        "gram_psd": min_eig >= -psd_tol * scale,
    }
    return SelfDecompReport(float(b), float(abs(r0 - 1)), max_mod, herm, min_eig, checks,
                            all(checks.values()))


@dataclass
class FourierDefect:
    drift_side: complex
    jump_side: complex
    defect: float

    def to_dict(self):
        return {"drift_side": [self.drift_side.real, self.drift_side.imag],
                "jump_side": [self.jump_side.real, self.jump_side.imag], "defect": self.defect}


def fourier_invariance_defect(model, f: TestFunction, K=None, h=1e-4, n_nodes=400, cf=None):
    """Fourier-side invariance of the invariant law of a scalar OU model.

    With f^(k) = int e^{ikx} f dx and m(k) = mu^(-k), int A f dmu equals
    (1/2 pi) int f^(k) [eta(-k) m(k) - c k m'(k)] dk.  Returns the drift
    side -c k m' and the jump side eta(-k) m paired with f^, whose sum is
    the defect.  m' uses a central difference of the invariant CF, which is
    ``cf`` when given (e.g. the CF of an invariant triplet) and the
    closed-form invariant CF of ``model`` otherwise.
    """
    from .ou_models import invariant_cf

    if f.fourier is None:
        raise ValueError("test function needs an analytic Fourier transform")
    if not model.scalar or model.dim != 1:
        raise ValueError("Fourier-side check is implemented for scalar one-dimensional models")
    c = model.c
    K = K if K is not None else 9.0 / f.scale
    k, w = np.polynomial.legendre.leggauss(n_nodes)
    k, w = K * k, K * w
    mu_cf = cf if cf is not None else (lambda s: invariant_cf(model, s))
    m = lambda s: complex(mu_cf(-s))
    fh = f.fourier(k)
    mk = np.array([m(s) for s in k])
    dm = np.array([(m(s + h) - m(s - h)) / (2 * h) for s in k])
    eta = np.array([char_exponent(model.noise, -s) for s in k])
    drift = complex(np.sum(w * fh * (-c * k * dm)) / (2 * math.pi))
    jump = complex(np.sum(w * fh * eta * mk) / (2 * math.pi))
    return FourierDefect(drift, jump, abs(drift + jump))


STANDARD_BUMPS = ((0.0, 1.0), (0.5, 0.7), (-1.0, 1.2))


def standard_test_set(include_hermite=True):
    from .generator_calculus import gaussian_bump, hermite
    fs = [hermite(n) for n in range(1, 5)] if include_hermite else []
    return fs + [gaussian_bump(c, w) for c, w in STANDARD_BUMPS]

