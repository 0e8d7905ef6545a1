"""Lévy triplets, Lévy measures and characteristic exponents.

The characteristic exponent is the log of the characteristic function of L(1),

    eta(z) = -0.5 <z, Q z> + i <gamma, z> + int (e^{i<z,y>} - 1 - i<z,y> c(y)) nu(dy),

where c is the truncation function attached to the triplet.  The default
truncation is the indicator of the closed unit ball |y| <= 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special, stats

TRUNCATIONS = ("indicator", "rational", "none")
DEFAULT_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Raised when an integral fails to reach its requested tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class Estimate(NamedTuple):
    value: complex
    error: float


class LogMoment(NamedTuple):
    finite: bool
    value: float


def quad(fun, a, b, **kw):
    """scipy.integrate.quad with its accuracy warnings silenced; the error
    estimate it returns is what callers inspect."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(fun, a, b, **kw)[:2]


def truncation_weight(name, r):
    """Truncation function c(y) as a function of the radius r = |y|."""
    r = np.asarray(r, dtype=float)
    if name == "indicator":
        return (r <= 1.0).astype(float)
    if name == "rational":
        return 1.0 / (1.0 + r * r)
    if name == "none":
        return np.zeros_like(r)
    raise ValueError(f"unknown truncation {name!r}")


def sphere_area(dim):
    """Surface area of the unit sphere in R^dim (2 for dim=1)."""
    return 2.0 * math.pi ** (dim / 2) / special.gamma(dim / 2)


def _sphere_cos_deficit(dim, t):
    """|S| - int_S cos(t <u, theta>) dtheta, computed without cancellation."""
    t = np.abs(np.asarray(t, dtype=float))
    if dim == 1:
        return 4.0 * np.sin(t / 2) ** 2
    if dim == 2:
        small = t < 1e-3
        out = 2 * math.pi * (1.0 - special.j0(t))
        tt = t[small] if np.ndim(t) else t
        ser = 2 * math.pi * (tt**2 / 4 - tt**4 / 64)
        if np.ndim(t):
            out[small] = ser
            return out
        return ser if small else out
    if dim == 3:
        small = t < 1e-3
        with np.errstate(invalid="ignore", divide="ignore"):
            out = 4 * math.pi * (1.0 - np.sinc(t / math.pi))
        ser = 4 * math.pi * (t**2 / 6 - t**4 / 120)
        return np.where(small, ser, out)
    raise ValueError("radial quadrature supports dim <= 3")


def stable_constant(alpha, dim=1):
    """c_alpha = int (1 - cos<u, y>) |y|^{-dim-alpha} dy for a unit vector u.

    Closed form; the symmetric stable measure a2 |y|^{-d-alpha} dy has
    exponent -a2 * c_alpha * |z|^alpha.
    """
    return (math.pi ** (dim / 2) * special.gamma(1 - alpha / 2)
            / (alpha * 2 ** (alpha - 1) * special.gamma((dim + alpha) / 2)))


def stable_constant_quadrature(alpha, dim=1):
    """The same constant evaluated from its defining integral."""
    meas = StableMeasure(alpha, 1.0, dim)
    return -meas.jump_integral(np.eye(dim)[0], method="quadrature").value.real


def _to_vec(z, dim):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (dim,):
        raise ValueError(f"expected a vector of length {dim}, got shape {z.shape}")
    return z


# ---------------------------------------------------------------------------
# Lévy measures
# ---------------------------------------------------------------------------

class LevyMeasure:
    """Base class for the parametric Lévy measures.

    Subclasses provide tail and moment accessors, the jump part of the
    characteristic exponent and a sampler for jumps of size at least eps.
    """

    kind = "abstract"
    dim = 1
    symmetric = True
    finite_activity = True
    radial = False

    # -- functionals ------------------------------------------------------
    def total_mass(self):
        return self.tail_mass(0.0) if self.finite_activity else math.inf

    def tail_mass(self, r):
        """nu({|y| >= r})."""
        raise NotImplementedError

    def truncated_moment(self, eps, k=2):
        """int_{|y| < eps} |y|^k nu(dy)."""
        raise NotImplementedError

    def truncated_second_moment(self, eps):
        return self.truncated_moment(eps, 2)

    def log_moment(self, threshold=2.0):
        """int_{|y| > threshold} log|y| nu(dy), with a finiteness flag."""
        raise NotImplementedError

    def ball_first_moment(self, lo=0.0, hi=1.0):
        """Vector int_{lo <= |y| <= hi} y nu(dy) (zero for symmetric measures)."""
        return np.zeros(self.dim)

    def truncation_moment(self, truncation):
        """Vector int y c(y) nu(dy) for a finite-activity or symmetric measure."""
        if self.symmetric:
            return np.zeros(self.dim)
        raise NotImplementedError

    def truncation_shift(self, truncation):
        """Vector int y (c(y) - 1_{|y|<=1}) nu(dy)."""
        if truncation == "indicator" or self.symmetric:
            return np.zeros(self.dim)
        return self.truncation_moment(truncation) - self.truncation_moment("indicator")

    def small_first_moment_finite(self):
        """Whether int_{|y|<=1} |y| nu(dy) < inf."""
        return self.finite_activity

    def jump_integral(self, z, truncation="indicator", method="auto", tol=DEFAULT_TOL):
        """int (e^{i<z,y>} - 1 - i<z,y> c(y)) nu(dy) as an Estimate."""
        raise NotImplementedError

    def second_moment_matrix(self, eps):
        """int_{|y|<eps} y y^T nu(dy); isotropic for radial measures."""
        return self.truncated_second_moment(eps) / self.dim * np.eye(self.dim)

    # -- sampling ---------------------------------------------------------
    def jump_rate(self, eps):
        """Intensity of the jumps that are sampled explicitly."""
        return self.total_mass() if self.finite_activity else self.tail_mass(eps)

    def sample_jumps(self, rng, n, eps):
        """n jumps from nu restricted to |y| >= eps (all jumps if finite activity)."""
        raise NotImplementedError

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        raise NotImplementedError

    @staticmethod
    def from_dict(doc, dim=None):
        doc = dict(doc)
        kind = doc.pop("kind")
        cls = _MEASURE_KINDS.get(kind)
        if cls is None:
            raise ValueError(f"unknown measure kind {kind!r}")
        if dim is not None and "dim" not in doc and cls not in (AtomicMeasure,):
            doc["dim"] = dim
        return cls._from_params(doc)

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class ZeroMeasure(LevyMeasure):
    kind = "zero"

    def __init__(self, dim=1):
        self.dim = int(dim)

    def tail_mass(self, r):
        return 0.0

    def truncated_moment(self, eps, k=2):
        return 0.0

    def log_moment(self, threshold=2.0):
        return LogMoment(True, 0.0)

    def jump_integral(self, z, truncation="indicator", method="auto", tol=DEFAULT_TOL):
        return Estimate(0j, 0.0)

    def sample_jumps(self, rng, n, eps):
        return np.zeros((n, self.dim))

    def to_dict(self):
        return {"kind": "zero", "dim": self.dim}

    @classmethod
    def _from_params(cls, p):
        return cls(p.get("dim", 1))


class AtomicMeasure(LevyMeasure):
    """Finite sum of point masses, sum_k m_k delta_{y_k}."""

    kind = "atomic"

    def __init__(self, positions, masses):
        pos = np.asarray(positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        masses = np.asarray(masses, dtype=float).ravel()
        if pos.shape[0] != masses.size or masses.size == 0:
            raise ValueError("positions and masses must have the same nonzero length")
        if np.any(masses <= 0):
            raise ValueError("atom masses must be positive")
        radii = np.linalg.norm(pos, axis=1)
        if np.any(radii == 0):
            raise ValueError("no atom is allowed at the origin")
        self.positions = pos
        self.masses = masses
        self.radii = radii
        self.dim = pos.shape[1]
        self.symmetric = self._is_symmetric()

    def _is_symmetric(self):
        keyed = {}
        for p, m in zip(map(tuple, self.positions), self.masses):
            keyed[p] = keyed.get(p, 0.0) + m
        return all(math.isclose(m, keyed.get(tuple(-np.array(p)), 0.0), rel_tol=1e-14)
                   for p, m in keyed.items())

    def tail_mass(self, r):
        return float(self.masses[self.radii >= r].sum())

    def truncated_moment(self, eps, k=2):
        sel = self.radii < eps
        return float(np.sum(self.masses[sel] * self.radii[sel] ** k))

    def second_moment_matrix(self, eps):
        sel = self.radii < eps
        p = self.positions[sel]
        return (p * self.masses[sel, None]).T @ p

    def log_moment(self, threshold=2.0):
        sel = self.radii > threshold
        return LogMoment(True, float(np.sum(self.masses[sel] * np.log(self.radii[sel]))))

    def ball_first_moment(self, lo=0.0, hi=1.0):
        sel = (self.radii >= lo) & (self.radii <= hi)
        return self.masses[sel] @ self.positions[sel]

    def truncation_moment(self, truncation):
        w = self.masses * truncation_weight(truncation, self.radii)
        return w @ self.positions

    def truncation_shift(self, truncation):
        w = self.masses * (truncation_weight(truncation, self.radii)
                           - truncation_weight("indicator", self.radii))
        return w @ self.positions

    def jump_integral(self, z, truncation="indicator", method="auto", tol=DEFAULT_TOL):
        z = _to_vec(z, self.dim)
        phase = self.positions @ z
        c = truncation_weight(truncation, self.radii)
        terms = np.expm1(1j * phase) - 1j * phase * c
        return Estimate(complex(self.masses @ terms), 0.0)

    def sample_jumps(self, rng, n, eps):
        idx = rng.choice(self.masses.size, size=n, p=self.masses / self.masses.sum())
        return self.positions[idx]

    def to_dict(self):
        return {"kind": "atomic",
                "atoms": [{"position": p.tolist(), "mass": float(m)}
                          for p, m in zip(self.positions, self.masses)]}

    @classmethod
    def _from_params(cls, p):
        atoms = p["atoms"]
        return cls([np.atleast_1d(np.asarray(a["position"], dtype=float)).tolist() for a in atoms],
                   [a["mass"] for a in atoms])


class CompoundPoissonMeasure(LevyMeasure):
    """rate * N(mean, std^2) jump law in one dimension."""

    kind = "compound-poisson"

    def __init__(self, rate, mean=0.0, std=1.0, dim=1):
        if dim != 1:
            raise ValueError("compound-poisson measures are one-dimensional")
        if rate <= 0 or std <= 0:
            raise ValueError("rate and std must be positive")
        self.rate, self.mean, self.std, self.dim = float(rate), float(mean), float(std), 1
        self.symmetric = self.mean == 0.0
        self._law = stats.norm(self.mean, self.std)

    def _abs_cdf(self, r):
        # P(|Y| < r)
        return self._law.cdf(r) - self._law.cdf(-r) if r > 0 else 0.0

    def tail_mass(self, r):
        return float(self.rate * (1.0 - self._abs_cdf(r)))

    def _expect(self, fun, lo, hi):
        # rate * E[fun(Y); lo <= |Y| <= hi] by quadrature on both half-lines
        pdf = self._law.pdf
        span = (self.mean - 12 * self.std, self.mean + 12 * self.std)
        total = 0.0
        for a, b in ((lo, hi), (-hi, -lo)):
            a, b = max(a, span[0]), min(b, span[1])
            if a < b:
                total += quad(lambda y: fun(y) * pdf(y), a, b,
                                        epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        return self.rate * total

    def truncated_moment(self, eps, k=2):
        return self._expect(lambda y: abs(y) ** k, 0.0, eps)

    def log_moment(self, threshold=2.0):
        return LogMoment(True, self._expect(lambda y: math.log(abs(y)), threshold, math.inf))

    def ball_first_moment(self, lo=0.0, hi=1.0):
        if lo == 0.0:
            m, s = self.mean, self.std
            a, b = (-hi - m) / s, (hi - m) / s
            val = m * (stats.norm.cdf(b) - stats.norm.cdf(a)) - s * (stats.norm.pdf(b) - stats.norm.pdf(a))
            return np.array([self.rate * val])
        return np.array([self._expect(lambda y: y, lo, hi)])

    def second_moment_matrix(self, eps):
        return np.array([[self.truncated_moment(eps, 2)]])

    def truncation_moment(self, truncation):
        if truncation == "indicator":
            return self.ball_first_moment(0.0, 1.0)
        if truncation == "rational":
            return np.array([self._expect(lambda y: y / (1 + y * y), 0.0, math.inf)])
        return np.zeros(1)

    def jump_integral(self, z, truncation="indicator", method="auto", tol=DEFAULT_TOL):
        z = _to_vec(z, 1)[0]
        cf = np.exp(1j * z * self.mean - 0.5 * (self.std * z) ** 2)
        comp = self.truncation_moment(truncation)[0]
        return Estimate(complex(self.rate * (cf - 1.0) - 1j * z * comp), 1e-14)

    def sample_jumps(self, rng, n, eps):
        return rng.normal(self.mean, self.std, size=(n, 1))

    def to_dict(self):
        return {"kind": "compound-poisson", "rate": self.rate,
                "jump_law": {"law": "normal", "mean": self.mean, "std": self.std}}

    @classmethod
    def _from_params(cls, p):
        law = p.get("jump_law", {"law": "normal"})
        if law.get("law", "normal") != "normal":
            raise ValueError("only normal jump laws are supported")
        return cls(p["rate"], law.get("mean", 0.0), law.get("std", 1.0), p.get("dim", 1))


class RadialMeasure(LevyMeasure):
    """Symmetric measure with density profile(|y|) dy on R^dim, dim <= 3.

    Subclasses define ``profile`` and ``small_index`` (the exponent a such that
    profile(r) * r^{dim-1} ~ r^{-1-a} near the origin).
    """

    radial = True
    symmetric = True
    small_index = 0.0
    inner_cutoff = 0.0  # density vanishes for r < inner_cutoff

    def profile(self, r):
        raise NotImplementedError

    def radial_density(self, r):
        """Density of |Y| under nu: |S| * profile(r) * r^{dim-1}."""
        r = np.asarray(r, dtype=float)
        return sphere_area(self.dim) * self.profile(r) * r ** (self.dim - 1)

    def _radial_quad(self, fun, lo, hi, k=0.0):
        """int_lo^hi fun(r) dr, removing the r^{k-1-a} singularity at 0 if lo == 0."""
        lo = max(lo, self.inner_cutoff)
        if hi <= lo:
            return 0.0, 0.0
        if lo == 0.0 and np.isfinite(hi):
            p = 1.0 / max(k - self.small_index, 1e-3)
            ghi = hi ** (1 / p)
            val, err = quad(lambda t: fun(t**p) * p * t ** (p - 1), 0.0, ghi,
                                      epsabs=1e-14, epsrel=1e-12, limit=400)
            return val, err
        return quad(fun, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=400)

    def tail_mass(self, r):
        return self._radial_quad(self.radial_density, max(r, 0.0), math.inf)[0]

    def truncated_moment(self, eps, k=2):
        return self._radial_quad(lambda r: self.radial_density(r) * r**k, 0.0, eps, k)[0]

    def log_moment(self, threshold=2.0):
        val = self._radial_quad(lambda r: self.radial_density(r) * math.log(r), threshold, math.inf)[0]
        return LogMoment(True, val)

    def small_first_moment_finite(self):
        return self.finite_activity or self.small_index < 1.0

    def jump_integral(self, z, truncation="indicator", method="auto", tol=DEFAULT_TOL):
        return self._jump_integral_quadrature(z, tol)

    def _jump_integral_quadrature(self, z, tol=DEFAULT_TOL):
        # symmetric measure: compensator drops out, integrate -(|S| - S(r|z|)) profile r^{d-1}
        z = _to_vec(z, self.dim)
        w = float(np.linalg.norm(z))
        if w == 0.0:
            return Estimate(0j, 0.0)
        d = self.dim
        prof = lambda r: self.profile(r) * r ** (d - 1)
        inner, e1 = self._radial_quad(lambda r: _sphere_cos_deficit(d, w * r) * prof(r), 0.0, 1.0, 2.0)
        lo = max(1.0, self.inner_cutoff)
        area = sphere_area(d)
        mass_out = self.tail_mass(lo) / area
        if d == 1:
            osc, e2 = quad(prof, lo, math.inf, weight="cos", wvar=w, epsabs=tol / 10, limlst=200)
            outer, e2 = 2 * (osc - mass_out), 2 * e2
        elif d == 3:
            osc, e2 = quad(lambda r: prof(r) / r, lo, math.inf, weight="sin", wvar=w,
                                     epsabs=tol / 10, limlst=200)
            outer, e2 = 4 * math.pi * (osc / w - mass_out), 4 * math.pi * e2 / w
        else:
            def ring(phi):
                freq = w * math.cos(phi)
                if freq < 1e-12:
                    return quad(prof, lo, math.inf)[0]
                return quad(prof, lo, math.inf, weight="cos", wvar=freq, limlst=200)[0]
            osc, e2 = quad(ring, 0.0, math.pi / 2, epsabs=tol / 10, limit=200)
            outer, e2 = 4 * osc - 2 * math.pi * mass_out, 4 * e2
        return Estimate(complex(-inner + outer, 0.0), float(e1 + e2))

    def _radii_from_eps(self, rng, n, eps):
        raise NotImplementedError

    def sample_jumps(self, rng, n, eps):
        r = self._radii_from_eps(rng, n, eps)
        if self.dim == 1:
            return (r * rng.choice([-1.0, 1.0], size=n))[:, None]
        u = rng.standard_normal((n, self.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return u * r[:, None]


class StableMeasure(RadialMeasure):
    """Symmetric stable measure scale * |y|^{-dim-alpha} dy."""

    kind = "stable"
    finite_activity = False

    def __init__(self, alpha, scale=1.0, dim=1, symmetric=True):
        if not 0 < alpha < 2:
            raise ValueError("stable index must lie in (0, 2)")
        if scale <= 0:
            raise ValueError("stable scale must be positive")
        if not symmetric:
            raise ValueError("only symmetric stable measures are supported")
        if dim > 3:
            raise ValueError("dim <= 3 supported")
        self.alpha, self.scale, self.dim = float(alpha), float(scale), int(dim)
        self.small_index = self.alpha

    @classmethod
    def unit(cls, alpha, dim=1):
        """Stable measure normalised so that its exponent is -|z|^alpha."""
        return cls(alpha, 1.0 / stable_constant(alpha, dim), dim)

    def profile(self, r):
        return self.scale * np.asarray(r, dtype=float) ** (-self.dim - self.alpha)

    def tail_mass(self, r):
        if r <= 0:
            return math.inf
        return sphere_area(self.dim) * self.scale * r ** (-self.alpha) / self.alpha

    def truncated_moment(self, eps, k=2):
        if k <= self.alpha:
            return math.inf
        return sphere_area(self.dim) * self.scale * eps ** (k - self.alpha) / (k - self.alpha)

    def log_moment(self, threshold=2.0):
        a, t = self.alpha, threshold
        val = sphere_area(self.dim) * self.scale * t ** (-a) * (a * math.log(t) + 1) / a**2
        return LogMoment(True, val)

    def jump_integral(self, z, truncation="indicator", method="auto", tol=DEFAULT_TOL):
        if method == "quadrature":
            return self._jump_integral_quadrature(z, tol)
        z = _to_vec(z, self.dim)
        val = -self.scale * stable_constant(self.alpha, self.dim) * np.linalg.norm(z) ** self.alpha
        return Estimate(complex(val, 0.0), 0.0)

    def _radii_from_eps(self, rng, n, eps):
        return eps * rng.random(n) ** (-1.0 / self.alpha)

    def to_dict(self):
        return {"kind": "stable", "dim": self.dim, "alpha": self.alpha,
                "scale": self.scale, "symmetric": True}

    @classmethod
    def _from_params(cls, p):
        if p.get("unit"):
            return cls.unit(p["alpha"], p.get("dim", 1))
        return cls(p["alpha"], p.get("scale", 1.0), p.get("dim", 1), p.get("symmetric", True))


class TemperedStableMeasure(RadialMeasure):
    """Symmetric tempered stable measure scale * e^{-theta|y|} |y|^{-dim-alpha} dy."""

    kind = "tempered-stable"
    finite_activity = False

    def __init__(self, alpha, scale=1.0, theta=1.0, dim=1):
        if not 0 < alpha < 2 or scale <= 0 or theta <= 0:
            raise ValueError("need alpha in (0,2), scale > 0, theta > 0")
        if dim > 3:
            raise ValueError("dim <= 3 supported")
        self.alpha, self.scale, self.theta, self.dim = float(alpha), float(scale), float(theta), int(dim)
        self.small_index = self.alpha

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.scale * np.exp(-self.theta * r) * r ** (-self.dim - self.alpha)

    def tail_mass(self, r):
        if r <= 0:
            return math.inf
        return super().tail_mass(r)

    def truncated_moment(self, eps, k=2):
        if k <= self.alpha:
            return math.inf
        return super().truncated_moment(eps, k)

    def _radii_from_eps(self, rng, n, eps):
        # Pareto proposal from eps, accept with probability e^{-theta (r - eps)}
        out = np.empty(n)
        filled = 0
        while filled < n:
            m = max(2 * (n - filled), 16)
            r = eps * rng.random(m) ** (-1.0 / self.alpha)
            keep = r[rng.random(m) < np.exp(-self.theta * (r - eps))]
            take = min(keep.size, n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out

    def to_dict(self):
        return {"kind": "tempered-stable", "dim": self.dim, "alpha": self.alpha,
                "scale": self.scale, "theta": self.theta}

    @classmethod
    def _from_params(cls, p):
        return cls(p["alpha"], p.get("scale", 1.0), p.get("theta", 1.0), p.get("dim", 1))


class LogTailMeasure(RadialMeasure):
    """Heavy-tailed finite measure scale / (|y| (log|y|)^power) on |y| > cutoff, dim 1.

    With power <= 2 the log-moment is infinite while the total mass stays finite.
    """

    kind = "log-tail"
    finite_activity = True

    def __init__(self, scale=1.0, power=2.0, cutoff=math.e, dim=1):
        if dim != 1:
            raise ValueError("log-tail measures are one-dimensional")
        if scale <= 0 or power <= 1 or cutoff <= 1:
            raise ValueError("need scale > 0, power > 1, cutoff > 1")
        self.scale, self.power, self.cutoff, self.dim = float(scale), float(power), float(cutoff), 1
        self.inner_cutoff = self.cutoff

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.scale / (r * np.log(r) ** self.power)
        return np.where(r > self.cutoff, val, 0.0)

    def tail_mass(self, r):
        lr = math.log(max(r, self.cutoff))
        return 2 * self.scale * lr ** (1 - self.power) / (self.power - 1)

    def truncated_moment(self, eps, k=2):
        if eps <= self.cutoff:
            return 0.0
        return super().truncated_moment(eps, k)

    def log_moment(self, threshold=2.0):
        if self.power <= 2:
            return LogMoment(False, math.inf)
        lr = math.log(max(threshold, self.cutoff))
        return LogMoment(True, 2 * self.scale * lr ** (2 - self.power) / (self.power - 2))

    def _radii_from_eps(self, rng, n, eps):
        u = rng.random(n)
        return np.exp(math.log(self.cutoff) * u ** (-1.0 / (self.power - 1)))

    def to_dict(self):
        return {"kind": "log-tail", "dim": 1, "scale": self.scale,
                "power": self.power, "cutoff": self.cutoff}

    @classmethod
    def _from_params(cls, p):
        return cls(p.get("scale", 1.0), p.get("power", 2.0), p.get("cutoff", math.e), p.get("dim", 1))


_MEASURE_KINDS = {
    "zero": ZeroMeasure,
    "atomic": AtomicMeasure,
    "compound-poisson": CompoundPoissonMeasure,
    "stable": StableMeasure,
    "tempered-stable": TemperedStableMeasure,
    "log-tail": LogTailMeasure,
}


# ---------------------------------------------------------------------------
# Triplets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LevyTriplet:
    """Generating triplet (Q, nu, gamma) with its truncation convention."""

    dim: int
    Q: np.ndarray
    nu: LevyMeasure
    gamma: np.ndarray
    truncation: str = "indicator"

    def __post_init__(self):
        d = int(self.dim)
        Q = np.array(self.Q, dtype=float).reshape(d, d)
        gamma = np.atleast_1d(np.array(self.gamma, dtype=float)).reshape(d)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "gamma", gamma)
        Q.setflags(write=False)
        gamma.setflags(write=False)
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12 * max(1.0, np.abs(Q).max()):
            raise ValueError("Q must be positive semidefinite")
        if self.nu.dim != d:
            raise ValueError("measure dimension does not match triplet dimension")
        if self.truncation not in TRUNCATIONS:
            raise ValueError(f"truncation must be one of {TRUNCATIONS}")
        if self.truncation == "none" and not self.nu.small_first_moment_finite():
            raise ValueError("truncation 'none' needs finite-variation small jumps")

    @classmethod
    def gaussian(cls, Q, gamma=None):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        d = Q.shape[0]
        return cls(d, Q, ZeroMeasure(d), np.zeros(d) if gamma is None else gamma)

    @classmethod
    def pure_jump(cls, nu, gamma=None, truncation="indicator"):
        d = nu.dim
        return cls(d, np.zeros((d, d)), nu, np.zeros(d) if gamma is None else gamma, truncation)

    def with_truncation(self, truncation):
        return convert_truncation(self, truncation)

    def to_dict(self):
        return {"dim": self.dim, "Q": self.Q.ravel().tolist(), "gamma": self.gamma.tolist(),
                "truncation": self.truncation, "nu": self.nu.to_dict()}

    @classmethod
    def from_dict(cls, doc):
        d = int(doc["dim"])
        Q = np.asarray(doc.get("Q", np.zeros(d * d)), dtype=float).reshape(d, d)
        gamma = doc.get("gamma", [0.0] * d)
        nu = LevyMeasure.from_dict(doc.get("nu", {"kind": "zero"}), dim=d)
        return cls(d, Q, nu, gamma, doc.get("truncation", "indicator"))

    def __eq__(self, other):
        return isinstance(other, LevyTriplet) and self.to_dict() == other.to_dict()


def char_exponent_estimate(triplet, z, method="auto", tol=DEFAULT_TOL):
    """Characteristic exponent with an error estimate for the jump part."""
    z = _to_vec(z, triplet.dim)
    jump = triplet.nu.jump_integral(z, triplet.truncation, method=method, tol=tol)
    val = -0.5 * z @ triplet.Q @ z + 1j * (triplet.gamma @ z) + jump.value
    return Estimate(complex(val), jump.error)


def char_exponent(triplet, z, method="auto", tol=DEFAULT_TOL):
    """eta(z) = log E exp(i<z, L(1)>)."""
    est = char_exponent_estimate(triplet, z, method, tol)
    if est.error > 100 * tol:
        raise QuadratureError(f"exponent error estimate {est.error:.3g} exceeds tolerance",
                              est.value, est.error)
    return est.value


def cf(triplet, z, method="auto", tol=DEFAULT_TOL):
    """Characteristic function exp(eta(z))."""
    return complex(np.exp(char_exponent(triplet, z, method, tol)))


def convert_truncation(triplet, new_truncation):
    """Same law under another truncation function, with gamma shifted accordingly."""
    if new_truncation not in TRUNCATIONS:
        raise ValueError(f"truncation must be one of {TRUNCATIONS}")
    if new_truncation == triplet.truncation:
        return triplet
    if "none" in (new_truncation, triplet.truncation) and not triplet.nu.small_first_moment_finite():
        raise ValueError("correction integral diverges: infinite-variation small jumps")
    nu = triplet.nu
    gamma = triplet.gamma - nu.truncation_shift(triplet.truncation) + nu.truncation_shift(new_truncation)
    return LevyTriplet(triplet.dim, triplet.Q, nu, gamma, new_truncation)


def log_moment(nu, threshold=2.0):
    return nu.log_moment(threshold)


def truncated_second_moment(nu, eps):
    return nu.truncated_second_moment(eps)


def tail_mass(nu, r):
    return nu.tail_mass(r)
