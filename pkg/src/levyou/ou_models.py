"""Exact transition and invariant laws of Ornstein-Uhlenbeck-Lévy processes.

The process solves dX = -A X dt + dL with A = c > 0 (scalar) or a real
matrix whose eigenvalues have positive real part.  All laws are kept in
triplet form; the pushed-forward Lévy measures are never discretised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, optimize

from .levy_core import (AtomicMeasure, CompoundPoissonMeasure, LevyMeasure, LevyTriplet,
                        char_exponent, convert_truncation, quad)


class LogMomentViolation(ValueError):
    """The noise has an infinite log-moment, so no invariant law exists."""


QUAD_TOL = 1e-12


def _complex_quad(fun, a, b, points=None):
    memo = {}

    def cached(s):
        if s not in memo:
            memo[s] = complex(fun(s))
        return memo[s]

    kw = dict(epsabs=QUAD_TOL, epsrel=1e-12, limit=400)
    if points is not None and np.isfinite(b):
        kw["points"] = points
    re, e1 = quad(lambda s: cached(s).real, a, b, **kw)
    im, e2 = quad(lambda s: cached(s).imag, a, b, **kw)
    return complex(re, im), e1 + e2


class OUModel:
    """dX = -A X dt + dL for scalar or matrix A and a Lévy noise triplet."""

    def __init__(self, drift, noise: LevyTriplet):
        arr = np.asarray(drift, dtype=float)
        if arr.ndim == 0 or arr.size == 1 and noise.dim == 1:
            c = float(arr.ravel()[0])
            if c <= 0:
                raise ValueError("scalar drift c must be positive")
            self.c = c
            self.A = np.array([[c]]) if noise.dim == 1 else c * np.eye(noise.dim)
            self.scalar = True
        else:
            A = np.atleast_2d(arr)
            if A.shape != (noise.dim, noise.dim):
                raise ValueError("drift matrix shape does not match noise dimension")
            if np.linalg.eigvals(A).real.min() <= 0:
                raise ValueError("drift matrix needs spectrum in the open right half-plane")
            self.c = None
            self.A = A
            self.scalar = False
        self.noise = noise
        self.dim = noise.dim
        # all laws below are written with the closed unit-ball indicator
        self._noise = convert_truncation(noise, "indicator")
        self.decay = float(np.linalg.eigvals(self.A).real.min())

    # flows ---------------------------------------------------------------
    def flow(self, s, y):
        """e^{-sA} y."""
        y = np.asarray(y, dtype=float)
        if self.scalar:
            return math.exp(-self.c * s) * y
        return linalg.expm(-s * self.A) @ y

    def adjoint_flow(self, s, z):
        """e^{-sA*} z, the argument at which the noise exponent is evaluated."""
        z = np.asarray(z, dtype=float)
        if self.scalar:
            return math.exp(-self.c * s) * z
        return linalg.expm(-s * self.A.T) @ z

    def drift_matrix(self):
        return self.A.copy()

    def to_dict(self):
        doc = self.noise.to_dict()
        doc["drift"] = {"scalar": self.c} if self.scalar else {"matrix": self.A.tolist()}
        return doc

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        drift = doc.pop("drift")
        noise_doc = doc.pop("noise", doc)
        noise = LevyTriplet.from_dict(noise_doc)
        if "scalar" in drift:
            return cls(float(drift["scalar"]), noise)
        return cls(np.asarray(drift["matrix"], dtype=float), noise)

    def __repr__(self):
        drift = f"c={self.c}" if self.scalar else f"A={self.A.tolist()}"
        return f"OUModel({drift}, noise={self.noise.to_dict()})"


# ---------------------------------------------------------------------------
# pushforward measures along the flow
# ---------------------------------------------------------------------------

def _atom_outside_intervals(model, y, horizon):
    """Sub-intervals of [0, horizon] on which |e^{-sA}y| > 1."""
    if model.scalar:
        r = float(np.linalg.norm(y))
        if r <= 1:
            return []
        s_star = math.log(r) / model.c
        return [(0.0, min(s_star, horizon))]
    norm = lambda s: np.linalg.norm(model.flow(s, y)) - 1.0
    end = horizon
    if not np.isfinite(horizon):
        end = max(1.0, (math.log(max(np.linalg.norm(y), 1.0)) + 10.0) / model.decay) * 4
    grid = np.linspace(0.0, end, 2001)
    vals = np.array([norm(s) for s in grid])
    if not np.isfinite(horizon) and vals[-1] > 0:
        raise RuntimeError("flow did not re-enter the unit ball within the search window")
    roots = [optimize.brentq(norm, grid[i], grid[i + 1])
             for i in range(grid.size - 1) if vals[i] * vals[i + 1] < 0]
    edges = [0.0] + roots + [end]
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        if norm(0.5 * (a + b)) > 0:
            out.append((a, b))
    return out


def _integrate_flow(model, y, a, b):
    """int_a^b e^{-sA} y ds (b may be inf)."""
    if model.scalar:
        far = 0.0 if not np.isfinite(b) else math.exp(-model.c * b)
        return y * (math.exp(-model.c * a) - far) / model.c
    A = model.A
    start = linalg.expm(-a * A) @ y
    far = 0.0 if not np.isfinite(b) else linalg.expm(-b * A) @ y
    return np.linalg.solve(A, start - far)


def gamma_correction(model, horizon):
    """int nu(dy) int_0^horizon e^{-sA} y [1(|e^{-sA}y|<=1) - 1(|y|<=1)] ds."""
    nu = model._noise.nu
    d = model.dim
    if nu.symmetric:
        return np.zeros(d)
    if isinstance(nu, AtomicMeasure):
        total = np.zeros(d)
        for y, m in zip(nu.positions, nu.masses):
            if np.linalg.norm(y) <= 1:
                # starts inside; contributes -e^{-sA}y wherever the flow leaves the ball
                for a, b in _atom_outside_intervals(model, y, horizon):
                    total -= m * _integrate_flow(model, y, a, b)
                continue
            # starts outside; contributes +e^{-sA}y wherever the flow is inside the ball
            cur = 0.0
            for a, b in _atom_outside_intervals(model, y, horizon):
                if a > cur:
                    total += m * _integrate_flow(model, y, cur, a)
                cur = b
            if cur < horizon:
                total += m * _integrate_flow(model, y, cur, horizon)
        return total
    if isinstance(nu, CompoundPoissonMeasure) and model.scalar:
        c = model.c
        far = 0.0 if not np.isfinite(horizon) else math.exp(-c * horizon)
        hi = math.exp(c * horizon) if np.isfinite(horizon) else math.inf
        # atoms of size 1 < |y| < e^{c h} re-enter the ball at s* = log|y|/c
        val = nu._expect(lambda y: math.copysign(1.0, y) / c - y * far / c, 1.0, hi)
        return np.array([val])
    raise NotImplementedError(f"flow correction not available for {nu.kind} noise")


class PushforwardMeasure:
    """nu_h(B) = int nu(dy) int_0^h 1_B(e^{-sA} y) ds, kept as a description."""

    def __init__(self, model: OUModel, horizon: float):
        self.model = model
        self.base: LevyMeasure = model._noise.nu
        self.horizon = float(horizon)
        self.dim = model.dim

    def total_mass(self):
        mass = self.base.total_mass()
        return 0.0 if mass == 0 or self.horizon == 0 else self.horizon * mass

    def tail_mass(self, r):
        """nu_h({|y| >= r}) as a time integral of base tail masses."""
        model, base = self.model, self.base
        if isinstance(base, AtomicMeasure):
            total = 0.0
            for y, m in zip(base.positions, base.masses):
                fun = lambda s: float(np.linalg.norm(model.flow(s, y)) >= r)
                if model.scalar:
                    rad = float(np.linalg.norm(y))
                    total += m * (min(max(math.log(rad / r) / model.c, 0.0), self.horizon) if rad >= r else 0.0)
                else:
                    total += m * quad(fun, 0.0, self.horizon, limit=400)[0]
            return total
        if not model.scalar:
            raise NotImplementedError("tail mass of matrix pushforwards needs atomic noise")
        fun = lambda s: base.tail_mass(r * math.exp(model.c * s))
        return quad(fun, 0.0, self.horizon, limit=400)[0]

    def _inner(self, z, s):
        """int nu(dy) (e^{i<z,e^{-sA}y>} - 1 - i<z,e^{-sA}y> 1(|e^{-sA}y| <= 1))."""
        model, base = self.model, self.base
        if isinstance(base, AtomicMeasure):
            moved = np.array([model.flow(s, y) for y in base.positions])
            ph = moved @ z
            inside = np.linalg.norm(moved, axis=1) <= 1.0
            return complex(base.masses @ (np.expm1(1j * ph) - 1j * ph * inside))
        w = model.adjoint_flow(s, z)
        if base.symmetric:
            return base.jump_integral(w, method="quadrature").value
        if isinstance(base, CompoundPoissonMeasure) and model.scalar:
            k = math.exp(-model.c * s)
            cf = np.exp(1j * w[0] * base.mean - 0.5 * (base.std * w[0]) ** 2)
            comp = base.ball_first_moment(0.0, 1.0 / k)[0]
            return complex(base.rate * (cf - 1.0) - 1j * w[0] * comp)
        raise NotImplementedError(f"pushforward of {base.kind} noise")

    def jump_integral(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if not np.any(z):
            return 0j
        if np.isfinite(self.horizon):
            return _complex_quad(lambda s: self._inner(z, s), 0.0, self.horizon)[0]
        rate = self.model.decay
        # s = -log(u)/rate maps [0, inf) onto (0, 1]
        fun = lambda u: self._inner(z, -math.log(u) / rate) / (rate * u)
        return _complex_quad(fun, 0.0, 1.0)[0]

    def describe(self):
        return {"base": self.base.to_dict(), "flow": "e^{-sA} y",
                "horizon": self.horizon if np.isfinite(self.horizon) else "inf"}


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------

def _gauss_cf_exponent(Q, gamma, z):
    return -0.5 * z @ Q @ z + 1j * (gamma @ z)


@dataclass(frozen=True)
class TransitionLaw:
    Q_t: np.ndarray
    nu_t: PushforwardMeasure
    gamma_tx: np.ndarray
    t: float
    x: np.ndarray

    def cf(self, z):
        """Characteristic function reconstructed from the triplet."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return complex(np.exp(_gauss_cf_exponent(self.Q_t, self.gamma_tx, z) + self.nu_t.jump_integral(z)))


@dataclass(frozen=True)
class InvariantLaw:
    Q_inf: np.ndarray
    nu_inf: PushforwardMeasure
    gamma_inf: np.ndarray

    def cf(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return complex(np.exp(_gauss_cf_exponent(self.Q_inf, self.gamma_inf, z) + self.nu_inf.jump_integral(z)))

    @property
    def cf_evaluator(self):
        return self.cf


def _z(model, z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (model.dim,):
        raise ValueError(f"expected z of length {model.dim}")
    return z


def exponent_time_integral(model, z, t0, t1):
    """int_{t0}^{t1} eta(e^{-sA*} z) ds."""
    eta = lambda s: char_exponent(model._noise, model.adjoint_flow(s, z))
    return _complex_quad(eta, t0, t1)[0]


def transition_cf(model: OUModel, t, x, z):
    """E_x exp(i<z, X_t>) = exp(i<e^{-tA}x, z> + int_0^t eta(e^{-sA*}z) ds)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    z = _z(model, z)
    x = _z(model, x)
    phase = model.flow(t, x) @ z
    return complex(np.exp(1j * phase + exponent_time_integral(model, z, 0.0, t)))


def transition_triplet(model: OUModel, t, x) -> TransitionLaw:
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = _z(model, x)
    d, Q, gamma = model.dim, model._noise.Q, model._noise.gamma
    if model.scalar:
        c = model.c
        Q_t = Q * (-math.expm1(-2 * c * t)) / (2 * c)
        drift = math.exp(-c * t) * x + gamma * (-math.expm1(-c * t)) / c
    else:
        A = model.A
        Q_t = integrate.quad_vec(lambda s: linalg.expm(-s * A) @ Q @ linalg.expm(-s * A.T),
                                 0.0, t, epsabs=QUAD_TOL)[0] if t > 0 else np.zeros((d, d))
        drift = model.flow(t, x) + np.linalg.solve(A, gamma - model.flow(t, gamma))
    corr = gamma_correction(model, t) if t > 0 else np.zeros(d)
    return TransitionLaw(np.asarray(Q_t), PushforwardMeasure(model, t), drift + corr, float(t), x)


@dataclass(frozen=True)
class LogMomentReport:
    finite: bool
    value: float
    threshold: float

    @property
    def verdict(self):
        return "finite" if self.finite else "infinite"


def check_log_moment(model: OUModel, threshold=2.0) -> LogMomentReport:
    lm = model.noise.nu.log_moment(threshold)
    return LogMomentReport(bool(lm.finite), float(lm.value), threshold)


def _require_log_moment(model):
    rep = check_log_moment(model)
    if not rep.finite:
        raise LogMomentViolation("noise Lévy measure has an infinite log-moment; "
                                 "no invariant law exists")


def invariant_cf(model: OUModel, z):
    """exp(int_0^inf eta(e^{-sA*} z) ds)."""
    _require_log_moment(model)
    z = _z(model, z)
    if not np.any(z):
        return 1.0 + 0j
    rate = model.c if model.scalar else model.decay
    # u = e^{-rate s}: int_0^1 eta(e^{-sA*} z) / (rate u) du
    fun = lambda u: char_exponent(model._noise, model.adjoint_flow(-math.log(u) / rate, z)) / (rate * u)
    return complex(np.exp(_complex_quad(fun, 0.0, 1.0)[0]))


def invariant_triplet(model: OUModel) -> InvariantLaw:
    _require_log_moment(model)
    Q, gamma, nu = model._noise.Q, model._noise.gamma, model._noise.nu
    if model.scalar:
        c = model.c
        Q_inf = Q / (2 * c)
        gamma_inf = gamma / c + _outer_direction_mean(nu) / c
    else:
        A = model.A
        Q_inf = integrate.quad_vec(lambda s: linalg.expm(-s * A) @ Q @ linalg.expm(-s * A.T),
                                   0.0, np.inf, epsabs=QUAD_TOL)[0]
        gamma_inf = np.linalg.solve(A, gamma) + gamma_correction(model, np.inf)
    return InvariantLaw(np.asarray(Q_inf), PushforwardMeasure(model, np.inf), np.asarray(gamma_inf))


def _outer_direction_mean(nu):
    """int_{|y|>1} y/|y| nu(dy)."""
    if nu.symmetric:
        return np.zeros(nu.dim)
    if isinstance(nu, AtomicMeasure):
        sel = nu.radii > 1
        return (nu.masses[sel] / nu.radii[sel]) @ nu.positions[sel]
    if isinstance(nu, CompoundPoissonMeasure):
        return np.array([nu._expect(lambda y: math.copysign(1.0, y), 1.0, math.inf)])
    raise NotImplementedError(f"gamma_inf for {nu.kind} noise")
