"""Diagonal (spectral) truncation of an infinite-dimensional OU-Lévy process.

Mode n solves the scalar equation dX_n = -lambda_n X_n dt + beta_n dL^n with
independent copies L^n of a one-dimensional symmetric Lévy process L_R
(Gaussian variance ``sigma2`` and Lévy measure ``nu_R``).  Only retained
modes are simulated; infinite sums are handled through parametric tails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .levy_core import (AtomicMeasure, CompoundPoissonMeasure, LevyMeasure, LevyTriplet,
                        StableMeasure, TemperedStableMeasure, ZeroMeasure)
from .ou_models import LogMomentViolation, OUModel, invariant_cf
from .sampler import SimScheme, simulate_ou


@dataclass(frozen=True)
class PowerRule:
    """a * n^power."""

    a: float
    power: float

    def __call__(self, n):
        return self.a * np.asarray(n, dtype=float) ** self.power

    def to_dict(self):
        return {"a": self.a, "power": self.power}


def _rule(spec, name):
    if isinstance(spec, PowerRule):
        return spec
    if isinstance(spec, dict):
        return PowerRule(float(spec["a"]), float(spec["power"]))
    raise TypeError(f"{name} needs a power rule {{a, power}}")


@dataclass
class SpectralModel:
    """Retained modes (lambda_n, beta_n), n = 1..N_trunc, plus tail rules.

    ``lam`` and ``beta`` are lists (explicit retained modes) or power rules
    lambda_n = c n^q and beta_n = C n^-p; ``lam_tail`` / ``beta_tail``
    extend explicit lists beyond N_trunc for the summability diagnostics.
    """

    lam: object
    beta: object
    N_trunc: int
    nu_R: LevyMeasure = field(default_factory=ZeroMeasure)
    sigma2: float = 0.0
    lam_tail: PowerRule | None = None
    beta_tail: PowerRule | None = None

    def __post_init__(self):
        n = np.arange(1, self.N_trunc + 1)
        self.lambdas = self._values(self.lam, n, "lambda")
        self.betas = self._values(self.beta, n, "beta")
        if self.lam_tail is None and not isinstance(self.lam, (list, tuple, np.ndarray)):
            self.lam_tail = _rule(self.lam, "lambda")
        if self.beta_tail is None and not isinstance(self.beta, (list, tuple, np.ndarray)):
            self.beta_tail = _rule(self.beta, "beta")
        if self.N_trunc < 1:
            raise ValueError("N_trunc must be at least 1")
        if np.any(self.lambdas <= 0) or np.any(np.diff(self.lambdas) <= 0):
            raise ValueError("lambda_n must be positive and strictly increasing")
        if np.any(self.betas <= 0):
            raise ValueError("beta_n must be positive")
        if self.nu_R.dim != 1 or not self.nu_R.symmetric:
            raise ValueError("nu_R must be a symmetric one-dimensional Lévy measure")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    def _values(self, spec, n, name):
        if isinstance(spec, (list, tuple, np.ndarray)):
            vals = np.asarray(spec, dtype=float)
            if vals.size < n.size:
                raise ValueError(f"{name} list shorter than N_trunc")
            return vals[:n.size]
        return _rule(spec, name)(n)

    def noise(self):
        return LevyTriplet(1, np.array([[self.sigma2]]), self.nu_R, np.zeros(1))

    def mode_noise(self, n) -> LevyTriplet:
        """Triplet of beta_n L_R."""
        b = float(self.betas[n - 1])
        return LevyTriplet(1, np.array([[b * b * self.sigma2]]), scale_measure(self.nu_R, b),
                           np.zeros(1))

    def mode_model(self, n) -> OUModel:
        return OUModel(float(self.lambdas[n - 1]), self.mode_noise(n))

    def to_dict(self):
        enc = lambda v: _rule(v, "").to_dict() if not isinstance(v, (list, tuple, np.ndarray)) \
            else [float(x) for x in v]
        return {"lambda": enc(self.lam), "beta": enc(self.beta), "N_trunc": self.N_trunc,
                "nu_R": self.nu_R.to_dict(), "sigma2": self.sigma2}


def scale_measure(nu: LevyMeasure, b: float) -> LevyMeasure:
    """Image of nu under y -> b y for the symmetric parametric kinds."""
    if isinstance(nu, ZeroMeasure):
        return nu
    if isinstance(nu, AtomicMeasure):
        return AtomicMeasure(nu.positions * b, nu.masses)
    if isinstance(nu, StableMeasure):
        return StableMeasure(nu.alpha, nu.scale * b ** nu.alpha, nu.dim)
    if isinstance(nu, TemperedStableMeasure):
        return TemperedStableMeasure(nu.alpha, nu.scale * b ** nu.alpha, nu.theta / b, nu.dim)
    if isinstance(nu, CompoundPoissonMeasure):
        return CompoundPoissonMeasure(nu.rate, nu.mean * b, nu.std * b)
    raise NotImplementedError(f"scaling of {nu.kind} measures")


# ---------------------------------------------------------------------------
# summability
# ---------------------------------------------------------------------------

def summand(nu: LevyMeasure, b):
    """b^2 int_{|y| < 1/b} y^2 nu + nu(|y| >= 1/b).

    At |y| = 1/b both pieces contribute b^2 y^2 = 1, so the choice of closed
    or open ball does not change the value.
    """
    if isinstance(nu, ZeroMeasure):
        return 0.0
    r = 1.0 / b
    return b * b * nu.truncated_moment(r, 2) + nu.tail_mass(r)


def small_beta_index(nu: LevyMeasure):
    """kappa with summand(nu, b) ~ const * b^kappa as b -> 0 (0 if it does not vanish)."""
    if isinstance(nu, ZeroMeasure):
        return math.inf
    if isinstance(nu, StableMeasure):
        return nu.alpha
    if nu.kind == "log-tail":
        return 0.0
    # remaining kinds have a finite second moment
    return 2.0


@dataclass
class SummabilityReport:
    holds: bool
    partial_sums: list
    summands: list
    tail_exponent: float
    log_condition: bool
    log_moment: float
    inverse_lambda_sum_finite: bool
    reason: str

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def check_summability(model: SpectralModel, n_terms=None):
    """Verdict on sum_n summand(nu_R, beta_n) < inf with the parametric tail beta_n = C n^-p.

    The summand behaves like n^{-p kappa} with kappa = small_beta_index(nu_R),
    so the series converges iff p kappa > 1.  The log condition on nu_R and
    sum 1/lambda_n < inf (lambda_n = c n^q, finite iff q > 1) are reported
    separately.
    """
    nu = model.nu_R
    if model.beta_tail is None:
        raise ValueError("check_summability needs a tail rule for beta")
    n_terms = n_terms or max(model.N_trunc, 50)
    n = np.arange(1, n_terms + 1)
    betas = np.concatenate([model.betas, model.beta_tail(n[model.N_trunc:])])[:n_terms]
    terms = [summand(nu, float(b)) for b in betas]
    partial = np.cumsum(terms).tolist()
    kappa = small_beta_index(nu)
    p = -model.beta_tail.power
    if isinstance(nu, ZeroMeasure):
        holds, exponent, reason = True, math.inf, "nu_R = 0: every summand vanishes"
    elif p <= 0:
        holds, exponent, reason = False, 0.0, "beta_n does not decay: summands stay bounded below"
    else:
        exponent = p * kappa
        holds = exponent > 1
        reason = f"summand ~ n^-{exponent:.6g}; series {'converges' if holds else 'diverges'}"
    lm = nu.log_moment(threshold=1.0)
    q = model.lam_tail.power if model.lam_tail is not None else math.nan
    return SummabilityReport(bool(holds), partial, terms, float(exponent), bool(lm.finite),
                             float(lm.value), bool(q > 1), reason)


# ---------------------------------------------------------------------------
# simulation and invariant laws
# ---------------------------------------------------------------------------

def simulate_modes(model: SpectralModel, x0, T, scheme: SimScheme, n_paths, seed):
    """Independent scalar OU simulations, mode n on random stream (n,)."""
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (model.N_trunc,))
    return [simulate_ou(model.mode_model(n), [x0[n - 1]], T, scheme, n_paths, seed, stream=(n,))
            for n in range(1, model.N_trunc + 1)]


def mode_states(ensembles):
    """(n_paths, N_trunc) matrix of terminal mode coefficients."""
    return np.column_stack([e.states[:, 0] for e in ensembles])


def gaussian_mode_factor(model: SpectralModel, n, z):
    """exp(-beta_n^2 sigma2 z^2 / (4 lambda_n))."""
    b, lam = model.betas[n - 1], model.lambdas[n - 1]
    return math.exp(-b * b * model.sigma2 * z * z / (4 * lam))


def jump_mode_factor(model: SpectralModel, n, z):
    """exp(int_0^inf psi_R(beta_n e^{-lambda_n s} z) ds), psi_R(h) = -int (1 - cos hy) nu_R(dy)."""
    if isinstance(model.nu_R, ZeroMeasure):
        return 1.0 + 0.0j
    jump_only = OUModel(float(model.lambdas[n - 1]),
                        LevyTriplet.pure_jump(scale_measure(model.nu_R, float(model.betas[n - 1]))))
    return invariant_cf(jump_only, z)


def invariant_mode_cf(model: SpectralModel, n, z):
    """Stationary CF of mode n as the product Gaussian factor x jump factor."""
    if not 1 <= n <= model.N_trunc:
        raise IndexError(f"mode {n} is not retained")
    lm = model.nu_R.log_moment()
    if not lm.finite:
        raise LogMomentViolation("nu_R has an infinite log-moment")
    return complex(gaussian_mode_factor(model, n, z) * jump_mode_factor(model, n, z))


def quadratic_remainder(model: SpectralModel):
    """Analytic tail sum_{n > N} beta_n^2 m2 / (2 lambda_n) of E|X|^2 at stationarity.

    m2 = sigma2 + int y^2 nu_R; infinite when nu_R has no second moment.
    """
    nu = model.nu_R
    m2 = model.sigma2
    if not isinstance(nu, ZeroMeasure):
        if small_beta_index(nu) < 2:
            return math.inf
        m2 += nu.truncated_moment(math.inf, 2)
    if m2 == 0:
        return 0.0
    if model.beta_tail is None or model.lam_tail is None:
        raise ValueError("remainder needs tail rules for lambda and beta")
    B, L = model.beta_tail, model.lam_tail
    expo = 2 * B.power - L.power
    if expo >= -1:
        return math.inf
    # sum_{n > N} n^expo is the Hurwitz zeta value zeta(-expo, N + 1)
    coef = B.a**2 / (2 * L.a)
    return m2 * coef * float(special.zeta(-expo, model.N_trunc + 1))


def stationary_mode_variances(model: SpectralModel):
    """beta_n^2 (sigma2 + int y^2 nu_R) / (2 lambda_n) for retained modes."""
    nu = model.nu_R
    m2 = model.sigma2 + (0.0 if isinstance(nu, ZeroMeasure) else nu.truncated_moment(math.inf, 2))
    return model.betas**2 * m2 / (2 * model.lambdas)
