"""Spatial quadrature rules shared by the generator and invariance modules."""
from __future__ import annotations

import math

import numpy as np

from .levy_core import quad

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def composite_gauss_legendre(fun, a, b, width, chunk=200_000):
    """Fixed 8-point Gauss-Legendre rule on panels of at most ``width``.

    ``fun`` is vectorised over a 1-d array of abscissae.
    """
    if b <= a:
        return 0.0
    n = max(1, math.ceil((b - a) / width))
    edges = np.linspace(a, b, n + 1)
    total = 0.0
    per = max(1, chunk // _GL_NODES.size)
    for i in range(0, n, per):
        j = min(i + per, n)
        lo, hi = edges[i:j], edges[i + 1:j + 1]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
        weights = (half[:, None] * _GL_WEIGHTS).ravel()
        total += float(np.dot(fun(nodes), weights))
    return total


class DensityMeasure:
    """A probability density on R (d = 1) with a quadrature rule.

    ``rule='gauss-hermite'`` integrates against N(mean, std^2) exactly for
    polynomials and needs ``gaussian=(mean, std)``; the density must then be
    that Gaussian.  ``rule='adaptive'`` applies adaptive quadrature on
    ``domain`` and normalises the density numerically.
    """

    def __init__(self, density, domain=(-12.0, 12.0), rule="adaptive", gaussian=None,
                 n_nodes=120, normalise=True):
        self.density = density
        self.domain = tuple(float(v) for v in domain)
        self.rule = rule
        self.gaussian = gaussian
        self.dim = 1
        if rule == "gauss-hermite":
            if gaussian is None:
                raise ValueError("gauss-hermite rule needs gaussian=(mean, std)")
            x, w = np.polynomial.hermite_e.hermegauss(n_nodes)
            mean, std = gaussian
            self._nodes = mean + std * x
            self._weights = w / math.sqrt(2 * math.pi)
            self.norm = 1.0
        elif rule == "adaptive":
            self.norm = 1.0
            if normalise:
                self.norm = quad(lambda t: float(self._dens(t)), *self.domain,
                                 epsabs=1e-14, epsrel=1e-13, limit=400)[0]
        else:
            raise ValueError(f"unknown rule {rule!r}")

    @classmethod
    def normal(cls, mean=0.0, var=1.0, n_nodes=120):
        std = math.sqrt(var)
        dens = lambda x: np.exp(-(np.asarray(x) - mean) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)
        return cls(dens, (mean - 40 * std, mean + 40 * std), "gauss-hermite", (mean, std), n_nodes)

    @classmethod
    def from_potential(cls, G, domain=(-12.0, 12.0)):
        """Density proportional to exp(-G(x)) normalised on ``domain``."""
        return cls(lambda x: np.exp(-G(np.asarray(x, dtype=float))), domain, "adaptive")

    def _dens(self, t):
        return np.asarray(self.density(np.asarray(t, dtype=float)), dtype=float)

    def pdf(self, x):
        return self._dens(x) / self.norm

    def integrate(self, fun):
        """int fun(x) mu(dx) for fun mapping an (n, 1) array to n values."""
        if self.rule == "gauss-hermite":
            vals = np.asarray(fun(self._nodes[:, None]), dtype=float)
            return float(vals @ self._weights)
        g = lambda t: float(np.asarray(fun(np.array([[t]])), dtype=float).ravel()[0]) * float(self._dens(t))
        val = quad(g, *self.domain, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
        return val / self.norm

    def mass_error(self):
        """|int density - 1| on the declared domain."""
        val = quad(lambda t: float(self._dens(t)), *self.domain, epsabs=1e-14, limit=400)[0]
        return abs(val / self.norm - 1.0) if self.rule == "adaptive" else abs(val - 1.0)
