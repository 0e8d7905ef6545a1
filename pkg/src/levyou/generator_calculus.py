"""Integro-differential generators acting on test functions.

Sign conventions: ``apply_generator`` returns A f for the Lévy-type operator

    A f(x) = <l(x), grad f> + 1/2 Tr(Q(x) hess f) + int (f(x+y) - f(x) - <y, grad f> c(y)) N(x, dy),

``symbol`` returns p(x, xi) = -eta(Phi(x)^T xi) - i <Psi(x), xi>, so that
A e^{i<xi,.>}(x) = -p(x, xi) e^{i<xi,x>} for constant coefficients, and
``apply_HG`` / ``apply_HJ`` return -H_G f and -H_J f, the (non-positive)
generators of the ground-state transformed process.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import hermite_e

from .levy_core import (AtomicMeasure, CompoundPoissonMeasure, LevyMeasure, LevyTriplet,
                        RadialMeasure, StableMeasure, ZeroMeasure, char_exponent, quad,
                        truncation_weight)
from .quadrature import DensityMeasure, composite_gauss_legendre

GENERATOR_TOL = 1e-7
PHI_FLOOR = 1e-300


class DivergentJumpIntegral(ValueError):
    """The jump integral of the test function diverges for this Lévy measure."""


def _points(x, dim):
    """Return (array of shape (n, dim), whether the input was a single point)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1), True
    if x.ndim == 1:
        if dim == 1 and x.size != 1:
            return x[:, None], False
        return x.reshape(1, dim), True
    return x, False


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

class TestFunction:
    """A C^2 function with value, gradient and Hessian.

    The callables act on arrays of shape (n, dim) and return shapes (n,),
    (n, dim) and (n, dim, dim).  ``support_radius`` is the radius outside of
    which the function vanishes to double precision (inf when it does not
    decay), ``bound`` is sup|f|, ``growth`` the polynomial growth degree and
    ``scale`` a characteristic length used to size quadrature panels.
    """

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, value, gradient, hessian, dim=1, support_radius=math.inf, name="f",
                 bound=math.inf, growth=0, scale=1.0, fourier=None, center=None, wave=None):
        self.value, self.gradient, self.hessian = value, gradient, hessian
        self.dim = dim
        self.support_radius = support_radius
        self.name = name
        self.bound = bound
        self.growth = growth
        self.scale = scale
        self.fourier = fourier
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        # wavenumber of a plane wave: f(x + y) + f(x - y) = 2 f(x) cos(<wave, y>)
        self.wave = wave

    def __call__(self, x):
        pts, single = _points(x, self.dim)
        v = self.value(pts)
        return float(v[0]) if single else v

    def __repr__(self):
        return f"TestFunction({self.name})"

    def support_reach(self, x):
        """Largest |y| for which f(x + y) can be nonzero."""
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.center)) + self.support_radius


def hermite(n, dim=1, axis=0):
    """Probabilists' Hermite polynomial He_n of coordinate ``axis``."""
    c = np.zeros(n + 1)
    c[n] = 1.0
    d1, d2 = hermite_e.hermeder(c, 1), hermite_e.hermeder(c, 2)

    def value(x):
        return hermite_e.hermeval(x[:, axis], c)

    def gradient(x):
        g = np.zeros_like(x)
        g[:, axis] = hermite_e.hermeval(x[:, axis], d1)
        return g

    def hessian(x):
        h = np.zeros(x.shape + (dim,))
        h[:, axis, axis] = hermite_e.hermeval(x[:, axis], d2)
        return h
    return TestFunction(value, gradient, hessian, dim, name=f"hermite({n})", growth=n)


def monomial(k, dim=1, axis=0):
    """x_axis^k."""
    def value(x):
        return x[:, axis] ** k

    def gradient(x):
        g = np.zeros_like(x)
        g[:, axis] = k * x[:, axis] ** (k - 1) if k >= 1 else 0.0
        return g

    def hessian(x):
        h = np.zeros(x.shape + (dim,))
        h[:, axis, axis] = k * (k - 1) * x[:, axis] ** (k - 2) if k >= 2 else 0.0
        return h
    return TestFunction(value, gradient, hessian, dim, name=f"monomial({k})",
                        bound=1.0 if k == 0 else math.inf, growth=k)


def gaussian_bump(center, width, dim=1):
    """exp(-|x - center|^2 / (2 width^2))."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.size == 1 and dim > 1:
        c = np.full(dim, c[0])
    dim = c.size
    w2 = float(width) ** 2

    def value(x):
        return np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * w2))

    def gradient(x):
        return -(x - c) / w2 * value(x)[:, None]

    def hessian(x):
        u = x - c
        outer = u[:, :, None] * u[:, None, :] / w2**2
        return (outer - np.eye(dim) / w2) * value(x)[:, None, None]

    def fourier(k):
        # int e^{i k x} f(x) dx in one dimension
        k = np.asarray(k, dtype=float)
        return width * math.sqrt(2 * math.pi) * np.exp(1j * k * c[0] - w2 * k**2 / 2)
    # e^{-r^2/(2 w^2)} < 1e-17 for r > 8.9 w
    return TestFunction(value, gradient, hessian, dim, support_radius=8.9 * width,
                        name=f"gaussian-bump({c.tolist()},{width})", bound=1.0,
                        scale=float(width), fourier=fourier if dim == 1 else None, center=c)


def fourier_mode(z, part="cos"):
    """cos(<z, x>) or sin(<z, x>)."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    dim = z.size
    if part not in ("cos", "sin"):
        raise ValueError("part must be 'cos' or 'sin'")
    main, other = (np.cos, np.sin) if part == "cos" else (np.sin, np.cos)
    sign = -1.0 if part == "cos" else 1.0

    def value(x):
        return main(x @ z)

    def gradient(x):
        return sign * other(x @ z)[:, None] * z

    def hessian(x):
        return -main(x @ z)[:, None, None] * np.outer(z, z)
    scale = 1.0 / max(np.linalg.norm(z), 1e-12)
    return TestFunction(value, gradient, hessian, dim, name=f"fourier({z.tolist()},{part})",
                        bound=1.0, scale=min(scale, 1.0), wave=z)


def from_spec(doc, dim=1):
    """Build a test function from {kind: hermite|gaussian-bump|fourier|monomial, ...}."""
    kind = doc["kind"]
    if kind == "hermite":
        return hermite(int(doc["n"]), dim, doc.get("axis", 0))
    if kind == "monomial":
        return monomial(int(doc["k"]), dim, doc.get("axis", 0))
    if kind == "gaussian-bump":
        return gaussian_bump(doc.get("center", 0.0), doc.get("width", 1.0), dim)
    if kind == "fourier":
        return fourier_mode(doc["z"], doc.get("part", "cos"))
    raise ValueError(f"unknown test function kind {kind!r}")


def check_derivatives(f: TestFunction, points, h=1e-5):
    """Max relative mismatch between analytic and central-difference derivatives."""
    pts, _ = _points(points, f.dim)
    hh = h * max(f.scale, 1e-3)
    worst = 0.0
    for k in range(f.dim):
        e = np.zeros(f.dim)
        e[k] = hh
        fd_g = (f.value(pts + e) - f.value(pts - e)) / (2 * hh)
        fd_h = (f.gradient(pts + e) - f.gradient(pts - e)) / (2 * hh)
        g, H = f.gradient(pts)[:, k], f.hessian(pts)[:, :, k]
        worst = max(worst, float(np.max(np.abs(fd_g - g) / np.maximum(np.abs(g), 1e-3))))
        worst = max(worst, float(np.max(np.abs(fd_h - H) / np.maximum(np.abs(H), 1e-3))))
    return worst


# ---------------------------------------------------------------------------
# ground states
# ---------------------------------------------------------------------------

class GroundState(TestFunction):
    """phi = exp(-G/2) / sqrt(Z) in one dimension, so phi^2 = e^{-G}/Z.

    G is a polynomial given by ascending coefficients.
    """

    def __init__(self, coefficients, domain=(-12.0, 12.0), gaussian=None, name=None):
        G = np.polynomial.Polynomial(np.asarray(coefficients, dtype=float))
        self.G, self.dG, self.d2G = G, G.deriv(1), G.deriv(2)
        self.gaussian = gaussian
        self.domain = domain
        if gaussian is not None:
            self.Z = math.sqrt(2 * math.pi * gaussian[1] ** 2) * math.exp(G(gaussian[0]))
        else:
            self.Z = quad(lambda t: math.exp(-G(t)), *domain, epsabs=1e-15, epsrel=1e-14, limit=400)[0]
        self._c = 1.0 / math.sqrt(self.Z)

        def value(x):
            return self._c * np.exp(-0.5 * self.G(x[:, 0]))

        def gradient(x):
            return (-0.5 * self.dG(x[:, 0]) * value(x))[:, None]

        def hessian(x):
            t = x[:, 0]
            return ((0.25 * self.dG(t) ** 2 - 0.5 * self.d2G(t)) * value(x))[:, None, None]
        super().__init__(value, gradient, hessian, 1, name=name or f"ground-state({list(coefficients)})",
                         bound=float(self._c * math.exp(-0.5 * self._min_G())))

    def _min_G(self):
        crit = [r.real for r in self.dG.roots() if abs(r.imag) < 1e-12] if self.dG.degree() > 0 else []
        cands = [self.G(t) for t in crit + list(self.domain)]
        return min(cands)

    @classmethod
    def gaussian_state(cls, mean=0.0, var=1.0):
        """phi^2 = N(mean, var) density."""
        coeffs = [mean**2 / (2 * var), -mean / var, 1 / (2 * var)]
        return cls(coeffs, (mean - 40 * math.sqrt(var), mean + 40 * math.sqrt(var)),
                   gaussian=(mean, math.sqrt(var)), name=f"gaussian-ground-state({mean},{var})")

    def log_gradient(self, x):
        pts, _ = _points(x, 1)
        return -0.5 * self.dG(pts[:, 0])[:, None]

    def density(self, x):
        return np.exp(-self.G(np.asarray(x, dtype=float))) / self.Z

    def measure(self):
        """mu = phi^2 dx as a DensityMeasure."""
        if self.gaussian is not None:
            return DensityMeasure.normal(self.gaussian[0], self.gaussian[1] ** 2)
        return DensityMeasure(self.density, self.domain, "adaptive")


# ---------------------------------------------------------------------------
# generator specifications
# ---------------------------------------------------------------------------

@dataclass
class GeneratorSpec:
    """Lévy-type operator with state-dependent triplet (Q(x), m(x,y) nu(dy), l(x)).

    ``drift`` maps (n, d) states to (n, d) drifts; ``Q`` is a constant matrix
    or a callable returning (n, d, d); ``multiplier`` maps a point x (d,) and
    jumps y (k, d) to k nonnegative weights (None means m = 1).
    """

    dim: int
    drift: Callable
    Q: object
    nu: LevyMeasure
    multiplier: Callable | None = None
    truncation: str = "indicator"
    multiplier_bound: float = math.inf

    def Q_at(self, pts):
        if callable(self.Q):
            return np.asarray(self.Q(pts))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        return np.broadcast_to(Q, (pts.shape[0],) + Q.shape)

    @classmethod
    def from_triplet(cls, triplet: LevyTriplet):
        g = triplet.gamma
        return cls(triplet.dim, lambda X: np.broadcast_to(g, X.shape), triplet.Q, triplet.nu,
                   truncation=triplet.truncation)

    @classmethod
    def ou(cls, model):
        """Generator of dX = -A X dt + dL."""
        A, tri = model.A, model.noise
        return cls(tri.dim, lambda X: -X @ A.T + tri.gamma, tri.Q, tri.nu, truncation=tri.truncation)

    @classmethod
    def gradient(cls, dG, Q, nu=None, dim=1):
        """Drift -grad G; ``dG`` maps (n, d) states to (n, d) gradients."""
        return cls(dim, lambda X: -dG(X), Q, nu or ZeroMeasure(dim))

    @classmethod
    def ground_state(cls, phi: GroundState, Q, nu):
        """-H = -H_G - H_J: drift Q grad log phi and jump kernel phi(x+y)/phi(x) nu(dy)."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        return cls(1, lambda X: phi.log_gradient(X) @ Q.T, Q, nu,
                   multiplier=ratio_multiplier(phi), truncation="none")


def ratio_multiplier(phi):
    """m(x, y) = phi(x + y) / phi(x)."""
    def m(x, y):
        base = phi.value(np.atleast_2d(x))[0]
        if base < PHI_FLOOR:
            raise ValueError(f"phi(x) = {base:.3g} below the positivity floor")
        return phi.value(x[None, :] + y) / base
    return m


# ---------------------------------------------------------------------------
# jump integrals
# ---------------------------------------------------------------------------

def _tail_radius(nu, budget, start=1.0):
    """Smallest R >= start (doubling) with tail_mass(R) <= budget."""
    R = start
    while nu.tail_mass(R) > budget:
        R *= 2
        if R > 1e12:
            raise DivergentJumpIntegral("tail mass decays too slowly to truncate")
    return R


def integrate_jumps(nu, h, *, far_value=0.0, far_bound=math.inf, far_reach=math.inf,
                    scale=1.0, growth=0, far_wave=None, tol=GENERATOR_TOL):
    """int h(y) nu(dy) for h vanishing to second order at 0 after symmetrisation.

    ``h`` maps (k, d) jumps to k values.  For the radial measures the far
    field |y| > 1 uses: h(y) -> far_value at infinity with |h - far_value|
    <= far_bound, and h = far_value for |y| > far_reach.  ``far_wave`` =
    (amp, k) states h(r) + h(-r) - 2 far_value = amp cos(k r) there, which is
    integrated with an oscillatory Fourier rule instead of truncation.
    """
    if isinstance(nu, ZeroMeasure):
        return 0.0
    if isinstance(nu, AtomicMeasure):
        return float(nu.masses @ h(nu.positions))
    if nu.dim != 1:
        raise NotImplementedError("density jump quadrature is one-dimensional")
    scalar_h = lambda y: float(h(np.array([[y]]))[0])
    if isinstance(nu, CompoundPoissonMeasure):
        lo, hi = nu.mean - 12 * nu.std, nu.mean + 12 * nu.std
        pts = [p for p in (-1.0, 1.0) if lo < p < hi]
        val = quad(lambda y: scalar_h(y) * float(nu._law.pdf(y)), lo, hi, points=pts or None,
                   epsabs=tol / 10, epsrel=1e-12, limit=400)[0]
        return nu.rate * val
    if not isinstance(nu, RadialMeasure):
        raise NotImplementedError(f"jump quadrature for {nu.kind}")

    g = nu.profile

    def pair(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return h(r[:, None]) + h(-r[:, None])

    total = 0.0
    inner_hi = 1.0
    if nu.inner_cutoff < 1.0:
        # [0, delta]: two-term Taylor fit of pair(r) = k2 r^2 + k4 r^4
        delta = 1e-2
        P1 = pair(delta)[0] / delta**2
        P2 = pair(delta / 2)[0] / (delta / 2) ** 2
        k4 = (P1 - P2) / (0.75 * delta**2)
        k2 = P1 - k4 * delta**2
        total += 0.5 * (k2 * nu.truncated_moment(delta, 2) + k4 * nu.truncated_moment(delta, 4))
        total += quad(lambda r: float(pair(r)[0] * g(r)), delta, inner_hi,
                      epsabs=tol / 10, epsrel=1e-12, limit=400)[0]
    lo = max(1.0, nu.inner_cutoff)
    # far field: pair(r) -> 2 far_value
    total += far_value * nu.tail_mass(lo)
    if far_bound == 0.0:
        return total
    fun = lambda r: (pair(r) - 2 * far_value) * g(r)
    if far_wave is not None:
        amp, k = far_wave
        if amp != 0 and k == 0:
            total += 0.5 * amp * nu.tail_mass(lo)
        elif amp != 0:
            total += amp * quad(lambda r: float(g(np.array([r]))[0]), lo, math.inf, weight="cos",
                                wvar=abs(k), epsabs=tol / 10, limlst=200)[0]
        return total
    if not np.isfinite(far_bound) and not np.isfinite(far_reach):
        if isinstance(nu, StableMeasure) and growth >= nu.alpha:
            raise DivergentJumpIntegral(f"test function of growth {growth} against "
                                        f"stable index {nu.alpha}")
        total += quad(lambda r: float(fun(r)[0]), lo, math.inf, epsabs=tol / 10, epsrel=1e-12,
                      limit=1000)[0]
        return total
    R = _tail_radius(nu, tol / max(far_bound, 1e-300), lo) if np.isfinite(far_bound) else math.inf
    R = min(R, max(far_reach, lo))
    if R > lo:
        width = min(0.5, 0.25 * scale)
        if R - lo < 200:
            total += quad(lambda r: float(fun(r)[0]), lo, R, epsabs=tol / 10, epsrel=1e-12, limit=1000)[0]
        else:
            total += composite_gauss_legendre(fun, lo, R, width)
    return total


def _jump_term(spec: GeneratorSpec, f: TestFunction, x, tol=GENERATOR_TOL):
    nu = spec.nu
    if isinstance(nu, ZeroMeasure):
        return 0.0
    x = np.asarray(x, dtype=float)
    fx = float(f.value(x[None, :])[0])
    gx = f.gradient(x[None, :])[0]
    mult = spec.multiplier
    trunc = spec.truncation

    def h(y):
        r = np.linalg.norm(y, axis=1)
        vals = f.value(x[None, :] + y) - fx - (y @ gx) * truncation_weight(trunc, r)
        return vals * mult(x, y) if mult is not None else vals

    if mult is None:
        far_value = -fx
        far_bound = f.bound
    else:
        far_value = 0.0
        far_bound = (f.bound + abs(fx)) * spec.multiplier_bound
    if trunc != "indicator" and not nu.symmetric:
        far_bound = math.inf
    far_wave = None
    if mult is None and f.wave is not None and f.dim == 1 and nu.symmetric:
        far_wave = (2 * fx, float(np.asarray(f.wave).ravel()[0]))
    return integrate_jumps(nu, h, far_value=far_value, far_bound=far_bound,
                           far_reach=f.support_reach(x) if mult is None else math.inf,
                           scale=f.scale, growth=f.growth, far_wave=far_wave, tol=tol)


def apply_generator(spec: GeneratorSpec, f: TestFunction, x, tol=GENERATOR_TOL):
    """A f at x (a point or an (n, d) array of points)."""
    pts, single = _points(x, spec.dim)
    grad = f.gradient(pts)
    hess = f.hessian(pts)
    local = np.einsum("nd,nd->n", spec.drift(pts), grad)
    local += 0.5 * np.einsum("nij,nji->n", spec.Q_at(pts), hess)
    if not isinstance(spec.nu, ZeroMeasure):
        local = local + np.array([_jump_term(spec, f, p, tol) for p in pts])
    return float(local[0]) if single else local


def symbol(Psi, Phi, noise_eta, x, xi):
    """p(x, xi) = -eta(Phi(x)^T xi) - i <Psi(x), xi>.

    ``Psi`` and ``Phi`` are callables of x (d,) or constants; ``noise_eta``
    is a LevyTriplet or a callable z -> eta(z).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    psi = np.atleast_1d(Psi(x) if callable(Psi) else np.asarray(Psi, dtype=float))
    phi = np.atleast_2d(Phi(x) if callable(Phi) else np.asarray(Phi, dtype=float))
    if phi.shape == (1, 1) and xi.size > 1:
        phi = phi[0, 0] * np.eye(xi.size)
    w = phi.T @ xi
    eta = char_exponent(noise_eta, w) if isinstance(noise_eta, LevyTriplet) else complex(noise_eta(w))
    return complex(-eta - 1j * (psi @ xi))


def apply_HG(phi: GroundState, Q, f: TestFunction, x):
    """-H_G f = 1/2 Tr(Q hess f) + <Q grad log phi, grad f>."""
    pts, single = _points(x, f.dim)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    beta = phi.log_gradient(pts) @ Q.T
    val = 0.5 * np.einsum("ij,nji->n", Q, f.hessian(pts)) + np.einsum("nd,nd->n", beta, f.gradient(pts))
    return float(val[0]) if single else val


def apply_HJ(phi: GroundState, nu, f: TestFunction, x, tol=GENERATOR_TOL, multiplier=None):
    """-H_J f = int (f(x+y) - f(x)) phi(x+y)/phi(x) nu(dy).

    ``multiplier`` replaces the ratio kernel (used for negative controls).
    """
    pts, single = _points(x, f.dim)
    spec = GeneratorSpec(f.dim, lambda X: np.zeros_like(X), np.zeros((f.dim, f.dim)), nu,
                         multiplier=multiplier or ratio_multiplier(phi), truncation="none",
                         multiplier_bound=getattr(phi, "ratio_bound", math.inf))
    val = np.array([_jump_term(spec, f, p, tol) for p in pts])
    return float(val[0]) if single else val


def _measure_of(mu):
    if isinstance(mu, DensityMeasure):
        return mu
    if hasattr(mu, "measure") and callable(mu.measure):
        return mu.measure()
    if hasattr(mu, "density_measure"):
        return mu.density_measure
    raise TypeError("expected a DensityMeasure or an object providing one")


def dirichlet_energy_G(f: TestFunction, g: TestFunction, mu_density, Q):
    """E_G(f, g) = 1/2 int <grad f, Q grad g> dmu."""
    mu = _measure_of(mu_density)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    return 0.5 * mu.integrate(lambda X: np.einsum("nd,de,ne->n", f.gradient(X), Q, g.gradient(X)))


def dirichlet_energy_J(f: TestFunction, g: TestFunction, phi: GroundState, nu, mu=None,
                       tol=GENERATOR_TOL):
    """E_J(f, g) = 1/2 int int (f(x+y)-f(x)) (g(x+y)-g(x)) phi(x+y) phi(x) nu(dy) dx.

    Written as 1/2 int [int delta_y f delta_y g phi(x+y)/phi(x) nu(dy)] phi(x)^2 dx.
    """
    mu = _measure_of(mu if mu is not None else phi)
    ratio = ratio_multiplier(phi)

    def inner(X):
        out = np.empty(X.shape[0])
        for i, x in enumerate(X):
            fx, gx = f.value(x[None, :])[0], g.value(x[None, :])[0]
            h = lambda y: (f.value(x + y) - fx) * (g.value(x + y) - gx) * ratio(x, y)
            out[i] = integrate_jumps(nu, h, far_bound=math.inf, tol=tol)
        return out
    return 0.5 * mu.integrate(inner)


def potential_V(phi: GroundState, nu, Q, x, E, tol=GENERATOR_TOL):
    """V^E(x) = (L_0 phi)(x) / phi(x) + E with L_0 = 1/2 Tr(Q hess) + jump part of nu."""
    pts, single = _points(x, phi.dim)
    base = phi.value(pts)
    if np.any(base < PHI_FLOOR):
        raise ValueError("phi below the positivity floor")
    d = phi.dim
    L0 = GeneratorSpec(d, lambda X: np.zeros_like(X), np.atleast_2d(np.asarray(Q, dtype=float)), nu)
    val = apply_generator(L0, phi, pts, tol) / base + E
    return float(val[0]) if single else val


def eigen_residual(phi: GroundState, nu, Q, x, E, tol=GENERATOR_TOL):
    """(-L_0 + V^E) phi - E phi at x; zero by construction of V^E."""
    pts, single = _points(x, phi.dim)
    d = phi.dim
    L0 = GeneratorSpec(d, lambda X: np.zeros_like(X), np.atleast_2d(np.asarray(Q, dtype=float)), nu)
    base = phi.value(pts)
    val = -apply_generator(L0, phi, pts, tol) + potential_V(phi, nu, Q, pts, E, tol) * base - E * base
    return float(val[0]) if single else val
