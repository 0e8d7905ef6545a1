"""Seeded simulation of Lévy increments, OU-Lévy paths, nonlinear SDEs and
ground-state-transformed jump diffusions.

Increments follow the Lévy-Itô split: drift, Brownian part, compound Poisson
jumps of size >= eps (compensated inside the unit ball) and optionally a
Gaussian stand-in for the jumps below eps.

Random streams are counter based (Philox).  Paths are grouped in fixed blocks
of ``PATH_BLOCK`` consecutive indices and every block owns one stream keyed by
(seed, stream id, block index), so results do not depend on how blocks are
scheduled.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import integrate, linalg

from .levy_core import AtomicMeasure, LevyTriplet, convert_truncation

PATH_BLOCK = 4096
DEFAULT_JUMP_CAP = 1e6
DEFAULT_EXPLOSION_RADIUS = 1e6


class EpsilonTooSmall(ValueError):
    """Expected number of explicit jumps per step exceeds the configured cap."""


class MajorantViolation(RuntimeError):
    """A thinning acceptance probability exceeded one."""


@dataclass(frozen=True)
class SimScheme:
    kind: str = "exponential-euler"
    dt: float = 0.01
    eps: float | None = None
    gauss_approx: bool | None = None
    jump_cap: float = DEFAULT_JUMP_CAP
    explosion_radius: float = DEFAULT_EXPLOSION_RADIUS

    def __post_init__(self):
        if self.kind not in ("exponential-euler", "euler-maruyama"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")

    def resolved(self, triplet: LevyTriplet) -> "SimScheme":
        """Fill in eps and gauss_approx from the default rules for this noise."""
        nu = triplet.nu
        eps, gauss = self.eps, self.gauss_approx
        if eps is None:
            eps = default_eps(triplet)
        if gauss is None:
            gauss = (not nu.finite_activity) and getattr(nu, "small_index", 0.0) > 1.0
        return replace(self, eps=float(eps), gauss_approx=bool(gauss))

    def to_dict(self):
        return asdict(self)


def default_eps(triplet: LevyTriplet):
    """Largest eps in {1, 1/2, 1/4, ...} with int_{|y|<eps}|y|^2 nu < 0.01 (tr Q + 1)."""
    nu = triplet.nu
    if nu.finite_activity:
        return 1.0
    bound = 0.01 * (np.trace(triplet.Q) + 1.0)
    eps = 1.0
    while nu.truncated_second_moment(eps) >= bound:
        eps /= 2
    return eps


def block_rngs(seed, n_paths, stream=()):
    """One Philox generator per block of PATH_BLOCK paths."""
    n_blocks = max(1, math.ceil(n_paths / PATH_BLOCK))
    for b in range(n_blocks):
        ss = np.random.SeedSequence(int(seed), spawn_key=tuple(stream) + (b,))
        lo = b * PATH_BLOCK
        yield np.random.Generator(np.random.Philox(ss)), lo, min(n_paths, lo + PATH_BLOCK)


def _psd_sqrt(M):
    w, V = np.linalg.eigh(M)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


class IncrementSampler:
    """Vectorised draws of L(t + dt) - L(t) for a fixed triplet and scheme."""

    def __init__(self, triplet: LevyTriplet, dt, scheme: SimScheme, A=None):
        tri = convert_truncation(triplet, "indicator")
        scheme = scheme.resolved(tri)
        self.triplet, self.scheme, self.dt = tri, scheme, float(dt)
        nu, eps, d = tri.nu, scheme.eps, tri.dim
        self.dim = d
        self.rate = nu.jump_rate(eps)
        if self.rate * dt > scheme.jump_cap:
            raise EpsilonTooSmall(f"expected {self.rate * dt:.3g} jumps per step exceeds cap "
                                  f"{scheme.jump_cap:.3g}; increase eps")
        if nu.finite_activity:
            comp = nu.ball_first_moment(0.0, 1.0)
            small_cov = np.zeros((d, d))
        else:
            comp = nu.ball_first_moment(eps, 1.0)
            small_cov = nu.second_moment_matrix(eps) if scheme.gauss_approx else np.zeros((d, d))
        cov = tri.Q + small_cov
        if A is None:
            self.drift = (tri.gamma - comp) * dt
            self.root = _psd_sqrt(cov * dt)
        else:
            # drift and Gaussian parts convolved with e^{-As} exactly over the step
            A = np.atleast_2d(A)
            E = lambda s: linalg.expm(-s * A)
            M = integrate.quad_vec(E, 0.0, dt, epsabs=1e-14, epsrel=1e-12)[0]
            C = integrate.quad_vec(lambda s: E(s) @ cov @ E(s).T, 0.0, dt, epsabs=1e-14,
                                   epsrel=1e-12)[0]
            self.drift = M @ (tri.gamma - comp)
            self.root = _psd_sqrt(0.5 * (C + C.T))
        self.gaussian = bool(np.any(self.root))

    def jump_counts(self, rng, n):
        """Number of explicit jumps (|y| >= eps) in each of n steps."""
        return rng.poisson(self.rate * self.dt, n)

    def draw(self, rng, n):
        out = np.broadcast_to(self.drift, (n, self.dim)).copy()
        if self.gaussian:
            out += rng.standard_normal((n, self.dim)) @ self.root.T
        if self.rate > 0:
            counts = self.jump_counts(rng, n)
            total = int(counts.sum())
            if total:
                jumps = self.triplet.nu.sample_jumps(rng, total, self.scheme.eps)
                owner = np.repeat(np.arange(n), counts)
                for k in range(self.dim):
                    out[:, k] += np.bincount(owner, weights=jumps[:, k], minlength=n)
        return out


def sample_increment(triplet: LevyTriplet, dt, scheme: SimScheme, rng):
    """A single increment of the Lévy process over a step dt."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return IncrementSampler(triplet, dt, scheme).draw(rng, 1)[0]


@dataclass
class SampleEnsemble:
    model: dict
    T: float
    states: np.ndarray
    seed: int
    scheme: dict
    n_exploded: int = 0
    exploded_ids: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.states.shape[0]

    def summary(self):
        mean = self.states.mean(axis=0)
        cov = np.atleast_2d(np.cov(self.states.T, ddof=1)) if self.n > 1 else np.zeros((1, 1))
        return {"n": self.n, "mean": mean.tolist(), "cov": cov.tolist(),
                "n_exploded": self.n_exploded}

    def sidecar(self):
        return {"model": self.model, "T": self.T, "seed": self.seed, "scheme": self.scheme,
                "summary": self.summary()}

    def write_csv(self, path):
        d = self.states.shape[1]
        ids = [i for i in range(self.n + self.n_exploded) if i not in set(self.exploded_ids)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path_id"] + [f"x{k + 1}" for k in range(d)])
            for i, row in zip(ids, self.states):
                w.writerow([i] + [format_number(v) for v in row])

    def write(self, csv_path, json_path=None, provenance=None):
        self.write_csv(csv_path)
        doc = self.sidecar()
        if provenance:
            doc.update(provenance)
        with open(json_path or str(csv_path) + ".json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)


def format_number(v):
    """17 significant digits in scientific notation, round-trippable."""
    return format(float(v), ".16e")


def _time_grid(T, dt):
    if T < 0:
        raise ValueError("T must be nonnegative")
    if T == 0:
        return []
    n = max(1, math.ceil(T / dt - 1e-9))
    steps = [dt] * (n - 1)
    steps.append(T - dt * (n - 1))
    return steps


def _run_linear(step, triplet, x0, T, scheme, n_paths, seed, stream=(), A=None):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = triplet.dim
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if x0.shape == (n_paths,) and d == 1 and n_paths > 1:
        x0 = x0[:, None]
    if x0.shape != (d,) and x0.shape != (n_paths, d):
        raise ValueError(f"x0 must have shape ({d},) or ({n_paths}, {d})")
    steps = _time_grid(T, scheme.dt)
    samplers = {h: IncrementSampler(triplet, h, scheme, A) for h in set(steps)}
    radius = scheme.explosion_radius
    states = np.empty((n_paths, d))
    alive_all = np.ones(n_paths, dtype=bool)
    for rng, lo, hi in block_rngs(seed, n_paths, stream):
        X = np.tile(x0, (hi - lo, 1)) if x0.ndim == 1 else x0[lo:hi].copy()
        alive = np.ones(hi - lo, dtype=bool)
        for h in steps:
            dL = samplers[h].draw(rng, hi - lo)
            X = step(X, h, dL)
            out = ~(np.abs(X) < radius).all(axis=1)
            if out.any():
                alive &= ~out
                X[out] = np.nan
        states[lo:hi] = X
        alive_all[lo:hi] = alive
    return states, alive_all


def _ensemble(model_doc, T, states, alive, seed, scheme, triplet, extra=None):
    ids = np.flatnonzero(~alive).tolist()
    res = scheme.resolved(convert_truncation(triplet, "indicator")) if triplet is not None else scheme
    return SampleEnsemble(model_doc, float(T), states[alive], int(seed), res.to_dict(),
                          len(ids), ids, extra or {})


def simulate_ou(model, x0, T, scheme: SimScheme, n_paths, seed, stream=()):
    """Terminal states X(T) of dX = -A X dt + dL.

    ``x0`` is one start point or an (n_paths, d) array of per-path starts.

    exponential-euler: X <- e^{-A dt} X + dL, where the drift and Gaussian
    parts of dL are integrated against e^{-A(dt - s)} exactly and the jumps
    enter at the end of the step;  euler-maruyama: X <- X - A X dt + dL.
    """
    A = model.A
    if scheme.kind == "exponential-euler":
        props = {}

        def step(X, h, dL):
            if h not in props:
                props[h] = linalg.expm(-h * A).T
            return X @ props[h] + dL
    else:
        negA = -A

        def step(X, h, dL):
            return X + (X @ negA.T) * h + dL
    conv = A if scheme.kind == "exponential-euler" else None
    states, alive = _run_linear(step, model.noise, x0, T, scheme, n_paths, seed, stream, conv)
    return _ensemble(model.to_dict(), T, states, alive, seed, scheme, model.noise)


def simulate_nonlinear(A, beta, noise: LevyTriplet, x0, T, scheme: SimScheme, n_paths, seed,
                       stream=(), model_doc=None):
    """Euler scheme X <- X + (A X + beta(X)) dt + dL.

    ``beta`` maps an (n, d) array of states to an (n, d) array of drifts.
    Paths whose state leaves the explosion radius are excluded and counted.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    beta = beta if beta is not None else (lambda X: np.zeros_like(X))

    def step(X, h, dL):
        return X + (X @ A.T + beta(X)) * h + dL
    states, alive = _run_linear(step, noise, x0, T, scheme, n_paths, seed, stream)
    doc = model_doc or {"A": A.tolist(), "noise": noise.to_dict(), "beta": getattr(beta, "__name__", "callable")}
    return _ensemble(doc, T, states, alive, seed, scheme, noise)


# ---------------------------------------------------------------------------
# ground-state transformed processes
# ---------------------------------------------------------------------------

@dataclass
class GroundStateProcessSpec:
    """Diffusion with drift Q grad log phi plus jumps with kernel phi(x+y)/phi(x) nu(dy).

    ``phi`` needs vectorised ``value`` and ``gradient`` over (n, d) arrays.
    ``ratio_majorant`` is either a constant or, for atomic nu, an array with one
    bound per atom; it must dominate phi(x+y)/phi(x) on the visited region.
    """

    phi: object
    Q: np.ndarray
    nu: object
    ratio_majorant: object = 1.0

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if not self.nu.finite_activity:
            raise ValueError("ground-state simulation needs a finite-activity measure")

    def proposal(self):
        """(total proposal rate, sampler of proposed jumps, bound evaluator)."""
        nu = self.nu
        if isinstance(nu, AtomicMeasure):
            r = np.broadcast_to(np.asarray(self.ratio_majorant, dtype=float), nu.masses.shape).copy()
            w = r * nu.masses
            lam = float(w.sum())
            probs = w / lam

            def draw(rng, n):
                idx = rng.choice(nu.masses.size, size=n, p=probs)
                return nu.positions[idx], r[idx]
            return lam, draw
        r = float(self.ratio_majorant)
        lam = r * nu.total_mass()

        def draw(rng, n):
            return nu.sample_jumps(rng, n, 0.0), np.full(n, r)
        return lam, draw


def grid_ratio_majorant(phi, nu: AtomicMeasure, grid, safety=1e-9):
    """max over grid points x of phi(x+y)/phi(x), one value per atom."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    base = phi.value(grid)
    out = [float(np.max(phi.value(grid + y) / base)) for y in nu.positions]
    return np.maximum(np.array(out), 1.0) * (1 + safety)


def simulate_groundstate(spec: GroundStateProcessSpec, x0, T, n_paths, seed, scheme=None,
                         record_jumps=False, stream=()):
    """Euler-Maruyama for dX = Q grad log phi(X) dt + sqrt(Q) dW between jumps;
    jumps by thinning of a Poisson clock with rate Lambda = int r dnu."""
    scheme = scheme or SimScheme(kind="euler-maruyama")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    Q = spec.Q
    root = _psd_sqrt(Q)
    lam, draw = spec.proposal()
    steps = _time_grid(T, scheme.dt)
    states = np.empty((n_paths, d))
    times, owners = [], []
    n_prop = n_acc = 0
    for rng, lo, hi in block_rngs(seed, n_paths, stream):
        n = hi - lo
        X = np.tile(x0, (n, 1))
        clock = rng.exponential(1.0 / lam, n) if lam > 0 else np.full(n, np.inf)
        t = 0.0
        for h in steps:
            grad = spec.phi.gradient(X) / spec.phi.value(X)[:, None]
            X = X + (grad @ Q.T) * h + rng.standard_normal((n, d)) @ root.T * math.sqrt(h)
            t_end = t + h
            while True:
                due = np.flatnonzero(clock < t_end)
                if due.size == 0:
                    break
                y, bound = draw(rng, due.size)
                xs = X[due]
                ratio = spec.phi.value(xs + y) / spec.phi.value(xs)
                acc_prob = ratio / bound
                if np.any(acc_prob > 1 + 1e-12):
                    k = int(np.argmax(acc_prob))
                    raise MajorantViolation(
                        f"acceptance probability {acc_prob[k]:.6g} > 1 at x={xs[k].tolist()}, "
                        f"y={y[k].tolist()}; enlarge ratio_majorant")
                ok = rng.random(due.size) < acc_prob
                X[due[ok]] = xs[ok] + y[ok]
                n_prop += due.size
                n_acc += int(ok.sum())
                if record_jumps and ok.any():
                    times.append(clock[due[ok]])
                    owners.append(due[ok] + lo)
                clock[due] += rng.exponential(1.0 / lam, due.size)
            t = t_end
        states[lo:hi] = X
    extra = {"proposals": n_prop, "accepted": n_acc, "proposal_rate": lam}
    if record_jumps:
        extra["jump_times"] = np.concatenate(times) if times else np.empty(0)
        extra["jump_paths"] = np.concatenate(owners) if owners else np.empty(0, dtype=int)
    doc = {"kind": "ground-state", "Q": Q.tolist(), "nu": spec.nu.to_dict(),
           "phi": getattr(spec.phi, "name", "phi")}
    return SampleEnsemble(doc, float(T), states, int(seed), scheme.to_dict(), 0, [], extra)
