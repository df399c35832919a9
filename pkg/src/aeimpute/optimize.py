"""Box-constrained minimizers: real-coded GA, global-best PSO and projected gradient descent.

All three take an :class:`ObjectiveHandle` and a config carrying its own
seed, and return an :class:`OptResult`.  Every candidate they evaluate lies
inside the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, UnsupportedObjectiveError


@dataclass
class ObjectiveHandle:
    """A real objective over a box.

    ``batch`` optionally evaluates a ``(k, m)`` stack of candidates in one call;
    it must agree with ``func`` row by row.
    """

    func: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ConfigError("lower and upper bounds must be vectors of equal length")

    @classmethod
    def unit_box(cls, func, arity, gradient=None, batch=None):
        return cls(func, np.zeros(arity), np.ones(arity), gradient, batch)

    @property
    def arity(self) -> int:
        return self.lower.shape[0]

    def __call__(self, u) -> float:
        return float(self.func(np.asarray(u, dtype=float)))

    def evaluate_many(self, U: np.ndarray) -> np.ndarray:
        if self.batch is not None:
            return np.asarray(self.batch(U), dtype=float)
        return np.array([float(self.func(u)) for u in U])

    def check(self):
        if self.arity < 1:
            raise ConfigError("objective must have at least one variable")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ConfigError("search box must have finite bounds")
        if np.any(self.lower > self.upper):
            raise ConfigError("lower bound exceeds upper bound")


@dataclass
class OptResult:
    x_star: np.ndarray
    f_star: float
    evaluations: int
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


@dataclass
class GAConfig:
    population: int = 50
    generations: int = 100
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    blend_alpha: float = 0.5
    mutation_sigma: float = 0.1  # fraction of box width
    elitism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.population < 1 or self.generations < 1:
            raise ConfigError("population and generations must be positive")
        if self.tournament_size < 2:
            raise ConfigError("tournament_size must be at least 2")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ConfigError("crossover_rate and mutation_rate must lie in [0, 1]")
        if self.blend_alpha <= 0 or self.mutation_sigma <= 0:
            raise ConfigError("blend_alpha and mutation_sigma must be positive")
        if not 1 <= self.elitism < self.population:
            raise ConfigError("elitism must satisfy 1 <= elitism < population")


@dataclass
class PSOConfig:
    swarm: int = 30
    iterations: int = 200
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    velocity_clamp: float = 0.5  # fraction of box width
    seed: int = 0

    def __post_init__(self):
        if self.swarm < 1 or self.iterations < 1:
            raise ConfigError("swarm and iterations must be positive")
        if not 0.0 < self.inertia < 1.0:
            raise ConfigError("inertia must lie in (0, 1)")
        if self.cognitive < 0 or self.social < 0:
            raise ConfigError("cognitive and social coefficients must be non-negative")
        if not 0.0 < self.velocity_clamp <= 1.0:
            raise ConfigError("velocity_clamp must lie in (0, 1]")


@dataclass
class GDConfig:
    step: float = 0.1
    max_iters: int = 500
    grad_tol: float = 1e-6
    seed: int = 0
    start: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.step <= 0 or self.max_iters < 1 or self.grad_tol <= 0:
            raise ConfigError("step, max_iters and grad_tol must be positive")


def _stagnated(history, tol=1e-12):
    # no improvement over the final tenth of the run
    tail = max(1, len(history) // 10)
    if len(history) <= tail:
        return False
    return history[-tail - 1] - history[-1] <= tol * max(1.0, abs(history[-1]))


def ga_minimize(obj: ObjectiveHandle, cfg: Optional[GAConfig] = None) -> OptResult:
    """Real-coded genetic algorithm.

    Tournament selection, BLX-alpha crossover, Gaussian mutation clipped to the
    box, and elitism.  ``history[g]`` is the best objective after generation
    ``g`` (entry 0 is the initial population); ``converged`` reports that the
    best value stopped improving over the last tenth of the generations.
    """
    cfg = cfg or GAConfig()
    obj.check()
    rng = np.random.default_rng(cfg.seed)
    lo, hi = obj.lower, obj.upper
    width = hi - lo
    m, P, E = obj.arity, cfg.population, cfg.elitism
    n_child = P - E

    pop = rng.uniform(lo, hi, size=(P, m))
    fit = obj.evaluate_many(pop)
    evals = P
    best = int(np.argmin(fit))
    best_x, best_f = pop[best].copy(), float(fit[best])
    history = [best_f]

    for _ in range(cfg.generations):
        ranked = np.argsort(fit, kind="stable")
        elite_x, elite_f = pop[ranked[:E]], fit[ranked[:E]]

        entrants = rng.integers(P, size=(n_child, 2, cfg.tournament_size))
        winners = np.take_along_axis(entrants, np.argmin(fit[entrants], axis=-1)[..., None], axis=-1)[..., 0]
        p1, p2 = pop[winners[:, 0]], pop[winners[:, 1]]

        low, high = np.minimum(p1, p2), np.maximum(p1, p2)
        spread = cfg.blend_alpha * (high - low)
        blended = rng.uniform(low - spread, high + spread)
        cross = rng.random(n_child) < cfg.crossover_rate
        children = np.where(cross[:, None], blended, p1)

        mutate = rng.random((n_child, m)) < cfg.mutation_rate
        noise = rng.normal(0.0, 1.0, size=(n_child, m)) * (cfg.mutation_sigma * width)
        children = np.clip(children + mutate * noise, lo, hi)

        child_f = obj.evaluate_many(children)
        evals += n_child
        pop = np.vstack([elite_x, children])
        fit = np.concatenate([elite_f, child_f])
        i = int(np.argmin(fit))
        if fit[i] < best_f:
            best_x, best_f = pop[i].copy(), float(fit[i])
        history.append(best_f)

    return OptResult(best_x, best_f, evals, cfg.generations, _stagnated(history), history)


def pso_minimize(obj: ObjectiveHandle, cfg: Optional[PSOConfig] = None) -> OptResult:
    """Global-best particle swarm with inertia, clipped positions and clamped velocities.

    Velocities start at zero.
    """
    cfg = cfg or PSOConfig()
    obj.check()
    rng = np.random.default_rng(cfg.seed)
    lo, hi = obj.lower, obj.upper
    vmax = cfg.velocity_clamp * (hi - lo)
    S, m = cfg.swarm, obj.arity

    x = rng.uniform(lo, hi, size=(S, m))
    v = np.zeros((S, m))
    f = obj.evaluate_many(x)
    evals = S
    pbest, pbest_f = x.copy(), f.copy()
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
    history = [gbest_f]

    for _ in range(cfg.iterations):
        r1 = rng.random((S, m))
        r2 = rng.random((S, m))
        v = cfg.inertia * v + cfg.cognitive * r1 * (pbest - x) + cfg.social * r2 * (gbest - x)
        v = np.clip(v, -vmax, vmax)
        x = np.clip(x + v, lo, hi)
        f = obj.evaluate_many(x)
        evals += S
        better = f < pbest_f
        pbest[better] = x[better]
        pbest_f[better] = f[better]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
        history.append(gbest_f)

    return OptResult(gbest, gbest_f, evals, cfg.iterations, _stagnated(history), history)


def _projected_gradient(x, g, lo, hi):
    pg = g.copy()
    pg[(x <= lo) & (g > 0)] = 0.0
    pg[(x >= hi) & (g < 0)] = 0.0
    return pg


def mle_minimize(obj: ObjectiveHandle, cfg: Optional[GDConfig] = None) -> OptResult:
    """Projected gradient descent on a differentiable objective.

    Stops when the projected gradient norm drops to ``cfg.grad_tol``
    (``converged=True``) or after ``cfg.max_iters`` steps.
    """
    cfg = cfg or GDConfig()
    obj.check()
    if obj.gradient is None:
        raise UnsupportedObjectiveError("gradient descent needs an objective with a gradient")
    lo, hi = obj.lower, obj.upper
    if cfg.start is not None:
        x = np.clip(np.atleast_1d(np.asarray(cfg.start, dtype=float)), lo, hi)
        if x.shape != lo.shape:
            raise ConfigError("start point has the wrong length")
    else:
        x = np.random.default_rng(cfg.seed).uniform(lo, hi)

    converged = False
    it = 0
    while True:
        g = np.asarray(obj.gradient(x), dtype=float)
        if np.linalg.norm(_projected_gradient(x, g, lo, hi)) <= cfg.grad_tol:
            converged = True
            break
        if it == cfg.max_iters:
            break
        x = np.clip(x - cfg.step * g, lo, hi)
        it += 1

    f = obj(x)
    return OptResult(x, f, 1, it, converged, [f])
