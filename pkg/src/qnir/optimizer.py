"""Global optimisation of the reset-noise vector.

Two optimisers share one interface, ``optimizer(cost, m, settings, x0=None)``,
and return an :class:`OptimizationResult`.  An *outer iteration* is one
annealing restart cycle (dual annealing) or one batch of generations
(evolution strategy); ``history[0]`` is the cost at random initialisation
and ``history[k]`` the best cost after outer iteration ``k``.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

log = logging.getLogger(__name__)

SMALL_CHANGES = "small-MSE-changes"
STAGNATION = "stagnation-time"
MAX_ITERATIONS = "max-iterations"
BUDGET = "budget-exhausted"


def random_init(m: int, seed=None) -> np.ndarray:
    """i.i.d. U(0, 1) starting probabilities."""
    if m < 1:
        raise ValueError("need at least one parameter")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.random(m)


@dataclass
class StopSettings:
    max_iterations: int = 5
    patience: int = 3
    rel_tol: float = 1e-3
    stagnation_seconds: Optional[float] = None


def check_stop(
    history: Sequence[float], settings: StopSettings, seconds_since_improvement: float = 0.0
) -> Optional[str]:
    """Return the reason to stop after the latest outer iteration, or None."""
    if not history:
        raise ValueError("history is empty")
    if len(history) >= settings.max_iterations:
        return MAX_ITERATIONS
    k = settings.patience
    if len(history) > k:
        tail = np.asarray(history[-(k + 1) :], dtype=float)
        prev = np.abs(tail[:-1])
        rel = np.abs(np.diff(tail)) / np.where(prev > 0, prev, 1.0)
        if np.all(rel < settings.rel_tol):
            return SMALL_CHANGES
    if settings.stagnation_seconds is not None and seconds_since_improvement > settings.stagnation_seconds:
        return STAGNATION
    return None


@dataclass
class OptimizationResult:
    best_p: np.ndarray
    best_cost: float
    history: list[float]
    n_evals: int
    stop_reason: Optional[str]
    eval_costs: list[float] = field(default_factory=list, repr=False)

    def improvement_orders(self) -> float:
        return float(np.log10(self.history[0] / self.best_cost))

    def history_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "best_mse"])
            for i, c in enumerate(self.history):
                w.writerow([i, repr(float(c))])

    def to_dict(self) -> dict:
        return {
            "best_p": [float(v) for v in self.best_p],
            "best_cost": float(self.best_cost),
            "history": [float(c) for c in self.history],
            "n_evals": self.n_evals,
            "stop_reason": self.stop_reason,
        }


class _BudgetExhausted(Exception):
    pass


class _Tracker:
    """Counts evaluations, rejects non-finite costs and remembers the incumbent."""

    def __init__(self, cost: Callable[[np.ndarray], float], log_energy: bool, workers: int = 1):
        self.cost = cost
        self.log_energy = log_energy
        self.workers = workers
        self.n_evals = 0
        self.limit = math.inf
        self.best_p: Optional[np.ndarray] = None
        self.best_cost = math.inf
        self.eval_costs: list[float] = []
        self.last_improvement = time.monotonic()

    def _record(self, p: np.ndarray, c: float) -> float:
        self.n_evals += 1
        c = float(c)
        if not math.isfinite(c) or c < 0:
            log.warning("rejecting candidate with non-finite cost %r", c)
            c = math.inf
        self.eval_costs.append(c)
        if c < self.best_cost:
            self.best_cost, self.best_p = c, p.copy()
            self.last_improvement = time.monotonic()
        return c

    def energy(self, c: float) -> float:
        if not self.log_energy:
            return c
        return math.log10(c) if 0 < c < math.inf else (-math.inf if c == 0 else math.inf)

    def __call__(self, p: np.ndarray) -> float:
        if self.n_evals >= self.limit:
            raise _BudgetExhausted
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        return self._record(p, _safe_cost(self.cost, p))

    def many(self, P: np.ndarray) -> np.ndarray:
        P = np.clip(P, 0.0, 1.0)
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as ex:
                raw = list(ex.map(lambda p: _safe_cost(self.cost, p), P))
        else:
            raw = [_safe_cost(self.cost, p) for p in P]
        return np.array([self._record(p, c) for p, c in zip(P, raw)])


def _safe_cost(cost, p) -> float:
    try:
        return float(cost(p))
    except (FloatingPointError, ValueError, np.linalg.LinAlgError) as err:
        log.warning("cost evaluation failed: %s", err)
        return math.inf


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("QNIR_THREADS", "1")))
    except ValueError:
        return 1


def _reflect(x: np.ndarray) -> np.ndarray:
    """Fold values back into [0, 1] by mirror reflection at the bounds."""
    y = np.mod(x, 2.0)
    return np.where(y > 1.0, 2.0 - y, y)


# --- generalised simulated annealing ------------------------------------------


@dataclass
class AnnealSettings:
    visit: float = 2.62
    accept: float = -5.0
    initial_temp: float = 5230.0
    local_search: bool = True
    local_fraction: float = 0.6
    evals_per_iteration: int = 200
    log_energy: bool = True
    seed: Optional[int] = 0
    stop: StopSettings = field(default_factory=StopSettings)


class VisitingDistribution:
    """Heavy-tailed Tsallis visiting distribution with shape ``q_v`` in (1, 3)."""

    TAIL_LIMIT = 1e8

    def __init__(self, qv: float, rng: np.random.Generator):
        if not 1.0 < qv < 3.0:
            raise ValueError("visiting parameter must lie in (1, 3)")
        self.qv = qv
        self.rng = rng
        f1 = 4.0 - qv
        self._f2 = math.exp(f1 * math.log(qv - 1.0))
        self._f3 = math.exp((2.0 - qv) * math.log(2.0) / (qv - 1.0))
        f5 = 1.0 / (qv - 1.0) - 0.5
        d1 = 2.0 - f5
        self._f6 = math.pi * (1.0 - f5) / math.sin(math.pi * (1.0 - f5)) / math.exp(gammaln(d1))

    def sample(self, temperature: float, size: int) -> np.ndarray:
        qv = self.qv
        f1 = math.exp(math.log(temperature) / (qv - 1.0))
        f4 = math.sqrt(math.pi) * f1 * self._f2 / (self._f3 * (3.0 - qv))
        sigma = math.exp(-(qv - 1.0) * math.log(self._f6 / f4) / (3.0 - qv))
        x = sigma * self.rng.standard_normal(size)
        y = self.rng.standard_normal(size)
        den = np.exp((qv - 1.0) * np.log(np.abs(y)) / (3.0 - qv))
        return np.clip(x / den, -self.TAIL_LIMIT, self.TAIL_LIMIT)


def _visit_temperature(t0: float, qv: float, step: int) -> float:
    # generalised schedule T(k) = T0 (2^(qv-1) - 1) / ((1 + k)^(qv-1) - 1), k >= 1
    return t0 * (2.0 ** (qv - 1.0) - 1.0) / ((1.0 + step) ** (qv - 1.0) - 1.0)


def _accept(delta: float, temperature: float, qa: float, rng: np.random.Generator) -> bool:
    if delta <= 0:
        return True
    base = 1.0 - (1.0 - qa) * delta / temperature
    if base <= 0:
        return False
    return rng.random() <= math.exp(math.log(base) / (1.0 - qa))


def _anneal_chain(track: _Tracker, x: np.ndarray, e: float, settings: AnnealSettings, rng, visitor, budget: int):
    m = len(x)
    step = 1
    while budget > 0:
        temp = _visit_temperature(settings.initial_temp, settings.visit, step)
        t_accept = temp / (step + 1)
        for j in range(2 * m):
            if budget <= 0:
                break
            cand = x.copy()
            if j < m:
                cand = _reflect(cand + visitor.sample(temp, m))
            else:
                i = j - m
                cand[i] = _reflect(cand[i] + visitor.sample(temp, 1))[0]
            e_new = track.energy(track(cand))
            budget -= 1
            if _accept(e_new - e, t_accept, settings.accept, rng):
                x, e = cand, e_new
        step += 1


_PENALTY = 1e10


def _local_search(track: _Tracker, settings: AnnealSettings, rng, budget: int) -> None:
    """Bounded Powell from the incumbent, coordinate order shuffled per call."""
    if budget <= 0:
        return
    start = track.best_p.copy()
    m = len(start)
    direc = np.eye(m)[rng.permutation(m)]
    track.limit = track.n_evals + budget
    def objective(p):
        # Powell's line search needs finite values; rejected points get a flat penalty
        return float(np.clip(track.energy(track(p)), -_PENALTY, _PENALTY))

    try:
        minimize(
            objective,
            start,
            method="Powell",
            bounds=[(0.0, 1.0)] * m,
            options={"maxfev": budget, "direc": direc, "xtol": 1e-3, "ftol": 1e-10},
        )
    except _BudgetExhausted:
        pass
    finally:
        track.limit = math.inf


def dual_annealing(
    cost: Callable[[np.ndarray], float],
    m: int,
    settings: AnnealSettings = AnnealSettings(),
    x0: Optional[np.ndarray] = None,
    workers: int = 1,
) -> OptimizationResult:
    """Generalised simulated annealing with periodic bounded local search on [0, 1]^m.

    Each outer iteration reheats to ``initial_temp`` and runs an annealing
    chain from the incumbent, then a Powell local search with the remaining
    share of the iteration's evaluation budget.
    """
    rng = np.random.default_rng(settings.seed)
    x0 = random_init(m, rng) if x0 is None else np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
    if x0.shape != (m,):
        raise ValueError(f"x0 must have shape ({m},)")
    visitor = VisitingDistribution(settings.visit, rng)
    track = _Tracker(cost, settings.log_energy, workers)
    history = [track(x0)]
    if not math.isfinite(history[0]):
        log.warning("initial point has non-finite cost")
    n_local = int(round(settings.evals_per_iteration * settings.local_fraction)) if settings.local_search else 0
    n_chain = settings.evals_per_iteration - n_local
    reason = check_stop(history, settings.stop)
    while reason is None:
        if n_chain > 0:
            start = track.best_p if track.best_p is not None else x0
            e0 = track.energy(track.best_cost)
            _anneal_chain(track, start.copy(), e0, settings, rng, visitor, n_chain)
        if track.best_p is not None:
            _local_search(track, settings, rng, n_local)
        history.append(track.best_cost)
        reason = check_stop(history, settings.stop, time.monotonic() - track.last_improvement)
    best = track.best_p if track.best_p is not None else x0
    return OptimizationResult(best, track.best_cost, history, track.n_evals, reason, track.eval_costs)


# --- evolution strategy --------------------------------------------------------


@dataclass
class EvoSettings:
    population: int = 20
    elite_fraction: float = 0.25
    sigma: float = 0.1
    evals_per_iteration: int = 200
    seed: Optional[int] = 0
    stop: StopSettings = field(default_factory=StopSettings)

    @property
    def n_parents(self) -> int:
        return max(1, int(round(self.population * self.elite_fraction)))

    @property
    def n_offspring(self) -> int:
        return self.population - self.n_parents


def evolutionary_optimize(
    cost: Callable[[np.ndarray], float],
    m: int,
    settings: EvoSettings = EvoSettings(),
    x0: Optional[np.ndarray] = None,
    workers: int = 1,
) -> OptimizationResult:
    """(mu + lambda) evolution strategy with Gaussian mutation clipped to [0, 1].

    The initial population is uniform random (``x0``, when given, replaces its
    first member). Each generation keeps the ``mu`` fittest candidates and
    fills the rest with mutated copies of uniformly chosen parents.
    """
    if settings.population < 4:
        raise ValueError("population must hold at least 4 candidates")
    if settings.n_offspring < 1:
        raise ValueError("elite fraction leaves no room for offspring")
    rng = np.random.default_rng(settings.seed)
    track = _Tracker(cost, log_energy=False, workers=workers)
    pop = rng.random((settings.population, m))
    if x0 is not None:
        pop[0] = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
    fit = track.many(pop)
    history = [float(fit.min())]
    generations = max(1, settings.evals_per_iteration // settings.n_offspring)
    mu, lam = settings.n_parents, settings.n_offspring
    reason = check_stop(history, settings.stop)
    while reason is None:
        for _ in range(generations):
            order = np.argsort(fit, kind="stable")[:mu]
            parents, parent_fit = pop[order], fit[order]
            picks = rng.integers(0, mu, size=lam)
            kids = np.clip(parents[picks] + settings.sigma * rng.standard_normal((lam, m)), 0.0, 1.0)
            kid_fit = track.many(kids)
            pop = np.vstack([parents, kids])
            fit = np.concatenate([parent_fit, kid_fit])
        history.append(track.best_cost)
        reason = check_stop(history, settings.stop, time.monotonic() - track.last_improvement)
    return OptimizationResult(track.best_p, track.best_cost, history, track.n_evals, reason, track.eval_costs)
