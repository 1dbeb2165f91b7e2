"""Monte Carlo threshold estimation for fusion networks.

Randomness uses common random numbers: the uniforms behind a sample depend
only on (master seed, network kind, L, mode, side, chunk), never on the
noise strength.  Points on a sweep are therefore nested, which keeps curves
for different L smooth and crossings stable at modest trial counts.  Trials
are cut into fixed chunks, each with its own counter-based stream, so the
result does not depend on how many worker threads run the chunks.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np
import statsmodels.api as sm
from statsmodels.stats.proportion import proportion_confint

from .analytics import (SIDES, EncodingParams, erasure_model, loss_at_erasure_budget,
                        optimize_j)
from .decoder import decode_batch
from .lattice import NETWORK_KINDS, AgnosticNoise, OpticalNoise, build_network, sample_error_batch
from .rng import chunk_generator

MODES = ("agnostic", "optical")
CHUNK = 2000
WORKERS_ENV = "EFBQC_WORKERS"

DEFAULT_SIZES = (4, 6, 8)
DEFAULT_TRIALS = 10_000
DEFAULT_GRIDS = {
    "four_star": tuple(np.round(np.linspace(0.04, 0.10, 15), 6)),
    "six_ring": tuple(np.round(np.linspace(0.08, 0.16, 15), 6)),
    "six_ring_parallel": tuple(np.round(np.linspace(0.06, 0.12, 15), 6)),
}

# (n, m) rows of the loss-threshold table, ordered by photon number
TABLE_PAIRS = ((1, 1), (2, 2), (2, 3), (3, 3), (4, 3), (5, 3), (6, 3), (5, 4), (6, 4), (7, 4))

CSV_COLUMNS = ("kind", "mode", "params", "L", "trials", "failures", "rate", "ci_lo", "ci_hi")


class ThresholdError(Exception):
    pass


class NoCrossingError(ThresholdError):
    """The curves for different L do not cross inside the grid."""


class FitError(ThresholdError):
    """The logistic fit or the crossing arithmetic broke down."""


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            workers = int(value)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {value!r}") from None
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {value!r}")
        return workers
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SweepSpec:
    """A grid of noise points for one network kind.

    ``grid`` holds erasure probabilities in agnostic mode and per-photon
    loss rates in optical mode, where ``encoding`` gives (n, m, j).
    """

    kind: str
    mode: str
    grid: tuple[float, ...]
    sizes: tuple[int, ...] = DEFAULT_SIZES
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    p_error: float = 0.0
    encoding: tuple[int, int, int] | None = None
    side: str = "balanced"

    def __post_init__(self):
        if self.kind not in NETWORK_KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))
        object.__setattr__(self, "sizes", tuple(int(L) for L in self.sizes))
        if not self.grid or any(not 0.0 <= x <= 1.0 for x in self.grid):
            raise ValueError("grid values must lie in [0, 1]")
        if any(L < 2 for L in self.sizes) or len(set(self.sizes)) != len(self.sizes):
            raise ValueError("sizes must be distinct integers >= 2")
        if self.trials < 100:
            raise ValueError(f"trials must be >= 100, got {self.trials}")
        if self.mode == "optical":
            if self.encoding is None:
                raise ValueError("optical mode needs an (n, m, j) encoding")
            object.__setattr__(self, "encoding", tuple(int(v) for v in self.encoding))
            EncodingParams(*self.encoding)

    def params_label(self, x: float) -> str:
        if self.mode == "agnostic":
            return f"p_erasure={x:.6g};p_error={self.p_error:.6g}"
        n, m, j = self.encoding
        return f"n={n};m={m};j={j};loss={x:.6g};side={self.side}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        d["sizes"] = list(self.sizes)
        d["encoding"] = list(self.encoding) if self.encoding else None
        return d


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class PointResult:
    kind: str
    mode: str
    params: str
    x: float
    L: int
    trials: int
    failures: int

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        lo, hi = proportion_confint(self.failures, self.trials, alpha=0.05, method="wilson")
        return float(lo), float(hi)

    def row(self) -> dict:
        lo, hi = self.ci
        return {"kind": self.kind, "mode": self.mode, "params": self.params, "L": self.L,
                "trials": self.trials, "failures": self.failures, "rate": f"{self.rate:.6f}",
                "ci_lo": f"{lo:.6f}", "ci_hi": f"{hi:.6f}"}


@dataclass
class ThresholdResult:
    spec: SweepSpec
    points: list[PointResult]
    threshold: float
    ci: tuple[float, float]
    pairwise: dict[str, float]
    config_hash: str

    def summary(self) -> dict:
        return {
            "kind": self.spec.kind,
            "mode": self.spec.mode,
            "threshold": self.threshold,
            "ci_lo": self.ci[0],
            "ci_hi": self.ci[1],
            "pairwise_crossings": self.pairwise,
            "seed": self.spec.seed,
            "config_hash": self.config_hash,
            "spec": self.spec.to_dict(),
        }


# -- sampling ----------------------------------------------------------------

def _noise_for(kind_mode: str, x: float, *, p_error=0.0, encoding=None, side="balanced"):
    if kind_mode == "agnostic":
        return AgnosticNoise(x, p_error)
    model = erasure_model(EncodingParams(*encoding), 1.0 - x)
    return OpticalNoise(model, side)


def _planes(mode: str) -> tuple[str, ...]:
    # optical runs decode the primal and the dual graph; the RHG lattice is
    # self-dual so both use the same network with independent streams
    return ("primal",) if mode == "agnostic" else ("primal", "dual")


def _stream(kind, L, mode, side, plane) -> str:
    return f"{kind}/L={L}/{mode}/{side}/{plane}"


def count_failures(kind: str, L: int, noise, trials: int, seed: int, *,
                   mode: str | None = None, workers: int | None = None) -> int:
    """Number of logically failed trials out of ``trials``."""
    if mode is None:
        mode = "agnostic" if isinstance(noise, AgnosticNoise) else "optical"
    side = noise.side if isinstance(noise, OpticalNoise) else "-"
    net = build_network(kind, L)
    n_chunks = math.ceil(trials / CHUNK)

    def run_chunk(c):
        size = min(CHUNK, trials - c * CHUNK)
        failed = np.zeros(size, dtype=bool)
        for plane in _planes(mode):
            rng = chunk_generator(seed, _stream(kind, L, mode, side, plane), c)
            erased, flipped = sample_error_batch(net, noise, size, rng)
            f, _ = decode_batch(net, erased, flipped)
            failed |= f
        return int(failed.sum())

    workers = default_workers() if workers is None else workers
    if workers <= 1 or n_chunks == 1:
        return sum(run_chunk(c) for c in range(n_chunks))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(run_chunk, range(n_chunks)))


def logical_rate(kind: str, L: int, noise, trials: int, seed: int, *,
                 workers: int | None = None) -> tuple[float, tuple[float, float]]:
    """Logical failure rate with a Wilson 95% interval."""
    failures = count_failures(kind, L, noise, trials, seed, workers=workers)
    lo, hi = proportion_confint(failures, trials, alpha=0.05, method="wilson")
    return failures / trials, (float(lo), float(hi))


def run_sweep(spec: SweepSpec, *, workers: int | None = None,
              progress: Callable[[str], None] | None = None) -> list[PointResult]:
    points = []
    for L in spec.sizes:
        for x in spec.grid:
            noise = _noise_for(spec.mode, x, p_error=spec.p_error,
                               encoding=spec.encoding, side=spec.side)
            failures = count_failures(spec.kind, L, noise, spec.trials, spec.seed,
                                      mode=spec.mode, workers=workers)
            points.append(PointResult(spec.kind, spec.mode, spec.params_label(x), x, L,
                                      spec.trials, failures))
            if progress:
                progress(f"{spec.kind} L={L} x={x:.5g}: {failures}/{spec.trials}")
    return points


# -- crossing estimation -----------------------------------------------------

def _coarse_split(d: np.ndarray) -> int | None:
    """Index i such that d[:i+1] <= 0 and d[i+1:] > 0 fits best, or None."""
    best, best_score = None, -1
    for i in range(len(d) - 1):
        score = int(np.sum(d[:i + 1] <= 0) + np.sum(d[i + 1:] > 0))
        if score > best_score:
            best, best_score = i, score
    if best is None or not (d[:best + 1] < 0).any() or not (d[best + 1:] > 0).any():
        return None
    return best


def _fit_logit(x, failures, trials):
    exog = sm.add_constant(np.asarray(x, dtype=float))
    endog = np.column_stack([failures, trials - failures])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = sm.GLM(endog, exog, family=sm.families.Binomial()).fit()
    a, b = (float(v) for v in res.params)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise FitError("logistic fit did not converge")
    return a, b


def _intersect(c1, c2):
    (a1, b1), (a2, b2) = c1, c2
    if abs(b1 - b2) < 1e-12:
        raise FitError("fitted curves are parallel")
    return (a2 - a1) / (b1 - b2)


def estimate_crossing(x: Sequence[float], sizes: Sequence[int], failures: np.ndarray,
                      trials: int, *, window: int = 7, n_boot: int = 200,
                      seed: int = 0) -> tuple[float, tuple[float, float], dict[str, float]]:
    """Threshold from failure counts ``failures[size_index, grid_index]``.

    Logistic curves are fitted per L in a window around the coarse crossing
    and intersected for successive sizes; the estimate is the mean of those
    pairwise crossings.  The interval comes from a parametric binomial
    bootstrap of the counts.
    """
    x = np.asarray(x, dtype=float)
    failures = np.asarray(failures)
    order = np.argsort(x)
    x, failures = x[order], failures[:, order]
    size_order = np.argsort(sizes)
    sizes = [int(sizes[i]) for i in size_order]
    failures = failures[size_order]
    if len(sizes) < 2:
        raise ValueError("at least two sizes are needed for a crossing")
    rates = failures / trials
    splits = []
    for i in range(len(sizes) - 1):
        s = _coarse_split(rates[i + 1] - rates[i])
        if s is None:
            raise NoCrossingError(
                f"no crossing between L={sizes[i]} and L={sizes[i + 1]} in "
                f"[{x[0]:.4g}, {x[-1]:.4g}]")
        splits.append(s)
    centre = int(np.median(splits))
    lo = max(0, min(centre - window // 2 + 1, len(x) - window))
    sl = slice(lo, lo + window)
    if len(x[sl]) < 2:
        raise FitError("grid too short for a logistic fit")

    def crossings(counts):
        try:
            fits = [_fit_logit(x[sl], counts[k, sl], trials) for k in range(len(sizes))]
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise FitError(str(exc)) from exc
        return [_intersect(fits[k], fits[k + 1]) for k in range(len(sizes) - 1)]

    pair = crossings(failures)
    estimate = float(np.mean(pair))
    span = x[-1] - x[0]
    if not x[0] - 0.25 * span <= estimate <= x[-1] + 0.25 * span:
        raise FitError(f"crossing estimate {estimate:.4g} falls far outside the grid")

    rng = np.random.default_rng(seed)
    p = np.clip(rates, 0.0, 1.0)
    boots = []
    for _ in range(n_boot):
        sample = rng.binomial(trials, p)
        try:
            boots.append(float(np.mean(crossings(sample))))
        except FitError:
            continue
    if boots:
        ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5)))
    else:
        ci = (estimate, estimate)
    labels = {f"L{sizes[k]}-L{sizes[k + 1]}": float(v) for k, v in enumerate(pair)}
    return estimate, ci, labels


def find_threshold(spec: SweepSpec, *, workers: int | None = None, n_boot: int = 200,
                   progress: Callable[[str], None] | None = None) -> ThresholdResult:
    if len(spec.sizes) < 2:
        raise ValueError("find_threshold needs at least two sizes")
    points = run_sweep(spec, workers=workers, progress=progress)
    grid = list(spec.grid)
    counts = np.zeros((len(spec.sizes), len(grid)), dtype=np.int64)
    for pt in points:
        counts[spec.sizes.index(pt.L), grid.index(pt.x)] = pt.failures
    estimate, ci, pairwise = estimate_crossing(grid, spec.sizes, counts, spec.trials,
                                               n_boot=n_boot, seed=spec.seed)
    return ThresholdResult(spec, points, estimate, ci, pairwise, config_hash(spec.to_dict()))


def erasure_threshold(kind: str, *, sizes=DEFAULT_SIZES, trials=DEFAULT_TRIALS, seed=0,
                      grid=None, workers=None, progress=None) -> ThresholdResult:
    """Agnostic pure-erasure threshold of a network kind."""
    spec = SweepSpec(kind, "agnostic", tuple(grid or DEFAULT_GRIDS[kind]), tuple(sizes),
                     trials, seed)
    return find_threshold(spec, workers=workers, progress=progress)


# -- loss thresholds ---------------------------------------------------------

@dataclass
class LossThresholdResult:
    kind: str
    n: int
    m: int
    j: int
    loss: float
    method: str
    erasure_threshold: float
    budget_estimate: float
    evaluations: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        return asdict(self)


def _above_threshold(kind, params, loss, sizes, trials, seed, side, workers, log):
    noise = OpticalNoise(erasure_model(params, 1.0 - loss), side)
    rates = {L: count_failures(kind, L, noise, trials, seed, mode="optical",
                               workers=workers) / trials for L in sizes}
    votes = 0
    for a, b in combinations(sorted(sizes), 2):
        up = rates[b] > rates[a] or (rates[b] == rates[a] and rates[b] >= 0.5)
        votes += 1 if up else -1
    log.append({"loss": loss, "rates": {str(L): r for L, r in rates.items()}, "above": votes > 0})
    return votes > 0


def loss_threshold(kind: str, n: int, m: int, j: int | None = None, *,
                   sizes: Iterable[int] = DEFAULT_SIZES, trials: int = DEFAULT_TRIALS,
                   seed: int = 0, method: str = "bisect", side: str = "balanced",
                   erasure_threshold_value: float | None = None, tol: float = 5e-4,
                   workers: int | None = None,
                   progress: Callable[[str], None] | None = None) -> LossThresholdResult:
    """Per-photon loss threshold of an (n, m, j) encoded network.

    ``j=None`` picks j automatically: the network's erasure threshold p* is
    measured (unless given), and j is chosen to maximise the loss at which
    the encoded fusion's erasure reaches p*.  ``method="bisect"`` then
    bisects the loss rate with direct Monte Carlo size comparisons;
    ``method="budget"`` returns that analytic inversion directly.
    """
    sizes = tuple(sorted(int(L) for L in sizes))
    if len(sizes) < 2:
        raise ValueError("loss_threshold needs at least two sizes")
    if method not in ("bisect", "budget"):
        raise ValueError(f"method must be 'bisect' or 'budget', got {method!r}")
    if erasure_threshold_value is None:
        res = erasure_threshold(kind, sizes=sizes, trials=trials, seed=seed,
                                workers=workers, progress=progress)
        erasure_threshold_value = res.threshold
    p_star = float(erasure_threshold_value)
    if j is None:
        j, _ = optimize_j(n, m, objective="network_threshold", erasure_budget=p_star, side=side)
    params = EncodingParams(n, m, j)
    estimate = loss_at_erasure_budget(params, p_star, side)
    result = LossThresholdResult(kind, n, m, j, estimate, method, p_star, estimate)
    if method == "budget":
        return result

    log = result.evaluations

    def above(loss):
        flag = _above_threshold(kind, params, loss, sizes, trials, seed, side, workers, log)
        if progress:
            progress(f"{kind} ({n},{m},{j}) loss={loss:.5f}: {'above' if flag else 'below'}")
        return flag

    if above(0.0):
        result.loss = 0.0
        return result
    lo, hi = 0.0, min(1.0, max(2.0 * estimate, estimate + 0.02))
    while not above(hi):
        lo = hi
        if hi >= 1.0:
            result.loss = 1.0
            return result
        hi = min(1.0, hi + 0.05)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if above(mid):
            hi = mid
        else:
            lo = mid
    result.loss = 0.5 * (lo + hi)
    return result


def threshold_table(pairs=TABLE_PAIRS, *, kinds=("four_star", "six_ring"), sizes=DEFAULT_SIZES,
                    trials=DEFAULT_TRIALS, seed=0, method="bisect", side="balanced",
                    erasure_thresholds: dict | None = None, workers=None,
                    progress=None) -> list[dict]:
    """Best loss threshold and its j for each (n, m), per network kind."""
    budgets = dict(erasure_thresholds or {})
    for kind in kinds:
        if kind not in budgets:
            budgets[kind] = erasure_threshold(kind, sizes=sizes, trials=trials, seed=seed,
                                              workers=workers, progress=progress).threshold
    rows = []
    for n, m in pairs:
        row = {"n": n, "m": m, "photons": n * m}
        for kind in kinds:
            res = loss_threshold(kind, n, m, None, sizes=sizes, trials=trials, seed=seed,
                                 method=method, side=side,
                                 erasure_threshold_value=budgets[kind],
                                 workers=workers, progress=progress)
            row[f"j_{kind}"] = res.j
            row[f"threshold_{kind}"] = res.loss
        rows.append(row)
    return rows


# -- output ------------------------------------------------------------------

def points_csv(points: Sequence[PointResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for pt in points:
        writer.writerow(pt.row())
    return buf.getvalue()
