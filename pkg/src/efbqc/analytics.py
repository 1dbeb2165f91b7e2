"""Closed-form statistics of the (n, m) Shor-code encoded fusion.

Conventions used throughout the package:

* ``eta`` is the per-photon transmission; the loss rate is ``1 - eta``.
* The Bell *letter* (psi vs phi) is the ZZ parity and the *sign* (+/-) is the
  XX parity.  A block that fails destroys sign information, so the logical XX
  outcome is erased whenever any block fails; the logical ZZ outcome is erased
  when no block fully discriminates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from scipy.optimize import brentq

Side = Literal["primal_xx", "primal_zz", "balanced"]
SIDES: tuple[str, ...] = ("primal_xx", "primal_zz", "balanced")


@dataclass(frozen=True)
class EncodingParams:
    """The (n, m, j) triple of the encoded-fusion protocol.

    ``n`` blocks of ``m`` photons per logical qubit; ``j`` is the largest
    number of consecutive failed ``B_psi`` attempts in a block before the
    protocol switches to a randomly chosen ``B_+``/``B_-``.
    """

    n: int
    m: int
    j: int

    def __post_init__(self):
        for name in ("n", "m", "j"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(f"{name} must be an integer, got {value!r}")
        if self.n < 1 or self.m < 1:
            raise ValueError(f"n and m must be >= 1, got n={self.n}, m={self.m}")
        if not 0 <= self.j <= self.m - 1:
            raise ValueError(
                f"j must satisfy 0 <= j <= m-1 (m={self.m}), got j={self.j}")

    @property
    def photons_per_qubit(self) -> int:
        return self.n * self.m

    @property
    def photons_per_fusion(self) -> int:
        return 2 * self.n * self.m


def check_eta(eta: float) -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return eta


@dataclass(frozen=True)
class BlockStats:
    p_full: float
    p_fail: float
    p_sign_only: float


@dataclass(frozen=True)
class OutcomeErasureModel:
    """Joint erasure statistics of the two outcomes of one encoded fusion.

    ``eps_xx`` and ``eps_zz`` are the marginal erasure probabilities of the
    sign (XX) and letter (ZZ) outcomes.  ``p_error_xx``/``p_error_zz`` are
    outcome flip rates; the linear-optical channel never flips, so they stay
    zero unless set explicitly.
    """

    eps_xx: float
    eps_zz: float
    p_both_known: float
    p_both_erased: float
    p_error_xx: float = 0.0
    p_error_zz: float = 0.0

    @property
    def p_sign_erased_only(self) -> float:
        return self.eps_xx - self.p_both_erased

    @property
    def p_letter_erased_only(self) -> float:
        return self.eps_zz - self.p_both_erased

    @property
    def eps_balanced(self) -> float:
        """Per-outcome erasure when each fusion feeds XX or ZZ to the primal
        graph with equal probability."""
        return 0.5 * (self.eps_xx + self.eps_zz)

    def erasure_for(self, side: str) -> float:
        if side == "primal_xx":
            return self.eps_xx
        if side == "primal_zz":
            return self.eps_zz
        if side == "balanced":
            return self.eps_balanced
        raise ValueError(f"unknown side {side!r}; expected one of {SIDES}")


def block_stats(params: EncodingParams, eta: float) -> BlockStats:
    """Full-discrimination, failure and sign-only probabilities of one block."""
    eta = check_eta(eta)
    m, j = params.m, params.j
    t2 = eta * eta
    p_full = (1.0 - 2.0 ** (-j - 1)) * eta ** (2 * m)
    # l counts the pair measurements that hit a loss
    p_fail = sum(0.5 ** (m - l) * t2 ** (m - l) * (1.0 - t2) ** l
                 for l in range(m - j, m + 1))
    p_sign_only = 1.0 - p_full - p_fail
    # rounding can push the remainder a hair below zero at eta == 0
    if p_sign_only < 0.0 and p_sign_only > -1e-15:
        p_sign_only = 0.0
    return BlockStats(p_full, p_fail, p_sign_only)


def logical_success(params: EncodingParams, eta: float) -> float:
    """Probability that both logical fusion outcomes are obtained."""
    s = block_stats(params, eta)
    return (1.0 - s.p_fail) ** params.n - s.p_sign_only ** params.n


def erasure_model(params: EncodingParams, eta: float) -> OutcomeErasureModel:
    s = block_stats(params, eta)
    n = params.n
    no_fail = (1.0 - s.p_fail) ** n
    no_full = (1.0 - s.p_full) ** n
    all_sign_only = s.p_sign_only ** n
    return OutcomeErasureModel(
        eps_xx=1.0 - no_fail,
        eps_zz=no_full,
        p_both_known=no_fail - all_sign_only,
        p_both_erased=no_full - all_sign_only,
    )


def outcome_erasure(params: EncodingParams, eta: float, side: str = "balanced") -> float:
    """Per-edge erasure probability seen by the primal syndrome graph."""
    return erasure_model(params, eta).erasure_for(side)


def loss_at_erasure_budget(params: EncodingParams, budget: float,
                           side: str = "balanced", *, xtol: float = 1e-12) -> float:
    """Largest per-photon loss rate whose outcome erasure stays within ``budget``.

    Returns 0.0 when even the lossless fusion exceeds the budget.
    """
    def excess(loss):
        return outcome_erasure(params, 1.0 - loss, side) - budget

    if excess(0.0) > 0.0:
        return 0.0
    if excess(1.0) <= 0.0:
        return 1.0
    return brentq(excess, 0.0, 1.0, xtol=xtol)


def optimize_j(n: int, m: int, eta: float = 1.0,
               objective: str = "logical_success", *,
               erasure_budget: float | None = None,
               side: str = "balanced") -> tuple[int, float]:
    """Pick the feedforward depth j in ``0..m-1`` maximising ``objective``.

    ``logical_success`` maximises P_s at the given ``eta``.
    ``network_threshold`` maximises the loss threshold of a fusion network
    whose per-outcome erasure threshold is ``erasure_budget`` (obtain it from
    :func:`efbqc.threshold.find_threshold`); ``eta`` is unused there.
    Ties go to the smaller j.
    """
    if objective == "logical_success":
        def score(j):
            return logical_success(EncodingParams(n, m, j), eta)
    elif objective == "network_threshold":
        if erasure_budget is None:
            raise ValueError("network_threshold objective needs erasure_budget")

        def score(j):
            return loss_at_erasure_budget(EncodingParams(n, m, j), erasure_budget, side)
    else:
        raise ValueError(f"unknown objective {objective!r}")

    best_j, best = 0, score(0)
    for j in range(1, m):
        value = score(j)
        if value > best + 1e-13:
            best_j, best = j, value
    return best_j, best
