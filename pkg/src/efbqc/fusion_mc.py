"""Photon-level simulation of the encoded-fusion protocol.

Each block-level Bell state is expanded into its photonic Bell-pair
decomposition (pair letters with a parity constraint, all pairs sharing the
block sign).  Linear-optic Bell measurements act on pairs as classical
channels:

* ``B_psi`` identifies psi pairs (letter and sign) and is ambiguous on phi
  pairs, which still reveals the letter phi.
* ``B_+``/``B_-`` identify the pair letter when the pair sign matches; on the
  opposite sign the click pattern is ambiguous between psi and phi, which
  still reveals the sign.
* A missing photon is always detected (dual rail) and yields nothing.

Three entry points share this model: :func:`sample_block` /
:func:`sample_logical` for single trials with a full record,
:func:`sample_logical_batch` for vectorised throughput, and
:func:`enumerate_exact` which sums over every branch instead of sampling.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .analytics import EncodingParams, OutcomeErasureModel, check_eta
from .rng import chunk_generator, make_generator

PSI, PHI = "psi", "phi"
PLUS, MINUS = "+", "-"

ENUMERATION_CAP = 12


@dataclass(frozen=True)
class BellLabel:
    letter: str
    sign: str

    def __post_init__(self):
        if self.letter not in (PSI, PHI) or self.sign not in (PLUS, MINUS):
            raise ValueError(f"invalid Bell label {self.letter}{self.sign}")

    def __str__(self):
        return f"{self.letter}{self.sign}"


BELL_BASIS = tuple(BellLabel(l, s) for l in (PSI, PHI) for s in (PLUS, MINUS))


class BlockOutcome(enum.Enum):
    FULL = "full"
    SIGN_ONLY = "sign_only"
    FAIL = "fail"


class LogicalOutcome(enum.Enum):
    BOTH_KNOWN = "both_known"
    SIGN_ERASED = "sign_erased"
    LETTER_ERASED = "letter_erased"
    BOTH_ERASED = "both_erased"


class PairResult(enum.Enum):
    IDENTIFIED = "identified"
    AMBIGUOUS = "ambiguous"
    LOSS_DETECTED = "loss_detected"


@dataclass
class BlockDraw:
    block_letter: str
    block_sign: str
    pair_letters: list[str]
    photon_present: list[bool]

    def check_parity(self):
        n_psi = sum(l == PSI for l in self.pair_letters)
        if (n_psi % 2 == 1) != (self.block_letter == PSI):
            raise AssertionError(
                f"pair letters {self.pair_letters} inconsistent with block {self.block_letter}")


@dataclass
class MeasurementStep:
    pair: int
    bsm: str  # "B_psi", "B_+", "B_-"
    result: PairResult
    label: BellLabel | None = None
    revealed_letter: str | None = None
    revealed_sign: str | None = None


@dataclass
class MeasurementRecord:
    steps: list[MeasurementStep] = field(default_factory=list)
    switched_at: int | None = None
    switch_bsm: str | None = None
    guessed: bool = False


@dataclass
class BlockResult:
    outcome: BlockOutcome
    letter: str | None
    sign: str | None
    draw: BlockDraw
    record: MeasurementRecord


def _draw_block(m, letter, sign, eta, rng):
    # uniform over letter strings with the right psi-parity
    letters = [PSI if b else PHI for b in rng.integers(0, 2, size=m - 1)]
    parity = sum(l == PSI for l in letters) % 2
    want = 1 if letter == PSI else 0
    letters.append(PSI if parity != want else PHI)
    letters = [letters[i] for i in rng.permutation(m)]
    present = list(rng.random(2 * m) < eta)
    return BlockDraw(letter, sign, letters, present)


def _measure_block(params: EncodingParams, draw: BlockDraw, guess_bits) -> BlockResult:
    """Run steps (i)-(ii) of the protocol on a fixed draw.

    ``guess_bits`` yields the random B_+/B_- choice when it is needed
    (True means B_+).
    """
    m, j = params.m, params.j
    sign = draw.block_sign
    record = MeasurementRecord()
    letters_known = [None] * m
    sign_known = None
    bsm = "B_psi" if j > 0 else None
    fails = 0
    for k in range(m):
        if bsm is None:
            bsm = "B_+" if next(guess_bits) else "B_-"
            record.switched_at, record.switch_bsm, record.guessed = k, bsm, True
        survived = draw.photon_present[2 * k] and draw.photon_present[2 * k + 1]
        pair_letter = draw.pair_letters[k]
        step = MeasurementStep(k, bsm, PairResult.LOSS_DETECTED)
        if bsm == "B_psi":
            if not survived:
                bsm = None
            elif pair_letter == PSI:
                step.result = PairResult.IDENTIFIED
                step.label = BellLabel(PSI, sign)
                step.revealed_letter, step.revealed_sign = PSI, sign
                bsm = "B_+" if sign == PLUS else "B_-"
                record.switched_at, record.switch_bsm = k + 1, bsm
            else:
                step.result = PairResult.AMBIGUOUS
                step.revealed_letter = PHI
                fails += 1
                if fails == j:
                    bsm = None
        else:
            bsm_sign = PLUS if bsm == "B_+" else MINUS
            if survived and bsm_sign == sign:
                step.result = PairResult.IDENTIFIED
                step.label = BellLabel(pair_letter, sign)
                step.revealed_letter, step.revealed_sign = pair_letter, sign
            elif survived:
                step.result = PairResult.AMBIGUOUS
                step.revealed_sign = MINUS if bsm_sign == PLUS else PLUS
        if step.revealed_letter is not None:
            letters_known[k] = step.revealed_letter
        if step.revealed_sign is not None:
            sign_known = step.revealed_sign
        record.steps.append(step)

    letter = None
    if all(l is not None for l in letters_known):
        letter = PSI if sum(l == PSI for l in letters_known) % 2 else PHI
    if sign_known is None:
        outcome = BlockOutcome.FAIL
    elif letter is None:
        outcome = BlockOutcome.SIGN_ONLY
    else:
        outcome = BlockOutcome.FULL
    return BlockResult(outcome, letter, sign_known, draw, record)


def sample_block(params: EncodingParams, eta: float, rng_seed=None, *,
                 label: BellLabel | None = None) -> BlockResult:
    """Sample one block-level measurement.

    ``label`` fixes the block Bell state; by default it is drawn uniformly.
    """
    eta = check_eta(eta)
    rng = make_generator(rng_seed)
    if label is None:
        label = BELL_BASIS[rng.integers(4)]
    draw = _draw_block(params.m, label.letter, label.sign, eta, rng)
    draw.check_parity()
    guesses = iter(lambda: bool(rng.integers(2)), None)
    return _measure_block(params, draw, guesses)


@dataclass
class LogicalResult:
    outcome: LogicalOutcome
    truth: BellLabel
    label: BellLabel | None
    letter: str | None
    sign: str | None
    blocks: list[BlockResult]


def classify_logical(blocks) -> tuple[LogicalOutcome, str | None, str | None]:
    letter = next((b.letter for b in blocks if b.outcome is BlockOutcome.FULL), None)
    sign = None
    if all(b.outcome is not BlockOutcome.FAIL for b in blocks):
        minus = sum(b.sign == MINUS for b in blocks)
        sign = MINUS if minus % 2 else PLUS
    if letter is not None and sign is not None:
        outcome = LogicalOutcome.BOTH_KNOWN
    elif letter is not None:
        outcome = LogicalOutcome.SIGN_ERASED
    elif sign is not None:
        outcome = LogicalOutcome.LETTER_ERASED
    else:
        outcome = LogicalOutcome.BOTH_ERASED
    return outcome, letter, sign


def sample_logical(params: EncodingParams, eta: float, rng_seed=None, *,
                   truth: BellLabel | None = None) -> LogicalResult:
    """Sample one encoded fusion of two (n, m)-encoded qubits.

    The logical Bell state is decomposed into ``n`` block Bell states sharing
    its letter, with block signs of the right minus-parity; blocks are then
    measured independently.
    """
    eta = check_eta(eta)
    rng = make_generator(rng_seed)
    if truth is None:
        truth = BELL_BASIS[rng.integers(4)]
    signs = [MINUS if b else PLUS for b in rng.integers(0, 2, size=params.n - 1)]
    n_minus = sum(s == MINUS for s in signs)
    signs.append(MINUS if (n_minus % 2) != (truth.sign == MINUS) else PLUS)
    guesses = iter(lambda: bool(rng.integers(2)), None)
    blocks = []
    for s in signs:
        draw = _draw_block(params.m, truth.letter, s, eta, rng)
        draw.check_parity()
        blocks.append(_measure_block(params, draw, guesses))
    outcome, letter, sign = classify_logical(blocks)
    label = BellLabel(letter, sign) if outcome is LogicalOutcome.BOTH_KNOWN else None
    if letter is not None and letter != truth.letter:
        raise AssertionError("letter misidentified")
    if sign is not None and sign != truth.sign:
        raise AssertionError("sign misidentified")
    return LogicalResult(outcome, truth, label, letter, sign, blocks)


# -- vectorised sampler ------------------------------------------------------

BATCH_CHUNK = 50_000
_FULL, _SIGN_ONLY, _FAIL = 0, 1, 2


def _block_outcomes(psi, sign_plus, survived, guess_plus, j):
    """Vectorised steps (i)-(ii) over the leading axis.

    psi, survived: bool (B, m); sign_plus, guess_plus: bool (B,).
    Returns block class codes, revealed letter (True = psi) and revealed sign
    (True = plus), with -1 where unrevealed.
    """
    nb, m = psi.shape
    in_psi_phase = np.full(nb, j > 0)
    bsm_plus = guess_plus.copy()  # B_+ when True; meaningful outside psi phase
    fails = np.zeros(nb, dtype=np.int64)
    letter_missing = np.zeros(nb, dtype=bool)
    psi_parity = np.zeros(nb, dtype=bool)
    sign_known = np.zeros(nb, dtype=bool)
    revealed_plus = np.zeros(nb, dtype=bool)
    for k in range(m):
        s, l = survived[:, k], psi[:, k]
        # B_psi stage
        ph = in_psi_phase
        lost = ph & ~s
        hit = ph & s & l
        miss = ph & s & ~l
        letter_missing |= lost
        psi_parity ^= hit
        sign_known |= hit
        revealed_plus = np.where(hit, sign_plus, revealed_plus)
        bsm_plus = np.where(hit, sign_plus, bsm_plus)
        fails += miss
        # B_+/- stage (pairs already consumed above are excluded)
        st = ~ph
        match = st & s & (bsm_plus == sign_plus)
        mismatch = st & s & (bsm_plus != sign_plus)
        letter_missing |= st & ~(s & (bsm_plus == sign_plus))
        psi_parity ^= match & l
        sign_known |= match | mismatch
        revealed_plus = np.where(match | mismatch, sign_plus, revealed_plus)
        in_psi_phase = ph & ~lost & ~hit & (fails < j)
    cls = np.where(~sign_known, _FAIL, np.where(letter_missing, _SIGN_ONLY, _FULL))
    letter = np.where(letter_missing, -1, psi_parity.astype(np.int64))
    sign = np.where(sign_known, revealed_plus.astype(np.int64), -1)
    return cls, letter, sign


@dataclass
class LogicalCounts:
    trials: int
    both_known: int
    sign_erased: int
    letter_erased: int
    both_erased: int
    block_full: int
    block_sign_only: int
    block_fail: int

    def frequencies(self) -> dict[str, float]:
        t = self.trials
        return {
            "p_both_known": self.both_known / t,
            "eps_xx": (self.sign_erased + self.both_erased) / t,
            "eps_zz": (self.letter_erased + self.both_erased) / t,
            "p_both_erased": self.both_erased / t,
        }

    def __add__(self, other):
        return LogicalCounts(*(a + b for a, b in zip(self._tuple(), other._tuple())))

    def _tuple(self):
        return (self.trials, self.both_known, self.sign_erased, self.letter_erased,
                self.both_erased, self.block_full, self.block_sign_only, self.block_fail)


def _sample_chunk(params, eta, trials, rng):
    n, m = params.n, params.m
    truth_psi = rng.integers(0, 2, size=trials).astype(bool)
    block_plus = rng.integers(0, 2, size=(trials, n)).astype(bool)
    # pair letters: uniform over strings with the block's psi-parity
    free = rng.integers(0, 2, size=(trials, n, m)).astype(bool)
    parity = np.logical_xor.reduce(free[..., :-1], axis=-1)
    free[..., -1] = parity ^ truth_psi[:, None]
    photons = rng.random((trials, n, m, 2)) < eta
    survived = photons.all(axis=-1)
    guess_plus = rng.integers(0, 2, size=(trials, n)).astype(bool)

    cls, letter, sign = _block_outcomes(
        free.reshape(-1, m), block_plus.reshape(-1), survived.reshape(-1, m),
        guess_plus.reshape(-1), params.j)
    cls = cls.reshape(trials, n)
    letter = letter.reshape(trials, n)
    sign = sign.reshape(trials, n)

    if np.any((letter >= 0) & (letter != truth_psi[:, None])):
        raise AssertionError("block letter misidentified")
    if np.any((sign >= 0) & (sign != block_plus)):
        raise AssertionError("block sign misidentified")

    any_full = (cls == _FULL).any(axis=1)
    no_fail = ~(cls == _FAIL).any(axis=1)
    return LogicalCounts(
        trials=trials,
        both_known=int(np.sum(any_full & no_fail)),
        sign_erased=int(np.sum(any_full & ~no_fail)),
        letter_erased=int(np.sum(~any_full & no_fail)),
        both_erased=int(np.sum(~any_full & ~no_fail)),
        block_full=int(np.sum(cls == _FULL)),
        block_sign_only=int(np.sum(cls == _SIGN_ONLY)),
        block_fail=int(np.sum(cls == _FAIL)),
    )


def sample_logical_batch(params: EncodingParams, eta: float, trials: int,
                         seed: int = 0) -> LogicalCounts:
    """Count logical outcomes over ``trials`` independent encoded fusions.

    Trials are generated in fixed chunks of :data:`BATCH_CHUNK`; chunk ``c``
    draws from a stream keyed by ``(seed, c)`` so the result depends only on
    ``(params, eta, trials, seed)``.
    """
    eta = check_eta(eta)
    total = None
    for c, start in enumerate(range(0, trials, BATCH_CHUNK)):
        size = min(BATCH_CHUNK, trials - start)
        counts = _sample_chunk(params, eta, size, chunk_generator(seed, "fusion-mc", c))
        total = counts if total is None else total + counts
    return total


# -- exhaustive enumeration --------------------------------------------------

def _bits(count, width):
    return ((np.arange(count)[:, None] >> np.arange(width)) & 1).astype(bool)


def enumerate_block(params: EncodingParams, eta: float, *, order=None) -> dict[str, dict[str, float]]:
    """Exact class probabilities of one block, per block Bell state.

    Sums over every pair-letter string of the block's decomposition, every
    pattern of surviving/lost pairs (a pair is lost with probability
    ``1 - eta**2``, the total weight of its three lossy photon patterns), and
    both values of the random B_+/B_- choice.  ``order`` optionally permutes
    the pair measurement order.
    """
    eta = check_eta(eta)
    m = params.m
    letters = _bits(2 ** m, m)
    if order is not None:
        letters = letters[:, list(order)]
    parity = np.logical_xor.reduce(letters, axis=1)
    survive = _bits(2 ** m, m)
    w_surv = np.where(survive, eta * eta, 1.0 - eta * eta).prod(axis=1)
    # survival patterns per slab keep the working set near 2**20 rows
    slab = max(1, 2 ** 20 // 2 ** (m - 1))

    out = {}
    for lab in BELL_BASIS:
        want_psi = lab.letter == PSI
        psi_rows = letters[parity == want_psi]
        nl = len(psi_rows)
        probs = np.zeros(3)
        for s0 in range(0, 2 ** m, slab):
            surv = survive[s0:s0 + slab]
            ns = len(surv)
            psi = np.tile(psi_rows, (ns, 1))
            sv = np.repeat(surv, nl, axis=0)
            w = np.repeat(w_surv[s0:s0 + slab], nl) / nl
            plus = np.full(ns * nl, lab.sign == PLUS)
            for guess in (True, False):
                cls, letter, sign = _block_outcomes(psi, plus, sv, np.full(ns * nl, guess),
                                                    params.j)
                if np.any((letter >= 0) & (letter != want_psi)):
                    raise AssertionError("block letter misidentified")
                if np.any((sign >= 0) & (sign != plus)):
                    raise AssertionError("block sign misidentified")
                probs += 0.5 * np.bincount(cls, weights=w, minlength=3)
        out[str(lab)] = {"full": probs[_FULL], "sign_only": probs[_SIGN_ONLY],
                         "fail": probs[_FAIL]}
    return out


def enumerate_exact(params: EncodingParams, eta: float) -> OutcomeErasureModel:
    """Exact logical erasure statistics by summing over all protocol branches.

    Limited to ``n * m <= 12``.
    """
    if params.n * params.m > ENUMERATION_CAP:
        raise ValueError(
            f"exhaustive enumeration is capped at n*m <= {ENUMERATION_CAP}, "
            f"got n*m = {params.n * params.m}")
    per_label = enumerate_block(params, eta)
    ref = per_label[str(BELL_BASIS[0])]
    for lab, probs in per_label.items():
        for key in probs:
            if abs(probs[key] - ref[key]) > 1e-13:
                raise AssertionError(f"block statistics depend on the Bell label ({lab})")
    p = (ref["full"], ref["sign_only"], ref["fail"])

    totals = dict.fromkeys(LogicalOutcome, 0.0)
    for combo in itertools.product(range(3), repeat=params.n):
        w = 1.0
        for c in combo:
            w *= p[c]
        any_full = _FULL in combo
        no_fail = _FAIL not in combo
        if any_full and no_fail:
            totals[LogicalOutcome.BOTH_KNOWN] += w
        elif any_full:
            totals[LogicalOutcome.SIGN_ERASED] += w
        elif no_fail:
            totals[LogicalOutcome.LETTER_ERASED] += w
        else:
            totals[LogicalOutcome.BOTH_ERASED] += w
    both = totals[LogicalOutcome.BOTH_ERASED]
    return OutcomeErasureModel(
        eps_xx=totals[LogicalOutcome.SIGN_ERASED] + both,
        eps_zz=totals[LogicalOutcome.LETTER_ERASED] + both,
        p_both_known=totals[LogicalOutcome.BOTH_KNOWN],
        p_both_erased=both,
    )
