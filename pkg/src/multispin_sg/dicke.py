"""Collective-spin combinatorics in the Dicke basis |kappa>, kappa = number of up spins."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import CapacityError, InvalidArgumentError

N_MAX = 2048
# below this min(k, n - k) the exact integer binomial is cheap
_EXACT_COMB_MAX = 64
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_tail(x: float) -> float:
    """ln Gamma(x + 1) - (x ln x - x + ln(2 pi x) / 2) for x >= 64."""
    r = 1.0 / (x * x)
    return (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / x


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) without the cancellation of a plain log-gamma difference."""
    if not (0 <= k <= n):
        raise InvalidArgumentError(f"need 0 <= k <= n, got n={n}, k={k}")
    m = min(k, n - k)
    if m == 0:
        return 0.0
    if m <= _EXACT_COMB_MAX:
        return math.log(math.comb(n, m))
    j = n - m
    # n ln n - m ln m - j ln j rewritten so that no large terms cancel
    main = m * math.log(n / m) - j * math.log1p(-m / n)
    half = 0.5 * math.log(n / (m * j)) - _HALF_LOG_2PI
    return main + half + _stirling_tail(n) - _stirling_tail(m) - _stirling_tail(j)


def log_binomial_weight(n: int, k: int) -> float:
    """ln(C(n, k) / 2^n), keeping full precision near the centre where both logs are ~ n ln 2."""
    m = min(k, n - k)
    if m <= _EXACT_COMB_MAX:
        return log_binomial(n, k) - n * math.log(2.0)
    j = n - m
    main = -m * math.log1p((2 * m - n) / n) - j * math.log1p((2 * j - n) / n)
    half = 0.5 * math.log(n / (m * j)) - _HALF_LOG_2PI
    return main + half + _stirling_tail(n) - _stirling_tail(m) - _stirling_tail(j)


@dataclass(frozen=True)
class LogBinomialTable:
    N: int
    log_values: np.ndarray

    @classmethod
    def build(cls, N: int) -> "LogBinomialTable":
        k = np.arange(N + 1)
        vals = gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)
        vals[0] = vals[-1] = 0.0
        vals = 0.5 * (vals + vals[::-1])  # exact symmetry
        return cls(N, vals)


FULL_TABLE_MAX_N = 50_000_000


def binomial_log_weights(N: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Labels kappa whose weight C(N, kappa)/2^N is at least ``eps``, with their log weights.

    The pointwise Hoeffding bound C(N, k)/2^N <= exp(-2 t^2/N), t = |k - N/2|,
    limits the search to a window of width sqrt(N ln(1/eps)/2) about the centre,
    so huge N never needs the full table. ``eps = 0`` keeps every label.
    """
    if N < 0:
        raise InvalidArgumentError("N must be non-negative")
    if eps <= 0:
        if N > FULL_TABLE_MAX_N:
            raise CapacityError(f"untruncated binomial table limited to N <= {FULL_TABLE_MAX_N}")
        kap = np.arange(N + 1)
        return kap, LogBinomialTable.build(N).log_values - N * math.log(2.0)
    half = math.ceil(math.sqrt(0.5 * N * math.log(1.0 / min(eps, 1.0)))) + 1
    c = N // 2
    lo, hi = max(0, c - half), min(N, c + half)
    kap = np.arange(lo, hi + 1)
    # log C(N, k+1) - log C(N, k) = log1p((N - 2k - 1)/(k + 1)), summed outward from the centre
    k_up = np.arange(c, hi, dtype=float)
    k_dn = np.arange(c - 1, lo - 1, -1, dtype=float)
    up = np.cumsum(np.log1p((N - 2 * k_up - 1) / (k_up + 1)))
    dn = np.cumsum(-np.log1p((N - 2 * k_dn - 1) / (k_dn + 1)))
    rel = np.concatenate([dn[::-1], [0.0], up])
    logw = log_binomial_weight(N, c) + rel
    keep = logw >= math.log(eps)
    return kap[keep], logw[keep]


@dataclass(frozen=True)
class DickePulseMatrix:
    N: int
    kind: str
    entries: np.ndarray  # entries[alpha, kappa] = <alpha|U|kappa>


def _krawtchouk_row_exact(N: int, alpha: int) -> list[int]:
    """sum_nu (-1)^nu C(N-alpha, nu) C(alpha, kappa-nu) for kappa = 0..N, exactly."""
    K = [1]
    if N == 0:
        return K
    K.append(2 * alpha - N)
    for k in range(1, N):
        nxt = (2 * alpha - N) * K[k] - (N - k + 1) * K[k - 1]
        q, r = divmod(nxt, k + 1)
        assert r == 0
        K.append(q)
    return K


@lru_cache(maxsize=16)
def _half_pi_entries(N: int) -> np.ndarray:
    """Entries from exact integer alternating sums, scaled in log space.

    Row N - alpha equals row alpha with sign (-1)^kappa, so only half the
    rows are summed.
    """
    lb = LogBinomialTable.build(N).log_values
    scale = -0.5 * N * math.log(2.0) - 0.5 * lb
    flip = np.where(np.arange(N + 1) % 2 == 0, 1.0, -1.0)
    M = np.empty((N + 1, N + 1))
    for alpha in range(N // 2 + 1):
        K = _krawtchouk_row_exact(N, alpha)
        log_mag = np.array([math.log(abs(v)) if v else -math.inf for v in K])
        sign = np.array([(v > 0) - (v < 0) for v in K], dtype=float)
        M[alpha] = sign * np.exp(0.5 * lb[alpha] + scale + log_mag)
        M[N - alpha] = flip * M[alpha]
    M.setflags(write=False)
    return M


def _check_N(N: int) -> None:
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"N must be a positive integer, got {N!r}")
    if N > N_MAX:
        raise CapacityError(f"dense Dicke matrices are limited to N <= {N_MAX}")


def half_pi_matrix(N: int) -> DickePulseMatrix:
    """Collective pi/2 rotation about y restricted to the symmetric subspace."""
    _check_N(N)
    return DickePulseMatrix(N, "half_pi", _half_pi_entries(N))


def pi_pulse_signs(N: int) -> np.ndarray:
    """The pi pulse maps |alpha> to sign[alpha] |N - alpha>."""
    a = np.arange(N + 1)
    return np.where((a + 1) % 2 == 0, 1.0, -1.0)


def pi_matrix(N: int) -> np.ndarray:
    _check_N(N)
    M = np.zeros((N + 1, N + 1))
    s = pi_pulse_signs(N)
    for a in range(N + 1):
        M[N - a, a] = s[a]
    return M


@lru_cache(maxsize=16)
def _three_half_pi_entries(N: int) -> np.ndarray:
    H = _half_pi_entries(N)
    s = pi_pulse_signs(N)
    # (U_pi U_pi/2)[beta, alpha] = s[N - beta] * H[N - beta, alpha]
    M = s[::-1][:, None] * H[::-1, :]
    M.setflags(write=False)
    return M


def three_half_pi_matrix(N: int) -> DickePulseMatrix:
    _check_N(N)
    return DickePulseMatrix(N, "three_half_pi", _three_half_pi_entries(N))


@dataclass(frozen=True)
class LadderCoefficients:
    down: float
    up: float


def collective_x_coefficients(N: int, kappa: int) -> LadderCoefficients:
    """Matrix elements of sum_n sigma_x^(n) connecting |kappa> to |kappa -+ 1>."""
    if not (0 <= kappa <= N):
        raise InvalidArgumentError(f"kappa must lie in [0, {N}]")
    return LadderCoefficients(math.sqrt(kappa * (N - kappa + 1)), math.sqrt((kappa + 1) * (N - kappa)))


def ladder_up(N: int) -> np.ndarray:
    """up coefficient for kappa = 0..N-1 (the entry for kappa = N is zero and omitted)."""
    k = np.arange(N, dtype=float)
    return np.sqrt((k + 1.0) * (N - k))


def initial_amplitudes(N: int) -> np.ndarray:
    """Amplitudes of the first pi/2 pulse applied to |kappa = 0>."""
    return np.array(half_pi_matrix(N).entries[:, 0])


def trajectory_probabilities(N: int) -> np.ndarray:
    """P[kappa, alpha]: weight of the trajectory pair selected by the first two pulses."""
    c2 = np.exp(LogBinomialTable.build(N).log_values - N * math.log(2.0))
    H = half_pi_matrix(N).entries
    return c2[:, None] * (H.T) ** 2


def exact_half_pi_entry(N: int, alpha: int, kappa: int) -> float:
    """Reference entry using rational arithmetic throughout (slow, for tests)."""
    s = sum((-1) ** nu * math.comb(N - alpha, nu) * math.comb(alpha, kappa - nu)
            for nu in range(max(0, kappa - alpha), min(N - alpha, kappa) + 1))
    sq = Fraction(math.comb(N, alpha), math.comb(N, kappa) * 2**N)
    val = math.sqrt(sq.numerator) / math.sqrt(sq.denominator) if sq.numerator < 2**1000 else math.exp(
        0.5 * (math.log(sq.numerator) - math.log(sq.denominator)))
    return float(s) * val if abs(s) < 2**1000 else math.copysign(
        math.exp(math.log(abs(s)) + math.log(val)), s)
