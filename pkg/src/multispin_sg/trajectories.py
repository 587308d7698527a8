"""Classical phase-space trajectories and accumulated phases of both protocols.

Between two pulses the collective spin is a constant label ``s`` (the tilde
value 2*kappa - N of the current Dicke index, with the sign flipped by every
pi pulse) and the oscillator evolves under

    H_s = hbar*Omega*(a - g*s)^dagger (a - g*s) - eta*s^2 ,   g = chi/(2*x0).

The propagator from t = 0 factorises as exp(-i*theta) D(g*zeta) R(t), where
D is a displacement, R = exp(-i*Omega*t*a^dagger a) and zeta is the
dimensionless trajectory whose real part times chi is the position. All
quantities are linear (zeta) or quadratic (theta) in the segment labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import HBAR
from .errors import CapacityError, ConsistencyError, InvalidArgumentError

RECOMBINATION_TOL = 1e-9

# label pattern of each collective index across the five modified-protocol segments
MODIFIED_PATTERN = np.array(
    [
        [1.0, 0.0, 0.0, 0.0, 0.0],  # kappa
        [0.0, 1.0, -1.0, 1.0, 0.0],  # alpha (sign flipped between the two pi pulses)
        [0.0, 0.0, 0.0, 0.0, 1.0],  # beta
    ]
)
MINIMAL_PATTERN = np.array([[1.0, -1.0, 1.0]])


def t2_of_t1(t1: float, Omega: float) -> float:
    """Second free-evolution interval that closes the minimal protocol loop."""
    a = Omega * t1
    if not (0.0 < a <= math.pi * (1.0 + 1e-12)):
        raise InvalidArgumentError("t1 must lie in (0, pi/Omega]")
    a = min(a, math.pi)
    return 2.0 / Omega * math.asin(math.sin(a) / math.sqrt(5.0 - 4.0 * math.cos(a)))


@dataclass(frozen=True)
class ProtocolTimes:
    """Pulse timing. ``t2`` is used by the minimal protocol, ``t21``/``t22`` by the modified one."""

    kind: str
    t1: float
    t21: float = 0.0
    t22: float = 0.0
    t2: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("minimal", "modified"):
            raise InvalidArgumentError(f"unknown protocol kind {self.kind!r}")
        for name in ("t1", "t21", "t22", "t2"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be non-negative")

    @classmethod
    def minimal(cls, t1: float, Omega: float) -> "ProtocolTimes":
        return cls("minimal", t1, t2=t2_of_t1(t1, Omega))

    @classmethod
    def modified(cls, t21: float, Omega: float, t22: float | None = None,
                 t1: float | None = None) -> "ProtocolTimes":
        """Modified timing; missing intervals are filled from the closing conditions."""
        if t22 is None:
            t22 = t2_of_t1(t21, Omega)
        if t1 is None:
            t1 = math.pi / Omega - 2.0 * t21 - t22
            if t1 <= 0:
                raise InvalidArgumentError("closing condition gives t1 <= 0; shorten t21")
        return cls("modified", t1, t21=t21, t22=t22)

    @classmethod
    def from_phases(cls, kind: str, Omega: float, omega_t1: float | None = None,
                    omega_t21: float | None = None, omega_t22: float | None = None) -> "ProtocolTimes":
        """Timing given as dimensionless phases Omega*t."""
        if kind == "minimal":
            return cls.minimal(omega_t1 / Omega, Omega)
        conv = lambda v: None if v is None else v / Omega  # noqa: E731
        return cls.modified(conv(omega_t21), Omega, conv(omega_t22), conv(omega_t1))

    @property
    def T_tot(self) -> float:
        if self.kind == "minimal":
            return 2.0 * self.t1 + self.t2
        return 2.0 * self.t1 + 2.0 * self.t21 + self.t22

    @property
    def durations(self) -> np.ndarray:
        if self.kind == "minimal":
            return np.array([self.t1, self.t2, self.t1])
        return np.array([self.t1, self.t21, self.t22, self.t21, self.t1])

    @property
    def pattern(self) -> np.ndarray:
        return MINIMAL_PATTERN if self.kind == "minimal" else MODIFIED_PATTERN

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.durations)))

    def recombination_residual(self, Omega: float) -> float:
        """Largest |zeta(T_tot)| over the index combinations that should recombine."""
        w = endpoint_weights(self, Omega)
        if self.kind == "minimal":
            return float(abs(w[0]))
        # alpha block must close on its own; beta = kappa must cancel
        return float(max(abs(w[1]), abs(w[0] + w[2])))


@dataclass(frozen=True)
class TrajectoryPoint:
    zeta: complex
    phase: float


# ---------------------------------------------------------------------------
# segment algebra


def branch_zeta(labels: Sequence[float], durations: Sequence[float], Omega: float,
                seg: int, t: float | np.ndarray) -> complex | np.ndarray:
    """Closed-form expression of branch ``seg`` evaluated at time ``t``.

    zeta(t) = s_k + sum_{j<=k} (s_{j-1} - s_j) exp(-i Omega (t - T_{j-1})),
    with s_0 = 0 and T_{j-1} the start of segment j. The expression may be
    evaluated outside its own interval, which is how branch continuity is checked.
    """
    starts = np.concatenate(([0.0], np.cumsum(durations)[:-1]))
    s_prev = 0.0
    z = labels[seg] + 0j
    t = np.asarray(t, dtype=float)
    for j in range(seg + 1):
        z = z + (s_prev - labels[j]) * np.exp(-1j * Omega * (t - starts[j]))
        s_prev = labels[j]
    return z if z.ndim else complex(z)


def _segment_index(durations: np.ndarray, t: float) -> int:
    ends = np.cumsum(durations)
    k = int(np.searchsorted(ends, t, side="left"))
    return min(k, len(durations) - 1)


def propagate(labels: Sequence[float], durations: Sequence[float], Omega: float, g: float,
              eta_over_hbar: float, t: float | None = None) -> tuple[complex, float]:
    """Compose segment propagators up to time ``t`` (default: the end).

    Returns (zeta, theta) with the branch amplitude carrying exp(-i theta).
    """
    z = 0j
    theta = 0.0
    elapsed = 0.0
    total = float(np.sum(durations))
    t_stop = total if t is None else float(t)
    for s, tau in zip(labels, durations):
        if elapsed >= t_stop:
            break
        dt = min(tau, t_stop - elapsed)
        e = complex(math.cos(Omega * dt), -math.sin(Omega * dt))
        lam_prev = g * z
        lam_seg = g * s * (1.0 - e)
        theta += (g * s) ** 2 * math.sin(Omega * dt) - eta_over_hbar * s * s * dt
        theta -= (lam_seg * lam_prev.conjugate() / e).imag
        z = z * e + s * (1.0 - e)
        elapsed += dt
    return z, theta


def endpoint_weights(times: ProtocolTimes, Omega: float) -> np.ndarray:
    """zeta(T_tot) per unit of each collective index (kappa[, alpha, beta])."""
    d = times.durations
    return np.array([propagate(p, d, Omega, 0.0, 0.0)[0] for p in times.pattern])


def phase_form(times: ProtocolTimes, g: float, eta_over_hbar: float, Omega: float) -> np.ndarray:
    """Symmetric matrix A with theta(T_tot) = v^T A v for tilde index vector v."""
    pat = times.pattern
    d = times.durations
    n = pat.shape[0]
    diag = [propagate(pat[i], d, Omega, g, eta_over_hbar)[1] for i in range(n)]
    A = np.diag(diag)
    for i in range(n):
        for j in range(i + 1, n):
            both = propagate(pat[i] + pat[j], d, Omega, g, eta_over_hbar)[1]
            A[i, j] = A[j, i] = 0.5 * (both - diag[i] - diag[j])
    return A


def _check_window(t: float, times: ProtocolTimes) -> None:
    if not (0.0 <= t <= times.T_tot * (1.0 + 1e-12)):
        raise InvalidArgumentError(f"t={t!r} outside the protocol window [0, {times.T_tot!r}]")


def _eval(labels: np.ndarray, t: float, times: ProtocolTimes, derived) -> TrajectoryPoint:
    _check_window(t, times)
    d = times.durations
    seg = _segment_index(d, t)
    z = branch_zeta(labels, d, derived.Omega, seg, t)
    _, theta = propagate(labels, d, derived.Omega, derived.g, derived.eta / HBAR, t)
    return TrajectoryPoint(complex(z), float(theta))


def minimal_trajectory(kappa_tilde: float, t: float, times: ProtocolTimes, derived) -> TrajectoryPoint:
    if times.kind != "minimal":
        raise InvalidArgumentError("minimal_trajectory needs minimal protocol times")
    return _eval(kappa_tilde * MINIMAL_PATTERN[0], t, times, derived)


def modified_labels(kappa_t: float, alpha_t: float, beta_t: float) -> np.ndarray:
    return np.array([kappa_t, alpha_t, beta_t]) @ MODIFIED_PATTERN


def modified_trajectory(kappa_t: float, alpha_t: float, beta_t: float, t: float,
                        times: ProtocolTimes, derived) -> TrajectoryPoint:
    if times.kind != "modified":
        raise InvalidArgumentError("modified_trajectory needs modified protocol times")
    return _eval(modified_labels(kappa_t, alpha_t, beta_t), t, times, derived)


def unit_positions(times: ProtocolTimes, Omega: float, t: np.ndarray) -> np.ndarray:
    """Re zeta(t) per unit of each collective index, shape (n_index, len(t))."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = times.durations
    bounds = np.cumsum(d)
    seg = np.minimum(np.searchsorted(bounds, t, side="left"), len(d) - 1)
    out = np.empty((times.pattern.shape[0], t.size))
    for i, pat in enumerate(times.pattern):
        vals = np.empty(t.size, dtype=complex)
        for k in range(len(d)):
            m = seg == k
            if m.any():
                vals[m] = branch_zeta(pat, d, Omega, k, t[m])
        out[i] = vals.real
    return out


# ---------------------------------------------------------------------------
# widths


def free_position_variance(t: float, N: int, chi: float, thermal_var: float, Omega: float) -> float:
    """Thermal variance plus the spread of the binomially weighted trajectory fan."""
    if t < 0:
        raise InvalidArgumentError("t must be non-negative")
    growth = 2.0 * chi * math.sin(0.5 * Omega * t) ** 2 * math.sqrt(N)
    return thermal_var + growth * growth


@dataclass(frozen=True)
class WidthResult:
    dx: float
    gaussian_regime: bool


GAUSSIAN_RATIO = 10.0


def width_modified(N: int, c_kappa: float, c_alpha: float) -> WidthResult:
    if N < 1:
        raise InvalidArgumentError("N must be at least 1")
    term_k = c_kappa**2 * N / 4.0
    term_a = c_alpha**2 * (N + N * N) / 8.0
    return WidthResult(math.sqrt(term_k + term_a), term_k >= GAUSSIAN_RATIO * term_a)


BRUTE_FORCE_MAX_N = 60


def width_brute_force(N: int, c_kappa: float, c_alpha: float) -> float:
    """Standard deviation of c_kappa*kappa + c_alpha*alpha over the (kappa, alpha) table."""
    from .dicke import trajectory_probabilities

    if N > BRUTE_FORCE_MAX_N:
        raise CapacityError(f"brute-force width limited to N <= {BRUTE_FORCE_MAX_N}")
    P = trajectory_probabilities(N)  # P[kappa, alpha]
    idx = np.arange(N + 1, dtype=float)
    x = c_kappa * idx[:, None] + c_alpha * idx[None, :]
    mean = float(np.sum(P * x))
    return math.sqrt(float(np.sum(P * (x - mean) ** 2)))


@dataclass(frozen=True)
class WidthCoefficients:
    c_kappa: float
    c_alpha: float
    linearity_residual: float


def width_coefficients(t: float, times: ProtocolTimes, derived, tol: float = 1e-10) -> WidthCoefficients:
    """Position per unit kappa and per unit alpha (not tilde) at time ``t``.

    Valid after the second pulse and before the last one, where the position
    does not yet depend on beta.
    """
    if times.kind != "modified":
        raise InvalidArgumentError("width coefficients are defined for the modified protocol")
    b = times.boundaries
    if not (b[1] <= t <= b[4]):
        raise InvalidArgumentError("t must lie between the second and the last pulse")

    def x(kap, alp):
        # kappa, alpha -> tilde values with N = 0 offsets removed (differences only)
        return derived.chi * modified_trajectory(2 * kap, 2 * alp, 0, t, times, derived).zeta.real

    x0 = x(0, 0)
    ck = x(1, 0) - x0
    ca = x(0, 1) - x0
    both = x(1, 1) - x0
    scale = max(abs(ck), abs(ca), 1e-300)
    resid = abs(both - ck - ca) / scale
    if resid > tol:
        raise ConsistencyError(f"position not linear in (kappa, alpha): residual {resid:.3g}")
    return WidthCoefficients(ck, ca, resid)


def trajectory_rows(times: ProtocolTimes, derived, index_sets, n_t: int = 201):
    """Rows (t, kappa, alpha, beta, re_zeta, im_zeta, phase) for CSV dumps.

    ``index_sets`` holds tilde triples; the minimal protocol uses only the first entry.
    """
    rows = []
    ts = np.linspace(0.0, times.T_tot, n_t)
    for triple in index_sets:
        k, a, bta = triple
        for t in ts:
            t = min(float(t), times.T_tot)
            if times.kind == "minimal":
                p = minimal_trajectory(k, t, times, derived)
            else:
                p = modified_trajectory(k, a, bta, t, times, derived)
            rows.append((t, k, a, bta, p.zeta.real, p.zeta.imag, p.phase))
    return rows
