"""Collapse-model localisation, pair decoherence exponents and interferometer observables."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .constants import HBAR, M0
from .dicke import (
    binomial_log_weights,
    half_pi_matrix,
    initial_amplitudes,
    ladder_up,
    three_half_pi_matrix,
)
from .errors import CapacityError, InvalidArgumentError, NumericError
from .trajectories import ProtocolTimes, endpoint_weights, phase_form

# ---------------------------------------------------------------------------
# localisation strength

_FF_SERIES_X = 0.1
# f(x) = sum_j 6 (-1)^j (j+1)/(j+3)! x^(2j)
_FF_COEFFS = [6.0 * (-1) ** j * (j + 1) / math.factorial(j + 3) for j in range(10)]


@dataclass(frozen=True)
class CSLParams:
    lambda_csl: float
    r_csl: float

    def __post_init__(self) -> None:
        if not (self.lambda_csl >= 0 and self.r_csl > 0):
            raise InvalidArgumentError("need lambda_csl >= 0 and r_csl > 0")


GRW = CSLParams(1e-16, 1e-7)


def form_factor(x: float) -> float:
    """Geometric suppression of the collapse rate for a homogeneous sphere, f(0) = 1."""
    if x < 0:
        raise InvalidArgumentError("form factor argument must be non-negative")
    if x < _FF_SERIES_X:
        y = x * x
        acc = 0.0
        for c in reversed(_FF_COEFFS):
            acc = acc * y + c
        return acc
    y = x * x
    # y * bracket written with expm1 to limit cancellation near the seam
    h = (y + 2.0) * math.expm1(-y) + 2.0 * y
    return 6.0 * h / (y * y * y)


def xi(csl: CSLParams, mass: float, radius: float) -> float:
    if not (mass > 0 and radius > 0):
        raise InvalidArgumentError("mass and radius must be positive")
    return (mass / M0) ** 2 * csl.lambda_csl * form_factor(radius / csl.r_csl)


def xi_bound_from_measurement(R_exp: float, T_tot: float) -> float:
    """Largest localisation rate compatible with a measured visibility R_exp."""
    if not (0.0 < R_exp <= 1.0):
        raise InvalidArgumentError("R_exp must lie in (0, 1]")
    if not T_tot > 0:
        raise InvalidArgumentError("T_tot must be positive")
    return -math.log(R_exp) / T_tot


# ---------------------------------------------------------------------------
# quadrature of the pair exponent

GL_ORDER = 16
PANELS_PER_PERIOD = 4  # 64 nodes per trap period at the base level
MAX_LEVEL = 14


@lru_cache(maxsize=None)
def _gl(order: int):
    return np.polynomial.legendre.leggauss(order)


def quadrature_grid(times: ProtocolTimes, Omega: float, level: int = 0):
    """Gauss-Legendre nodes and weights aligned with the segment boundaries."""
    x, w = _gl(GL_ORDER)
    nodes, weights = [], []
    start = 0.0
    period = 2.0 * math.pi / Omega
    for d in times.durations:
        if d > 0:
            n_p = max(1, math.ceil(PANELS_PER_PERIOD * (2**level) * d / period))
            edges = np.linspace(start, start + d, n_p + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            nodes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
            weights.append((half[:, None] * w[None, :]).ravel())
        start += d
    return np.concatenate(nodes), np.concatenate(weights)


def _unit_positions_on(times: ProtocolTimes, Omega: float, level: int):
    from .trajectories import unit_positions

    t, w = quadrature_grid(times, Omega, level)
    return unit_positions(times, Omega, t), w


def _split(arr: np.ndarray, workers: int):
    if workers <= 1 or len(arr) < 2 * workers:
        return [arr]
    return np.array_split(arr, workers)


def lambda_table(deltas, times: ProtocolTimes, derived, csl: CSLParams, rel_tol: float = 1e-9,
                 workers: int = 1, backend: str | None = None) -> np.ndarray:
    """Pair exponents for rows of tilde-index differences.

    Each row of ``deltas`` holds the difference of the two trajectories' tilde
    indices (one column for the minimal protocol, three for the modified one).
    Panels are doubled until consecutive levels agree to ``rel_tol``.
    """
    deltas = np.atleast_2d(np.asarray(deltas, dtype=float))
    if deltas.shape[1] != times.pattern.shape[0]:
        raise InvalidArgumentError("delta rows do not match the protocol's index count")
    xi_val = xi(csl, derived.mass, derived.radius)
    out = np.zeros(deltas.shape[0])
    if xi_val == 0 or deltas.shape[0] == 0:
        return out
    a = (derived.chi / (2.0 * csl.r_csl)) ** 2
    floor = 1e-15 * xi_val * times.T_tot

    def evaluate(rows, level):
        U, w = _unit_positions_on(times, derived.Omega, level)
        parts = _split(rows, workers)
        if len(parts) == 1:
            return kernels.lambda_batch(rows, U, w, a, backend)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(lambda p: kernels.lambda_batch(p, U, w, a, backend), parts))
        return np.concatenate(res)

    pending = np.arange(deltas.shape[0])
    level = 0
    prev = evaluate(deltas, level)
    while pending.size:
        level += 1
        if level > MAX_LEVEL:
            worst = int(pending[0])
            raise NumericError(
                f"pair exponent quadrature did not converge after {MAX_LEVEL} refinements "
                f"(delta={deltas[worst].tolist()}, last two levels {prev[0]!r}, {cur[0]!r})"
            )
        cur = evaluate(deltas[pending], level)
        done = np.abs(cur - prev) <= rel_tol * np.abs(cur) + floor
        out[pending[done]] = cur[done]
        pending = pending[~done]
        prev = cur[~done]
    return xi_val * out


def lambda_pair(traj_a, traj_b, times: ProtocolTimes, derived, csl: CSLParams) -> float:
    """Decoherence exponent between two trajectories given by their tilde indices."""
    a = np.atleast_1d(np.asarray(traj_a, dtype=float))
    b = np.atleast_1d(np.asarray(traj_b, dtype=float))
    if a.shape != b.shape or a.size != times.pattern.shape[0]:
        raise InvalidArgumentError("trajectory selectors must match the protocol's index count")
    return float(lambda_table((a - b)[None, :], times, derived, csl)[0])


def _segment_square_integral(labels, durations, Omega) -> float:
    """Exact integral of (Re zeta)^2 over the protocol for the given segment labels."""
    total = 0.0
    z0 = 0j
    for s, tau in zip(labels, durations):
        B = z0 - s  # zeta = s + B exp(-i Omega u) on this segment
        e1 = complex(math.cos(Omega * tau), -math.sin(Omega * tau))
        e2 = e1 * e1
        lin = (B * (1 - e1) / (1j * Omega)).real
        quad = 0.5 * (abs(B) ** 2 * tau + (B * B * (1 - e2) / (2j * Omega)).real)
        total += s * s * tau + 2 * s * lin + quad
        z0 = s + B * e1
    return total


def lambda_small_separation(delta, times: ProtocolTimes, derived, csl: CSLParams) -> float:
    """Quadratic (small-separation) limit xi/(4 r^2) * int dX^2 dt, integrated analytically."""
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    labels = delta @ times.pattern
    integral = _segment_square_integral(labels, times.durations, derived.Omega)
    return xi(csl, derived.mass, derived.radius) * derived.chi**2 / (4 * csl.r_csl**2) * integral


# ---------------------------------------------------------------------------
# nearest-neighbour closed form


def _bracket_derived(a: float, b: float) -> float:
    """4 Omega * int (Re zeta)^2 dt for unit labels (1, -1, 1), a = Omega t1, b = Omega t2."""
    c, s = math.cos, math.sin
    return (28 * a + 14 * b - 8 * a * c(a) - 8 * b * c(a) - 16 * a * c(b) + 8 * a * c(a + b)
            - 24 * s(b) - 28 * s(a) + 28 * s(a + b) + 4 * s(2 * a) - 16 * s(2 * a + b)
            + 4 * s(2 * a + 2 * b) + 4 * s(3 * a + b) - 4 * s(3 * a + 2 * b) + s(4 * a + 2 * b))


def _bracket_printed(a: float, b: float) -> float:
    """Reference trigonometric bracket, kept for comparison (secular part agrees, oscillatory part not)."""
    c, s = math.cos, math.sin
    return (14 * (2 * a + b) - 8 * (a + b) * c(a) + 8 * a * (-2 * c(b) + c(a + b)) + 8 * s(a)
            - 11 * s(2 * a) + 4 * s(3 * a) - s(4 * a) + 24 * s(2 * (a + b)) - 4 * s(3 * (a + b))
            + 3 * s(4 * (a + b)) - 8 * s(2 * a + b) + 5 * s(2 * (2 * a + b)) - 16 * s(a + 2 * b)
            - 4 * s(2 * (a + 2 * b)) - 12 * s(3 * a + 2 * b) + 8 * s(2 * a + 3 * b)
            - 8 * s(4 * a + 3 * b) + 4 * s(5 * a + 3 * b) + 4 * s(3 * a + 4 * b)
            - 4 * s(5 * a + 4 * b) + s(6 * a + 4 * b))


def bracket_secular(a: float, b: float) -> float:
    """Non-oscillating part shared by both brackets."""
    return 28 * a + 14 * b


@dataclass(frozen=True)
class GammaResult:
    gamma: float
    valid: bool
    max_separation_over_r: float


def gamma_closed_form(times: ProtocolTimes, derived, csl: CSLParams, variant: str = "derived") -> GammaResult:
    """Nearest-neighbour exponent Lambda_{kappa, kappa+1} of the minimal protocol.

    Small-separation limit; ``valid`` is False when neighbouring trajectories
    separate by more than 5% of the collapse length. ``variant='printed'``
    evaluates the reference bracket with its unit-label prefactor.
    """
    if times.kind != "minimal":
        raise InvalidArgumentError("closed form applies to the minimal protocol")
    Om = derived.Omega
    a, b = Om * times.t1, Om * times.t2
    xi_val = xi(csl, derived.mass, derived.radius)
    pref = xi_val * derived.chi**2 / (4.0 * csl.r_csl**2) / (4.0 * Om)
    if variant == "derived":
        # neighbouring Dicke indices differ by 2 in the tilde label
        gamma = 4.0 * pref * _bracket_derived(a, b)
    elif variant == "printed":
        gamma = pref * _bracket_printed(a, b)
    else:
        raise InvalidArgumentError(f"unknown variant {variant!r}")
    sep = 2.0 * derived.chi * 2.0 / (2.0 * csl.r_csl)  # |Re zeta| <= 2 per unit label
    return GammaResult(gamma, sep < 0.05, sep)


# ---------------------------------------------------------------------------
# minimal protocol observables


@dataclass(frozen=True)
class MinimalObservables:
    M_ratio: float
    M_variance_norm: float
    parity: float
    gamma: float
    phi: float


def minimal_observables(N: int, times: ProtocolTimes, derived, csl: CSLParams,
                        phase: str = "exact", trunc_eps: float = 0.0) -> MinimalObservables:
    """Magnetisation ratio, its normalised variance and the parity observable.

    ``phase='exact'`` uses the phase unit the propagators accumulate,
    ``'printed'`` the reference expression with factor 1 and a + sign on eta.
    """
    from .params import geometric_phase_unit, phase_unit_exact

    if N < 1:
        raise InvalidArgumentError("N must be at least 1")
    if times.kind != "minimal":
        raise InvalidArgumentError("minimal protocol times required")
    fn = phase_unit_exact if phase == "exact" else geometric_phase_unit
    phi = fn(derived, times.t1, times.T_tot)
    gamma = lambda_pair([2.0], [0.0], times, derived, csl)
    c4, c8 = math.cos(4 * phi), math.cos(8 * phi)
    M = math.exp(-gamma) * c4 ** (N - 1)
    var = (1.0 / (2 * N)) * (1 - math.exp(-4 * gamma) * c8**N) + 0.5 * (
        1 - 2 * math.exp(-2 * gamma) * c4 ** (2 * N - 2) + math.exp(-4 * gamma) * c8 ** (N - 2))
    # parity sums binomial weights; labels with weight below trunc_eps are dropped
    kap, logw = binomial_log_weights(N, trunc_eps)
    deltas = (2.0 * (2 * kap - N))[:, None]
    lam = lambda_table(deltas, times, derived, csl)
    parity = math.fsum(np.exp(logw - lam).tolist())
    return MinimalObservables(M, var, parity, gamma, phi)


# ---------------------------------------------------------------------------
# thermal overlaps


def thermal_overlap(zeta_i: complex, zeta_j: complex, n_bar: float) -> complex:
    """Tr[D(zeta_i) rho_th D(zeta_j)^dagger] for displacement amplitudes zeta_i, zeta_j."""
    if n_bar < 0:
        raise InvalidArgumentError("n_bar must be non-negative")
    phi = 0.5 * (zeta_j.conjugate() * zeta_i - zeta_j * zeta_i.conjugate())
    d = zeta_i - zeta_j
    return complex(np.exp(phi - (d.real**2 + d.imag**2) * (0.5 + n_bar)))


# ---------------------------------------------------------------------------
# modified protocol magnetisation


DIRECT_MAX_N = 40
FFT_MAX_N = 2048
CLOSURE_TOL = 1e-9


@dataclass(frozen=True)
class ModifiedResult:
    ratio: float
    truncated_weight: float
    path: str
    n_lambda: int
    meta: dict = field(default_factory=dict, compare=False)


def _closing(times: ProtocolTimes, derived, A: np.ndarray, w: np.ndarray) -> bool:
    cross = max(abs(A[0, 1]), abs(A[0, 2]), abs(A[1, 2]))
    return (abs(w[1]) < CLOSURE_TOL and abs(w[0] + w[2]) < CLOSURE_TOL and cross < CLOSURE_TOL)


def _branch_amplitudes(N: int, phases: np.ndarray | None):
    """amp[beta, kappa, alpha] = Q[beta, alpha] P[alpha, kappa] c[kappa] (times phases)."""
    c = initial_amplitudes(N)
    P = half_pi_matrix(N).entries
    Q = three_half_pi_matrix(N).entries
    amp = Q[:, None, :] * (P.T * c[:, None])[None, :, :]
    if phases is not None:
        amp = amp * phases
    return amp


def _ideal_norm(N: int) -> float:
    c = initial_amplitudes(N)
    P = half_pi_matrix(N).entries
    Q = three_half_pi_matrix(N).entries
    a = Q @ (P @ c)
    return 2.0 * float(np.sum(ladder_up(N) * a[:-1] * a[1:]))


def modified_M_ratio(N: int, times: ProtocolTimes, derived, csl: CSLParams, trunc_eps: float = 1e-12,
                     mode: str = "tuned", workers: int = 1, n_bar: float | None = None,
                     force_direct: bool = False, backend: str | None = None) -> ModifiedResult:
    """Final-to-initial magnetisation ratio of the modified protocol.

    ``mode='tuned'`` drops the accumulated branch phases (timing chosen so they
    are multiples of pi); ``mode='physical'`` keeps them. Times that close the
    alpha block and recombine beta = kappa use a Fourier-space correlation of
    the branch amplitudes; other times use the direct six-index sum, which is
    limited to N <= 40.
    """
    if times.kind != "modified":
        raise InvalidArgumentError("modified protocol times required")
    if mode not in ("tuned", "physical"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if N < 1:
        raise InvalidArgumentError("N must be at least 1")
    nb = derived.n_bar if n_bar is None else n_bar
    Om = derived.Omega
    A = phase_form(times, derived.g, derived.eta / HBAR, Om)
    w = endpoint_weights(times, Om)
    closing = _closing(times, derived, A, w)
    norm = _ideal_norm(N)

    idx = 2.0 * np.arange(N + 1) - N
    if mode == "physical":
        ph = np.exp(-1j * (A[0, 0] * idx**2)[None, :, None]
                    - 1j * (A[1, 1] * idx**2)[None, None, :]
                    - 1j * (A[2, 2] * idx**2)[:, None, None])
        if not closing:
            ph = ph * np.exp(-1j * 2 * (A[0, 1] * idx[None, :, None] * idx[None, None, :]
                                        + A[0, 2] * idx[:, None, None] * idx[None, :, None]
                                        + A[1, 2] * idx[:, None, None] * idx[None, None, :]))
    else:
        ph = None

    if closing and not force_direct:
        if N > FFT_MAX_N:
            raise CapacityError(f"modified_M_ratio supports N <= {FFT_MAX_N}")
        return _fft_path(N, times, derived, csl, trunc_eps, ph, w, nb, norm, workers, backend)
    if N > DIRECT_MAX_N:
        raise CapacityError(
            f"non-closing timings use the direct sum, limited to N <= {DIRECT_MAX_N}")
    return _direct_path(N, times, derived, csl, trunc_eps, ph, w, nb, norm, workers, backend)


def _truncate(amp: np.ndarray, eps: float):
    mag = np.abs(amp) ** 2
    cut = mag < eps * mag.max()
    dropped = float(mag[cut].sum() / mag.sum())
    amp = amp.copy()
    amp[cut] = 0
    return amp, dropped


def _direct_path(N, times, derived, csl, eps, ph, w, nb, norm, workers, backend):
    amp = _branch_amplitudes(N, ph)
    amp, dropped = _truncate(amp, eps)
    g = derived.g
    dk = np.arange(-N, N + 1)
    grid_k, grid_a = np.meshgrid(dk, dk, indexing="ij")
    deltas = np.stack([2.0 * grid_k.ravel(), 2.0 * grid_a.ravel(), np.full(grid_k.size, -2.0)], axis=1)
    lam_vals = lambda_table(deltas, times, derived, csl, workers=workers, backend=backend)
    lam = lam_vals.reshape(grid_k.shape)
    ok = np.ones_like(lam, dtype=bool)
    total = kernels.direct_sum(amp, ladder_up(N), lam, N, N, ok, g * w[0], g * w[1], g * w[2],
                               nb + 0.5, backend)
    ratio = 2.0 * total.real / norm
    return ModifiedResult(ratio, dropped, "direct", lam_vals.size,
                          {"norm": norm, "closing": False})


def _fft_path(N, times, derived, csl, eps, ph, w, nb, norm, workers, backend):
    amp = _branch_amplitudes(N, ph)
    dropped = 0.0  # amplitude truncation would not shorten the transform
    up = ladder_up(N)
    size = 2 * N + 1
    acc = np.zeros((size, size), dtype=complex)
    spec_next = np.fft.fft2(amp[0], s=(size, size))
    for b in range(N):
        spec_b = spec_next
        spec_next = np.fft.fft2(amp[b + 1], s=(size, size))
        acc += up[b] * spec_b * np.conj(spec_next)
    corr = np.fft.ifft2(acc)
    # corr[dk mod size, da mod size] = sum over branches with kappa - kappa' = dk, alpha - alpha' = da
    shift = np.arange(-N, N + 1)
    C = corr[np.ix_(shift % size, shift % size)]

    g = derived.g
    # endpoint displacement difference for (dk, da, dbeta = -1) in tilde units
    dl = g * (2.0 * shift[:, None] * w[0] + 2.0 * shift[None, :] * w[1] - 2.0 * w[2])
    thermal_exp = (np.abs(dl) ** 2) * (nb + 0.5)
    absC = np.abs(C)
    total_mass = float(absC.sum())
    keep = (absC >= eps * absC.max()) & (thermal_exp < 745.0)
    keep_idx = np.nonzero(keep)
    deltas = np.stack([2.0 * shift[keep_idx[0]], 2.0 * shift[keep_idx[1]],
                       np.full(keep_idx[0].size, -2.0)], axis=1)
    lam = lambda_table(deltas, times, derived, csl, workers=workers, backend=backend)
    F = np.exp(-lam - thermal_exp[keep_idx])
    terms = (F * C[keep_idx]).real
    ratio = 2.0 * math.fsum(terms.tolist()) / norm
    skipped = float(absC[(absC < eps * absC.max())].sum())
    trunc = dropped + 2.0 * skipped / abs(norm)
    if trunc > 10 * eps:
        warnings.warn(f"modified_M_ratio truncated weight {trunc:.3g} exceeds 10*trunc_eps",
                      RuntimeWarning, stacklevel=3)
    return ModifiedResult(ratio, trunc, "fft", int(lam.size),
                          {"norm": norm, "closing": True, "total_mass": total_mass})


# ---------------------------------------------------------------------------
# exclusion scan


@dataclass(frozen=True)
class ExclusionGrid:
    r_csl: np.ndarray
    lambda_csl: np.ndarray
    predicted_ratio: np.ndarray  # [lambda index, r index]
    excluded: np.ndarray
    R_exp: float
    boundary: list  # (r_csl, lambda_csl at which the prediction crosses R_exp)


def _log_grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if not (lo > 0 and hi > lo and steps >= 2):
        raise InvalidArgumentError("grid needs 0 < min < max and at least two steps")
    return np.logspace(math.log10(lo), math.log10(hi), int(steps))


def exclusion_scan(grid_spec, derived, times: ProtocolTimes, R_exp: float, mode: str = "lower_bound",
                   N_eval: int | None = None, trunc_eps: float = 1e-12, workers: int = 1) -> ExclusionGrid:
    """Predicted visibility over a log grid of (r_csl, lambda_csl) and the excluded cells.

    ``grid_spec`` is (r_min, r_max, lambda_min, lambda_max, steps).
    """
    if not (0 < R_exp <= 1):
        raise InvalidArgumentError("R_exp must lie in (0, 1]")
    r_min, r_max, l_min, l_max, steps = grid_spec
    rs = _log_grid(r_min, r_max, steps)
    ls = _log_grid(l_min, l_max, steps)
    T = times.T_tot
    pred = np.empty((ls.size, rs.size))
    if mode == "lower_bound":
        for j, r in enumerate(rs):
            base = xi(CSLParams(1.0, r), derived.mass, derived.radius)
            pred[:, j] = np.exp(-base * ls * T)
    elif mode == "full_evaluator":
        if N_eval is None:
            raise InvalidArgumentError("full_evaluator mode needs N_eval")
        for j, r in enumerate(rs):
            for i, lam_c in enumerate(ls):
                pred[i, j] = modified_M_ratio(N_eval, times, derived, CSLParams(lam_c, r),
                                              trunc_eps=trunc_eps, workers=workers).ratio
    else:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    excluded = pred < R_exp
    boundary = []
    xi_max = xi_bound_from_measurement(R_exp, T)
    for j, r in enumerate(rs):
        if mode == "lower_bound":
            base = xi(CSLParams(1.0, r), derived.mass, derived.radius)
            boundary.append((float(r), float(xi_max / base) if base > 0 else math.inf))
            continue
        col = pred[:, j]
        hit = np.nonzero(col < R_exp)[0]
        if hit.size == 0:
            boundary.append((float(r), math.inf))
        elif hit[0] == 0:
            boundary.append((float(r), float(ls[0])))
        else:
            i = hit[0]
            y0, y1 = col[i - 1], col[i]
            x0, x1 = math.log(ls[i - 1]), math.log(ls[i])
            frac = (y0 - R_exp) / (y0 - y1) if y0 != y1 else 0.0
            boundary.append((float(r), float(math.exp(x0 + frac * (x1 - x0)))))
    return ExclusionGrid(rs, ls, pred, excluded, R_exp, boundary)
