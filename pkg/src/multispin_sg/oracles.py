"""Brute-force references on the full 2^N spin space.

These routines never touch the Dicke-basis formulas or the segment algebra of
:mod:`multispin_sg.trajectories`: spins are explicit tensor products, the
oscillator is a truncated Fock space propagated with matrix exponentials, and
trajectories for the decoherence exponents come from real rotation matrices
integrated with QUADPACK.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache, reduce

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from .constants import HBAR
from .errors import CapacityError

DENSE_MAX_N = 8


def single_spin_rotation(angle: float) -> np.ndarray:
    """exp(-i angle sigma_y / 2) in the basis (down, up)."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]])


def collective_rotation(N: int, angle: float) -> np.ndarray:
    if N > DENSE_MAX_N:
        raise CapacityError(f"dense spin operators limited to N <= {DENSE_MAX_N}")
    r = single_spin_rotation(angle)
    return reduce(np.kron, [r] * N)


@lru_cache(maxsize=None)
def up_counts(N: int) -> np.ndarray:
    """Number of up spins of each computational basis state (first spin most significant)."""
    states = np.arange(2**N)
    return np.array([bin(s).count("1") for s in states])


def magnetisation(N: int) -> np.ndarray:
    return 2.0 * up_counts(N) - N


def dicke_vectors(N: int) -> np.ndarray:
    """Columns are normalised symmetric states |kappa>, kappa = 0..N."""
    k = up_counts(N)
    V = np.zeros((2**N, N + 1))
    for kappa in range(N + 1):
        m = k == kappa
        V[m, kappa] = 1.0 / math.sqrt(m.sum())
    return V


def symmetric_restriction(N: int, angle: float) -> np.ndarray:
    V = dicke_vectors(N)
    return V.T @ collective_rotation(N, angle) @ V


def collective_sigma_x(N: int) -> np.ndarray:
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    eye = np.eye(2)
    out = np.zeros((2**N, 2**N))
    for n in range(N):
        ops = [eye] * N
        ops[n] = sx
        out += reduce(np.kron, ops)
    return out


# ---------------------------------------------------------------------------
# classical trajectories by real rotations


def _segment_labels(times, n_idx):
    """Segment label pattern of the modified protocol, rebuilt from the pulse sequence."""
    # kappa drives segment 1, alpha segments 2-4 with the pi-pulse sign flip, beta segment 5
    pat = np.zeros((n_idx, 5))
    pat[0, 0] = 1
    pat[1, 1], pat[1, 2], pat[1, 3] = 1, -1, 1
    pat[2, 4] = 1
    return pat


def _positions_rotation(label_rows: np.ndarray, durations, Omega: float, t: float) -> np.ndarray:
    """Re zeta(t) for many label sequences by rotating (x, p) about each segment's centre."""
    x = np.zeros(label_rows.shape[0])
    p = np.zeros(label_rows.shape[0])
    start = 0.0
    for j, tau in enumerate(durations):
        s = label_rows[:, j]
        dt = min(tau, max(t - start, 0.0))
        c, sn = math.cos(Omega * dt), math.sin(Omega * dt)
        # dzeta/dt = -i Omega (zeta - s): rotation of (x - s, p) by -Omega dt
        xr, pr = x - s, p
        x = s + c * xr + sn * pr
        p = -sn * xr + c * pr
        start += tau
        if t <= start:
            break
    return x


def lambda_oracle(delta_labels: np.ndarray, durations, Omega: float, chi: float, r_csl: float,
                  xi_val: float) -> np.ndarray:
    """xi * int (1 - exp(-dX^2 / 4 r^2)) dt for label-difference rows, via adaptive quadrature."""
    a = (chi / (2.0 * r_csl)) ** 2
    bounds = np.concatenate(([0.0], np.cumsum(durations)))
    total = np.zeros(delta_labels.shape[0])
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi <= lo:
            continue

        def f(t):
            x = _positions_rotation(delta_labels, durations, Omega, t)
            return -np.expm1(-a * x * x)

        val, _ = quad_vec(f, lo, hi, epsabs=1e-15, epsrel=1e-12, norm="max")
        total += val
    return xi_val * total


# ---------------------------------------------------------------------------
# modified protocol with a Fock-space oscillator


def _fock_unitary(s: float, tau: float, Omega: float, g: float, eta_over_hbar: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    a = np.diag(np.sqrt(n[1:]), 1)
    H = Omega * (np.diag(n.astype(float)) - g * s * (a + a.T) + (g * s) ** 2 * np.eye(dim))
    H -= eta_over_hbar * s * s * np.eye(dim)
    return expm(-1j * tau * H)


def _thermal_sqrt(n_bar: float, dim: int) -> np.ndarray:
    if n_bar == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        q = n_bar / (n_bar + 1.0)
        p = (1 - q) * q ** np.arange(dim)
    return np.sqrt(p)


def modified_ratio_dense(N: int, times, derived, xi_val: float, r_csl: float, n_bar: float,
                         fock_dim: int = 80, eta: float | None = None) -> float:
    """Magnetisation ratio of the modified protocol from explicit spin and Fock states.

    Every branch history (magnetisation during each of the five segments) gets
    a 2^N spin vector and an oscillator propagator; coherences between
    histories are damped by the oracle decoherence exponents.
    """
    if N > 5:
        raise CapacityError("dense modified-protocol oracle limited to N <= 5")
    Om = derived.Omega
    g = derived.chi / (2.0 * derived.x0)
    eoh = (derived.eta if eta is None else eta) / HBAR
    dur = [times.t1, times.t21, times.t22, times.t21, times.t1]
    mag = magnetisation(N)
    sectors = sorted(set(mag.tolist()))
    R1 = collective_rotation(N, math.pi / 2)
    Rpi = collective_rotation(N, math.pi)
    R3 = collective_rotation(N, 3 * math.pi / 2)
    pulses_before = [R1, R1, Rpi, Rpi, R3]  # pulse preceding each segment

    psi0 = np.zeros(2**N)
    psi0[0] = 1.0  # all spins down
    # enumerate histories, pruning those with vanishing amplitude
    branches = [((), psi0.astype(complex))]
    for seg in range(5):
        nxt = []
        for hist, v in branches:
            w = pulses_before[seg] @ v
            for m in sectors:
                proj = np.where(mag == m, w, 0.0)
                if np.linalg.norm(proj) > 1e-13:
                    nxt.append((hist + (m,), proj))
        branches = nxt
    hist = np.array([h for h, _ in branches], dtype=float)
    vecs = np.array([v for _, v in branches])

    # oscillator: U_h sqrt(rho_th) for each history
    ucache = {}
    sq = _thermal_sqrt(n_bar, fock_dim)
    mats = []
    for h in hist:
        U = np.eye(fock_dim, dtype=complex)
        for seg, m in enumerate(h):
            key = (seg, m)
            if key not in ucache:
                ucache[key] = _fock_unitary(m, dur[seg], Om, g, eoh, fock_dim)
            U = ucache[key] @ U
        mats.append((U * sq[None, :]).ravel())
    mats = np.array(mats)
    W = mats @ mats.conj().T  # W[h, h'] = Tr(U_h rho U_h'^dagger)

    # decoherence exponents, deduplicated over label differences
    diff = hist[:, None, :] - hist[None, :, :]
    flat = diff.reshape(-1, 5)
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    lam = lambda_oracle(uniq, dur, Om, derived.chi, r_csl, xi_val) if xi_val > 0 else np.zeros(len(uniq))
    L = lam[inv.ravel()].reshape(diff.shape[:2])

    Zop = np.diag(mag.astype(float))
    O = R1.T @ Zop @ R1
    G = vecs.conj() @ O @ vecs.T  # G[h', h] = <v_h'|O|v_h>
    val = np.sum(G.T * W * np.exp(-L))

    # reference: same pulse sequence without any motion
    v = R3 @ Rpi @ Rpi @ R1 @ R1 @ psi0
    ref = float(v @ O @ v)
    return float(val.real / ref)


# ---------------------------------------------------------------------------
# dephasing during the short modified timing (t1 = pi/Omega, t21 = pi/Omega, t22 = 0)


def dephasing_ratio_dense(N: int, Gamma: float, Omega: float, chi_over_x0: float, n_bar: float) -> float:
    """Magnetisation ratio with single-spin pure dephasing between the pulses.

    Uses the Lindblad-consistent Kraus set, which multiplies each spin
    coherence by exp(-Gamma t); the oscillator enters only through the
    endpoint displacement (chi/x0)(beta~ - kappa~), with branch phases tuned away.
    """
    if N > 6:
        raise CapacityError("dephasing oracle limited to N <= 6")
    k = up_counts(N)
    ham = np.array([[bin(a ^ b).count("1") for b in range(2**N)] for a in range(2**N)])
    R1 = collective_rotation(N, math.pi / 2)
    R3 = collective_rotation(N, 3 * math.pi / 2)
    mag = 2 * k - N
    O = R1.T @ np.diag(mag.astype(float)) @ R1
    psi = R1[:, 0]
    rho0 = np.outer(psi, psi)
    T1 = math.pi / Omega

    def dephase(R, t):
        return R * np.exp(-Gamma * t * ham)

    total = 0.0
    ref = 0.0
    for kap, kap2 in itertools.product(range(N + 1), repeat=2):
        mk, mk2 = (k == kap), (k == kap2)
        R = np.where(mk[:, None] & mk2[None, :], rho0, 0.0)
        if not R.any():
            continue
        R = dephase(R, T1)
        R = R1 @ R @ R1.T
        R = dephase(R, 2 * T1)
        R = R3 @ R @ R3.T
        R = dephase(R, T1)
        for b, b2 in itertools.product(range(N + 1), repeat=2):
            mb, mb2 = (k == b), (k == b2)
            block = np.where(mb[:, None] & mb2[None, :], R, 0.0)
            d = (2 * b - N) - (2 * kap - N)
            d2 = (2 * b2 - N) - (2 * kap2 - N)
            w = math.exp(-((chi_over_x0 * (d - d2)) ** 2) * (0.5 + n_bar))
            total += float(np.sum(O * block.T)) * w
    # reference without dephasing or motion
    v = R3 @ R1 @ psi
    ref = float(v @ O @ v)
    return total / ref
