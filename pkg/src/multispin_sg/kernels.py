"""Hot loops with a numba implementation and a pure-numpy fallback.

``MULTISPIN_SG_KERNELS=numpy`` forces the fallback; the default uses numba
when it imports cleanly. Both paths compute identical quantities and are
cross-checked in the test suite and in ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "MULTISPIN_SG_KERNELS"

_requested = os.environ.get(ENV_FLAG, "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"{ENV_FLAG} must be 'numba' or 'numpy', got {_requested!r}")

try:
    if _requested == "numpy":
        raise ImportError
    from numba import njit, prange  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised with the env flag
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"
# The exponent kernel is a matmul plus an elementwise expm1; numpy's BLAS and
# SIMD loops beat the compiled loop (see benchmarks/bench_kernels.py), so it
# uses numba only when asked for explicitly.
LAMBDA_DEFAULT = "numpy"

# maximum exponent before a Gaussian factor is treated as exactly zero
_EXP_CUTOFF = 745.0


# ---------------------------------------------------------------------------
# decoherence exponents: sum_k w_k (1 - exp(-a (sum_i d_i U_ik)^2))


def lambda_batch_numpy(deltas: np.ndarray, U: np.ndarray, w: np.ndarray, a: float) -> np.ndarray:
    out = np.empty(deltas.shape[0])
    chunk = max(1, 2_000_000 // max(U.shape[1], 1))
    for s in range(0, deltas.shape[0], chunk):
        x = deltas[s:s + chunk] @ U
        out[s:s + chunk] = (-np.expm1(-a * x * x)) @ w
    return out


def direct_sum_numpy(amp, up, lam, dk_off, da_off, lam_ok, F_therm_args):
    """Six-index coherence sum, vectorised over the primed (kappa', alpha') pair.

    amp[beta, kappa, alpha] are complex branch amplitudes; ``lam`` is the
    decoherence table indexed by (dk + dk_off, da + da_off, 0 for dbeta=-1).
    F_therm_args = (lam_k, lam_a, lam_b, nbar_half) with lam_* the complex
    endpoint displacement per tilde unit of each index.
    """
    lk, la, lb, nb = F_therm_args
    nb1, nk, na = amp.shape
    N = nk - 1
    kt = 2.0 * np.arange(nk) - N
    at = 2.0 * np.arange(na) - N
    total = 0.0 + 0.0j
    lam_q_base = (kt[:, None] * lk + at[None, :] * la)
    for b in range(nb1 - 1):
        Ap = amp[b]
        Aq = np.conj(amp[b + 1])
        lq = lam_q_base + (2.0 * (b + 1) - N) * lb
        for k in range(nk):
            for al in range(na):
                ap = Ap[k, al]
                if ap == 0:
                    continue
                lp = kt[k] * lk + at[al] * la + (2.0 * b - N) * lb
                dl = lp - lq
                ph = 0.5 * (np.conj(lq) * lp - lq * np.conj(lp))
                th = ph - (dl.real ** 2 + dl.imag ** 2) * nb
                dk = k - np.arange(nk)
                da = al - np.arange(na)
                L = lam[(dk + dk_off)[:, None], (da + da_off)[None, :]]
                ok = lam_ok[(dk + dk_off)[:, None], (da + da_off)[None, :]]
                term = Aq * np.exp(th - L) * ok
                total += up[b] * ap * term.sum()
    return total


if HAVE_NUMBA:
    from numba import njit as _njit

    @_njit(cache=True, fastmath=False)
    def lambda_batch_numba(deltas, U, w, a):
        M = deltas.shape[0]
        n = deltas.shape[1]
        K = U.shape[1]
        out = np.empty(M)
        for m in range(M):
            acc = 0.0
            for k in range(K):
                x = 0.0
                for i in range(n):
                    x += deltas[m, i] * U[i, k]
                acc += w[k] * -np.expm1(-a * x * x)
            out[m] = acc
        return out

    @_njit(cache=True, fastmath=False)
    def direct_sum_numba(amp, up, lam, dk_off, da_off, lam_ok, lk, la, lb, nb):
        nb1, nk, na = amp.shape
        N = nk - 1
        total = 0.0 + 0.0j
        for b in range(nb1 - 1):
            for k in range(nk):
                for al in range(na):
                    ap = amp[b, k, al]
                    if ap == 0:
                        continue
                    lp = (2.0 * k - N) * lk + (2.0 * al - N) * la + (2.0 * b - N) * lb
                    inner = 0.0 + 0.0j
                    for k2 in range(nk):
                        for a2 in range(na):
                            aq = amp[b + 1, k2, a2]
                            if aq == 0:
                                continue
                            ik = k - k2 + dk_off
                            ia = al - a2 + da_off
                            if not lam_ok[ik, ia]:
                                continue
                            lq = (2.0 * k2 - N) * lk + (2.0 * a2 - N) * la + (2.0 * b + 2.0 - N) * lb
                            dl = lp - lq
                            ph = 0.5 * (np.conj(lq) * lp - lq * np.conj(lp))
                            th = ph - (dl.real * dl.real + dl.imag * dl.imag) * nb
                            inner += np.conj(aq) * np.exp(th - lam[ik, ia])
                    total += up[b] * ap * inner
        return total
else:  # pragma: no cover
    lambda_batch_numba = None
    direct_sum_numba = None


def lambda_batch(deltas, U, w, a, backend: str | None = None):
    use = backend or LAMBDA_DEFAULT
    deltas = np.ascontiguousarray(deltas, dtype=float)
    U = np.ascontiguousarray(U, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    if use == "numba" and HAVE_NUMBA:
        return lambda_batch_numba(deltas, U, w, float(a))
    return lambda_batch_numpy(deltas, U, w, float(a))


def direct_sum(amp, up, lam, dk_off, da_off, lam_ok, lk, la, lb, nb, backend: str | None = None):
    use = backend or BACKEND
    amp = np.ascontiguousarray(amp, dtype=complex)
    if use == "numba" and HAVE_NUMBA:
        return complex(direct_sum_numba(amp, np.asarray(up, float), np.asarray(lam, float),
                                        int(dk_off), int(da_off), np.asarray(lam_ok, bool),
                                        complex(lk), complex(la), complex(lb), float(nb)))
    return complex(direct_sum_numpy(amp, up, lam, dk_off, da_off, lam_ok,
                                    (complex(lk), complex(la), complex(lb), float(nb))))
