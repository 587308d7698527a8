import math

import numpy as np
import pytest

from multispin_sg.errors import CapacityError, InvalidArgumentError
from multispin_sg.trajectories import (
    BRUTE_FORCE_MAX_N,
    ProtocolTimes,
    branch_zeta,
    free_position_variance,
    minimal_trajectory,
    modified_labels,
    modified_trajectory,
    t2_of_t1,
    width_brute_force,
    width_coefficients,
    width_modified,
)

from conftest import within_pct

rng = np.random.default_rng(20261015)


def test_t2_examples():
    Om = 800.0
    assert abs(t2_of_t1(math.pi / Om, Om)) < 1e-15
    assert math.isclose(t2_of_t1(math.pi / 2 / Om, Om), 2 / Om * math.asin(1 / math.sqrt(5)), rel_tol=1e-14)
    assert math.isclose(t2_of_t1(math.pi / 2 / Om, Om) * Om, 0.9273, abs_tol=1e-4)
    small = 1e-6 / Om
    assert math.isclose(t2_of_t1(small, Om), 2 * small, rel_tol=1e-9)
    for bad in (0.0, 4.0 / Om, -1.0):
        with pytest.raises(InvalidArgumentError):
            t2_of_t1(bad, Om)


def test_protocol_times_totals(d44):
    Om = d44.Omega
    m = ProtocolTimes.minimal(1.3 / Om, Om)
    assert math.isclose(m.T_tot, 2 * m.t1 + m.t2)
    q = ProtocolTimes.modified(0.05 / Om, Om)
    assert math.isclose(q.T_tot, 2 * q.t1 + 2 * q.t21 + q.t22)
    assert math.isclose(q.t1, math.pi / Om - 2 * q.t21 - q.t22, rel_tol=1e-14)
    assert q.recombination_residual(Om) < 1e-9
    with pytest.raises(InvalidArgumentError):
        ProtocolTimes.modified(1.4 / Om, Om)
    with pytest.raises(InvalidArgumentError):
        ProtocolTimes("other", 1.0)


@pytest.fixture(scope="module")
def minimal_times(d44):
    return ProtocolTimes.minimal(2.2 / d44.Omega, d44.Omega)


def test_minimal_examples(d44, minimal_times):
    tm = minimal_times
    p0 = minimal_trajectory(5, 0.0, tm, d44)
    assert p0.zeta == 0 and p0.phase == 0
    for k in (-7, -1, 1, 4, 31):
        assert abs(minimal_trajectory(k, tm.T_tot, tm, d44).zeta) < 1e-9
    z = minimal_trajectory(1, tm.t1, tm, d44).zeta
    assert abs(z - (1 - np.exp(-1j * d44.Omega * tm.t1))) < 1e-14
    with pytest.raises(InvalidArgumentError):
        minimal_trajectory(1, 1.01 * tm.T_tot, tm, d44)
    with pytest.raises(InvalidArgumentError):
        minimal_trajectory(1, 0.0, ProtocolTimes.modified(0.1 / d44.Omega, d44.Omega), d44)


def test_minimal_linearity_and_parity(d44, minimal_times):
    tm = minimal_times
    for t in rng.uniform(0, tm.T_tot, 1000):
        one = minimal_trajectory(1, t, tm, d44)
        for k in (-3, 2, 9):
            p = minimal_trajectory(k, t, tm, d44)
            assert abs(p.zeta - k * one.zeta) <= 1e-12 * max(1.0, abs(k * one.zeta))
            assert p.phase == minimal_trajectory(-k, t, tm, d44).phase


def test_neighbour_spacing(d44, minimal_times):
    tm = minimal_times
    # 2 chi sin^2 per unit tilde label; neighbouring Dicke states differ by two labels
    for t in rng.uniform(0, tm.t1, 50):
        x = [d44.chi * minimal_trajectory(k, t, tm, d44).zeta.real for k in (1, 2, 3)]
        unit = 2 * d44.chi * math.sin(d44.Omega * t / 2) ** 2
        assert math.isclose(x[1] - x[0], unit, rel_tol=1e-10, abs_tol=1e-30)
        assert math.isclose(x[2] - x[0], 2 * unit, rel_tol=1e-10, abs_tol=1e-30)


@pytest.mark.parametrize("kind", ["minimal", "modified"])
def test_harmonic_flow_by_finite_differences(d44, kind):
    Om = d44.Omega
    if kind == "minimal":
        tm = ProtocolTimes.minimal(1.7 / Om, Om)
        labels = 3 * np.array([1.0, -1.0, 1.0])
        zeta = lambda t: minimal_trajectory(3, t, tm, d44).zeta  # noqa: E731
    else:
        tm = ProtocolTimes.modified(0.3 / Om, Om)
        labels = modified_labels(3, -5, 1)
        zeta = lambda t: modified_trajectory(3, -5, 1, t, tm, d44).zeta  # noqa: E731
    b = tm.boundaries
    h = 1e-7 / Om
    for seg in range(len(tm.durations)):
        for u in (0.25, 0.5, 0.75):
            t = b[seg] + u * (b[seg + 1] - b[seg])
            fd = (zeta(t + h) - zeta(t - h)) / (2 * h)
            flow = -1j * Om * (zeta(t) - labels[seg])
            assert abs(fd - flow) <= 1e-6 * abs(flow)


def test_modified_examples(d44):
    Om = d44.Omega
    tm = ProtocolTimes.modified(0.2 / Om, Om)
    assert modified_trajectory(3, -1, 7, 0.0, tm, d44).zeta == 0
    for _ in range(20):
        k, a = rng.integers(-40, 41, 2)
        assert abs(modified_trajectory(k, a, k, tm.T_tot, tm, d44).zeta) < 1e-9
        assert modified_trajectory(k, a, 5, tm.T_tot, tm, d44).phase == modified_trajectory(
            -k, -a, -5, tm.T_tot, tm, d44).phase


def test_modified_continuity_at_boundaries(d44):
    Om = d44.Omega
    tm = ProtocolTimes.modified(0.27 / Om, Om)
    d = tm.durations
    b = tm.boundaries
    for _ in range(25):
        labels = modified_labels(*rng.integers(-30, 31, 3))
        for seg in range(4):
            left = branch_zeta(labels, d, Om, seg, b[seg + 1])
            right = branch_zeta(labels, d, Om, seg + 1, b[seg + 1])
            assert abs(left - right) < 1e-12 * max(1.0, np.abs(labels).max())


def test_table_times_recombine_after_closing(scen):
    # bundled row a keeps its rounded phases; closing t22 and t1 from its t21 recombines
    d = scen["a"].derived()
    t = scen["a"].times
    tm = ProtocolTimes.modified(t.t21, d.Omega)
    for k, a in [(1, 3), (-17, 4), (250, -250)]:
        assert abs(modified_trajectory(k, a, k, tm.T_tot, tm, d).zeta) < 1e-9


@pytest.mark.xfail(strict=True, reason="rounded reference phases leave |zeta(T_tot)| ~ 0.07 per unit label")
def test_row_a_times_recombine_as_given(scen):
    d = scen["a"].derived()
    tm = scen["a"].times
    assert abs(modified_trajectory(1, 3, 1, tm.T_tot, tm, d).zeta) < 1e-9


def test_free_position_variance(scen):
    assert free_position_variance(0.0, 100, 1e-9, 3e-18, 800.0) == 3e-18
    g1 = free_position_variance(1e-3, 100, 1e-9, 0.0, 800.0)
    g4 = free_position_variance(1e-3, 400, 1e-9, 0.0, 800.0)
    assert math.isclose(math.sqrt(g4), 2 * math.sqrt(g1), rel_tol=1e-14)
    d = scen["a"].derived()
    growth = free_position_variance(0.5e-3, d.N_spins, d.chi, 0.0, d.Omega)
    assert within_pct(math.sqrt(growth), 167e-9, 1)
    with pytest.raises(InvalidArgumentError):
        free_position_variance(-1.0, 1, 1.0, 0.0, 1.0)


def test_width_examples():
    for N in (1, 7, 100):
        assert math.isclose(width_modified(N, 2.0, 0.0).dx ** 2, 4.0 * N / 4)
        assert math.isclose(width_modified(N, 0.0, 3.0).dx ** 2, 9.0 * (N + N * N) / 8)
    assert math.isclose(width_brute_force(1, 1.0, 0.0) ** 2, 0.25, rel_tol=1e-14)
    assert math.isclose(width_brute_force(2, 0.0, 1.0) ** 2, 0.75, rel_tol=1e-14)
    assert width_modified(10, 1.0, 0.01).gaussian_regime
    assert not width_modified(10, 0.01, 1.0).gaussian_regime
    with pytest.raises(CapacityError):
        width_brute_force(BRUTE_FORCE_MAX_N + 1, 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        width_modified(0, 1.0, 1.0)


def test_width_ansatz_matches_brute_force():
    pairs = rng.normal(size=(100, 2)) * np.array([1e-6, 1e-10])
    worst = 0.0
    for N in range(1, 41):
        for ck, ca in pairs:
            a = width_modified(N, ck, ca).dx
            b = width_brute_force(N, ck, ca)
            worst = max(worst, abs(a - b) / b)
    assert worst < 1e-10


def test_width_coefficients_linear_and_alpha_starts_at_zero(scen):
    d = scen["c"].derived()
    tm = scen["c"].times
    b = tm.boundaries
    wc = width_coefficients(tm.t1 + tm.t21 + tm.t22 / 2, tm, d)
    assert wc.linearity_residual < 1e-10
    assert wc.c_kappa > 0
    prev = None
    for frac in (1e-1, 1e-2, 1e-3):
        ca = abs(width_coefficients(b[1] + frac * (b[2] - b[1]), tm, d).c_alpha)
        if prev is not None:
            assert ca < prev
        prev = ca
    assert width_coefficients(b[1], tm, d).c_alpha == 0.0
    with pytest.raises(InvalidArgumentError):
        width_coefficients(0.5 * b[1], tm, d)


@pytest.mark.xfail(strict=True, reason="reference coefficients are about 3 Omega larger than the trajectory positions; see ledger")
@pytest.mark.parametrize("row, ck, ca", [("a", 5.2e-6, 1.3e-11), ("c", 3.9e-7, 1.8e-10)])
def test_width_coefficients_reference_values(scen, row, ck, ca):
    d = scen[row].derived()
    tm = scen[row].times
    wc = width_coefficients(tm.t1 + tm.t21 + tm.t22 / 2, tm, d)
    assert within_pct(wc.c_kappa, ck, 10) and within_pct(wc.c_alpha, ca, 10)
