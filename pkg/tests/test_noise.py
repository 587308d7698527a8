import dataclasses
import math

import numpy as np
import pytest

from multispin_sg import csl, noise
from multispin_sg.errors import CapacityError, InvalidArgumentError, RangeError
from multispin_sg.materials import NAPHTHALENE
from multispin_sg.trajectories import ProtocolTimes

from conftest import rounded_match, within_pct

EPS = 1.1 + 0.15j


def test_flip_examples(scen):
    for row, target in (("a", 0.04), ("b", 0.30)):
        d = scen[row].derived()
        f = noise.flip_stats(d.N_spins, scen[row].T1, scen[row].times.T_tot, d.chi, d.x0)
        assert rounded_match(f.p_flip, target)
        assert math.isclose(f.dzeta_bound, 4 * d.chi / d.x0)
    assert noise.flip_stats(10**7, 1.0, 0.0, 1.0, 1.0).p_flip == 0.0


def test_flip_monotone():
    base = noise.flip_stats(1000, 100.0, 1.0, 1.0, 1.0).p_flip
    assert noise.flip_stats(2000, 100.0, 1.0, 1.0, 1.0).p_flip > base
    assert noise.flip_stats(1000, 100.0, 2.0, 1.0, 1.0).p_flip > base
    assert noise.flip_stats(1000, 50.0, 1.0, 1.0, 1.0).p_flip > base
    with pytest.raises(InvalidArgumentError):
        noise.flip_stats(1, 0.0, 1.0, 1.0, 1.0)


def test_dephasing_closed_examples():
    assert noise.dephasing_ratio_closed(0.0, 1e-3, 0.7, 1e5).full == 1.0
    assert noise.dephasing_ratio_closed(0.0, 1e-3, 0.01, 0.0).full == 1.0
    assert within_pct(noise.dephasing_ratio_closed(1.0, 1e-3, 1.3, 1e5).full, 0.997, 0.1)
    for G in np.linspace(0, 50, 6):
        for cx in (0.01, 0.3, 2.0):
            for nb in (0.0, 1.0, 1e4):
                r = noise.dephasing_ratio_closed(G, 1e-2, cx, nb)
                assert r.large_motion_limit <= r.full + 1e-15
                r = noise.dephasing_ratio_derived(G, 1e-2, cx, nb)
                assert r.large_motion_limit <= r.full + 1e-15
    with pytest.raises(InvalidArgumentError):
        noise.dephasing_ratio_closed(-1.0, 1.0, 1.0, 0.0)


@pytest.fixture(scope="module")
def kraus_setup(d44):
    d = dataclasses.replace(d44, chi=0.1 * d44.x0, n_bar=0.3)
    Om = d.Omega
    return d, ProtocolTimes("modified", math.pi / Om, math.pi / Om, 0.0)


def test_dephasing_oracle_limits(kraus_setup):
    d, tm = kraus_setup
    assert math.isclose(noise.dephasing_oracle(3, 0.0, tm, d), 1.0, rel_tol=1e-12)
    assert abs(noise.dephasing_oracle(3, 1e3 / tm.T_tot, tm, d)) < 1e-12
    with pytest.raises(CapacityError):
        noise.dephasing_oracle(7, 1.0, tm, d)
    with pytest.raises(InvalidArgumentError):
        noise.dephasing_oracle(2, 1.0, ProtocolTimes.modified(0.1 / d.Omega, d.Omega), d)


def test_dephasing_oracle_independent_of_N(kraus_setup):
    d, tm = kraus_setup
    G = 0.7 / tm.T_tot
    vals = [noise.dephasing_oracle(N, G, tm, d) for N in range(1, 7)]
    assert max(vals) - min(vals) < 1e-12


def test_derived_dephasing_form_matches_oracle(kraus_setup):
    d, tm = kraus_setup
    for G in (0.1 / tm.T_tot, 1.3 / tm.T_tot):
        ref = noise.dephasing_ratio_derived(G, tm.T_tot, d.chi / d.x0, d.n_bar).full
        for N in range(2, 7):
            assert abs(noise.dephasing_oracle(N, G, tm, d) - ref) < 1e-10


@pytest.mark.xfail(strict=True, reason="reference closed form uses 4x the exponents and 4x the motional term; see ledger")
def test_reference_dephasing_form_matches_oracle(kraus_setup):
    d, tm = kraus_setup
    G = 0.5 / tm.T_tot
    ref = noise.dephasing_ratio_closed(G, tm.T_tot, d.chi / d.x0, d.n_bar).full
    assert abs(noise.dephasing_oracle(2, G, tm, d) - ref) < 1e-10


def test_gas_survival(scen):
    b = scen["b"].derived()
    g = noise.gas_survival(5e-11, b.radius, 4.0, scen["b"].times.T_tot)
    assert within_pct(g.p_none, 0.91, 2)
    assert math.isclose(g.p_none, math.exp(-g.rate * scen["b"].times.T_tot / 3), rel_tol=1e-14)
    assert noise.gas_survival(0.0, b.radius, 4.0, 1.0).p_none == 1.0
    for row in "ac":
        d = scen[row].derived()
        assert noise.gas_survival(5e-10, d.radius, 4.0, scen[row].times.T_tot).p_none > 0.90


def test_r_bb_formula():
    v = noise.r_bb(4.0)
    assert math.isclose(v, math.pi ** (2 / 3) * 1.0545718176461565e-34 * 299792458.0 / (2 * 1.380649e-23 * 4.0),
                        rel_tol=1e-9)
    assert math.isclose(noise.r_bb(8.0), v / 2, rel_tol=1e-14)


@pytest.mark.xfail(strict=True, reason="the stated formula gives 0.61 mm at 4 K")
def test_r_bb_reference_value():
    assert within_pct(noise.r_bb(4.0), 0.5e-3, 10)


def test_blackbody_channels():
    bb = noise.blackbody(4.0, 4.0, 100e-9, EPS)
    assert bb.xi_emission > 1e3 * bb.xi_scatter
    assert bb.xi_absorption > 1e3 * bb.xi_scatter
    assert math.isclose(bb.xi_total, bb.xi_scatter + bb.xi_emission + bb.xi_absorption)
    cold = noise.blackbody(1e-3, 1e-3, 100e-9, EPS)
    assert cold.xi_total < 1e-12 * bb.xi_total
    ratio = noise.xi_emission(8.0, 100e-9, EPS) / noise.xi_emission(4.0, 100e-9, EPS)
    assert math.isclose(ratio, 16.0, rel_tol=1e-12)


def test_max_internal_temperature(scen):
    for row, target in (("a", 4.0), ("c", 9.0)):
        d = scen[row].derived()
        x = csl.xi(csl.GRW, d.mass, d.radius)
        t = noise.max_internal_temperature(x, d.radius, EPS)
        assert not t.at_boundary and abs(t.T - target) <= 2.0
        assert 2 * noise.xi_emission(t.T, d.radius, EPS) == pytest.approx(x, rel=1e-2)
    hot = noise.max_internal_temperature(1e60, 100e-9, EPS)
    assert hot.at_boundary and hot.T == noise.TEMP_BRACKET[1]
    with pytest.raises(InvalidArgumentError):
        noise.max_internal_temperature(0.0, 1e-7, EPS)


def test_vapor_pressure():
    assert math.isclose(noise.vapor_pressure(300.0, NAPHTHALENE), 13.08, rel_tol=1e-12)
    Ts = np.linspace(150, 353.37, 200)
    p = [noise.vapor_pressure(T, NAPHTHALENE) for T in Ts]
    assert np.all(np.diff(p) > 0)
    assert math.isfinite(noise.vapor_pressure(353.0, NAPHTHALENE))
    for T in (149.9, 360.0):
        with pytest.raises(RangeError):
            noise.vapor_pressure(T, NAPHTHALENE)
    with pytest.raises(RangeError):
        noise.sublimation_stats(70e-9, 100.0, NAPHTHALENE)


def test_sublimation_room_temperature():
    s = noise.sublimation_stats(70e-9, 300.0, NAPHTHALENE)
    assert 0.5e10 < s.rate < 2e10
    assert s.mass_drift < 0


@pytest.mark.xfail(strict=True, reason="fit anchored at 300 K gives 0.15 molecules/s at 150 K; see ledger")
def test_sublimation_rate_at_150K():
    assert 20 <= noise.sublimation_stats(70e-9, 150.0, NAPHTHALENE).rate <= 80


@pytest.mark.xfail(strict=True, reason="fit anchored at 300 K gives 2e-8 per second at 150 K; see ledger")
def test_mass_drift_at_150K():
    assert 0.9e-10 <= abs(noise.sublimation_stats(70e-9, 150.0, NAPHTHALENE).mass_drift) <= 3.6e-10


def test_noise_budget_report(scen):
    s = scen["b"]
    d = s.derived()
    rep = noise.noise_budget(d.N_spins, s.times.T_tot, d, NAPHTHALENE, csl.xi(s.csl, d.mass, d.radius),
                             T1=s.T1, T2=s.T2, pressure=s.pressure, T_gas=s.T_env, T_env=s.T_env,
                             T_bulk=s.T_bulk, T_sublimation=s.T_sublimation)
    assert rounded_match(rep.p_flip, 0.30)
    assert within_pct(rep.p_no_collision, 0.91, 2)
    assert set(rep.as_dict()) >= {"p_flip", "dephasing_ratio", "T_i_max", "mass_drift_rate"}
    with pytest.raises(RangeError):
        dataclasses.replace(rep, p_flip=1.5)
    with pytest.raises(RangeError):
        dataclasses.replace(rep, gas_rate=-1.0)
