import math

import numpy as np
import pytest
from scipy import integrate

from norminflate.errors import ArityError, InvalidArgument, ParameterError
from norminflate.lacunary import ETA, LacunaryParams, make_initial_data
from norminflate.picard import (
    DuhamelKernel,
    Source,
    absorbing_condition,
    bilinear,
    bilinear_parts,
    chain_exponents,
    chain_net_unit,
    duhamel_integral,
    duhamel_values,
    eta_besov_factor,
    first_iterates,
    remainder_bound_M,
    rho1_split,
    rho10_coefficient,
    z_bound,
)
from norminflate.trig_field import (
    E3,
    TrigField,
    besov_norm,
    divergence,
    heat,
    leray_project,
    linf_norm,
    product,
    tensor_divergence,
)
from norminflate.verify import random_field


def test_duhamel_integral():
    assert duhamel_integral(DuhamelKernel(0, 2.0, 1.0), 1.0) == pytest.approx(
        math.exp(-1) - math.exp(-2), rel=1e-12
    )
    assert duhamel_integral(DuhamelKernel(0, 2.0, 1.0), 1.0) == pytest.approx(0.232544, abs=1e-6)
    assert duhamel_integral(DuhamelKernel(0, 1.0, 1.0), 1.0) == pytest.approx(math.exp(-1))
    assert duhamel_integral(DuhamelKernel(1, 2.0, 1.0), 1.0) == pytest.approx(
        math.exp(-1) * (1 - 2 * math.exp(-1)), rel=1e-12
    )
    # (t^2 / 2) e^{-A t} at M = A
    assert duhamel_integral(DuhamelKernel(1, 3.0, 3.0), 0.5) == pytest.approx(
        0.125 * math.exp(-1.5), rel=1e-12
    )


@pytest.mark.parametrize("D", [0.0, 1e-12, 1e-9, 1e-7, 1e-6, 2e-6, 1e-5, 1e-3, -1e-9, -1e-5])
def test_duhamel_integral_is_continuous_near_equal_decays(D):
    A, t = 1.0, 1.0
    expected = math.exp(-A * t) * (t if D == 0 else -math.expm1(-D * t) / D)

    actual = duhamel_integral(DuhamelKernel(0, A + D, A), t)

    assert actual == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize(
    "p, q, M, A, t",
    [
        (0, 0, 17.0, 3.0, 0.3),
        (0, 0, 1.0, 40.0, 0.7),
        (1, 0, 5.0, 20.0, 1.0),
        (1, 0, 20.0, 5.0, 1.0),
        (0, 1, 9.0, 2.0, 0.5),
        (1, 1, 2.0, 9.0, 0.5),
        (0, 2, 0.0, 6.0, 1.0),
    ],
)
def test_duhamel_integral_against_quadrature(p, q, M, A, t):
    s = np.linspace(0.0, t, 10001)
    integrand = (t - s) ** p * s ** q * np.exp(-(t - s) * M - s * A)
    expected = integrate.simpson(integrand, x=s)

    assert duhamel_integral(DuhamelKernel(p, M, A, q), t) == pytest.approx(expected, rel=1e-9)


def test_duhamel_values_use_the_given_difference():
    # D stands in for M - A, which the caller computes exactly from integer frequencies
    out = duhamel_values(0, 0, np.array([1.0]), np.array([1.0]), np.array([2.0]), 1.0)

    assert out[0] == pytest.approx(math.exp(-1) * (1 - math.exp(-2)) / 2)


@pytest.mark.parametrize(
    "kern, t, message",
    [
        (DuhamelKernel(0, -1.0, 1.0), 1.0, r"Decays must be finite and non-negative"),
        (DuhamelKernel(0, 1.0, math.inf), 1.0, r"Decays must be finite and non-negative"),
        (DuhamelKernel(0, 1.0, 1.0), 0.0, r"t must be positive"),
        (DuhamelKernel(-1, 1.0, 1.0), 1.0, r"weight_power must be a non-negative integer"),
        (DuhamelKernel(0, 1.0, 1.0, 0.5), 1.0, r"source_power must be a non-negative integer"),
    ],
)
def test_duhamel_integral_with_invalid_input(kern, t, message):
    with pytest.raises(InvalidArgument, match=message):
        duhamel_integral(kern, t)


def _integrand(kind, us, fs, t, s):
    out = None
    for a in us:
        for b in fs:
            weight = s ** (a.power + b.power)
            flux = tensor_divergence(product(heat(a.field, s), heat(b.field, s)))
            if kind == "B1":
                term = leray_project(flux)
            elif kind == "B2":
                term = leray_project(flux.times(E3)) * (t - s)
            else:
                term = flux
            term = heat(term, t - s) * (-weight)
            out = term if out is None else out + term
    return out


def _quadrature(kind, us, fs, t, nodes):
    """Simpson rule in time, coefficient by coefficient."""
    s = np.linspace(0.0, t, nodes)
    terms = [_integrand(kind, us, fs, t, si) for si in s]
    freqs = sorted({k for term in terms for k in term.freqs})
    cos = np.array([[term.coefficient(k)[0] for k in freqs] for term in terms])
    sin = np.array([[term.coefficient(k)[1] for k in freqs] for term in terms])
    return freqs, integrate.simpson(cos, x=s, axis=0), integrate.simpson(sin, x=s, axis=0)


def _assert_matches_quadrature(kind, us, fs, t, nodes):
    exact = bilinear(kind, us, fs, t)
    freqs, cos, sin = _quadrature(kind, us, fs, t, nodes)
    scale = max(np.abs(cos).max(initial=0), np.abs(sin).max(initial=0), 1e-300)

    assert set(exact.freqs) <= set(freqs)
    for i, k in enumerate(freqs):
        c, s = exact.coefficient(k)
        np.testing.assert_allclose(c, cos[i], atol=1e-8 * scale)
        np.testing.assert_allclose(s, sin[i], atol=1e-8 * scale)


def test_bilinear_against_quadrature():
    u = [Source(TrigField.cosine((0, 1, 1), [1.0, 0.5, -0.5]), 0)]
    f = [Source(TrigField.sine((1, 0, 1), 2.0), 0)]

    _assert_matches_quadrature("B3", u, f, 0.4, 2001)


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["B1", "B2", "B3"])
@pytest.mark.parametrize("power", [0, 1])
def test_bilinear_against_quadrature_on_mixed_modes(kind, power):
    u = [
        Source(TrigField.cosine((0, 1, 4), [1.0, 0.5, -0.125]), 0),
        Source(TrigField.sine((2, -1, 0), [0.5, 1.0, 0.0]), power),
    ]
    if kind == "B1":
        f = [Source(TrigField.cosine((1, 3, 0), [-3.0, 1.0, 2.0]), power)]
    else:
        f = [Source(TrigField.cosine((0, 0, 4), 4.0), 0), Source(TrigField.sine((3, 0, -1)), power)]

    _assert_matches_quadrature(kind, u, f, 0.8, 10001)


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["B1", "B2", "B3"])
@pytest.mark.parametrize("seed", range(8))
def test_bilinear_against_quadrature_on_random_fields(kind, seed):
    rng = np.random.default_rng(seed)
    u = random_field(rng, 3, modes=4, kmax=8, solenoidal=True)
    if kind == "B1":
        f = random_field(rng, 3, modes=4, kmax=8, solenoidal=True)
    else:
        f = random_field(rng, 1, modes=4, kmax=8)

    _assert_matches_quadrature(kind, [Source(u, 0)], [Source(f, 0)], 0.2, 10001)


def test_bilinear_self_interaction_vanishes():
    u0, _ = make_initial_data(LacunaryParams(r=1, K=4))

    assert bilinear("B1", u0, u0, 0.5).is_zero()


def test_bilinear_resonant_coefficient():
    p = LacunaryParams(r=1, K=2)
    u0, rho0 = make_initial_data(p)

    rho1 = bilinear("B3", u0, rho0, 0.1)

    _, sin = rho1.coefficient(ETA)
    assert sin[0] == pytest.approx(rho10_coefficient(p, 0.1, exact=True), rel=1e-12)
    assert sin[0] == pytest.approx(0.0696354, abs=1e-7)


def test_bilinear_b1_is_divergence_free():
    u = TrigField.cosine((1, 2, 0), [2.0, -1.0, 3.0]) + TrigField.sine((0, 1, 3), [1.0, 0.0, 0.0])
    v = TrigField.cosine((2, 0, 1), [1.0, 1.0, -2.0])

    out = bilinear("B1", leray_project(u), leray_project(v), 0.3)

    assert len(out) > 0
    assert linf_norm(divergence(out)).upper <= 1e-12


def test_bilinear_b3_is_not_projected():
    u = TrigField.cosine((0, 1, 0), [1.0, 0.0, 0.0])
    f = TrigField.sine((1, 0, 0))

    assert bilinear("B3", u, f, 0.5).dim == 1
    assert bilinear("B2", u, f, 0.5).dim == 3


def test_bilinear_parts():
    p = LacunaryParams(r=2, K=2)
    u0, rho0 = make_initial_data(p)

    total, difference = bilinear_parts("B3", u0, rho0, 0.2)
    full = bilinear("B3", u0, rho0, 0.2)

    assert linf_norm(total + difference - full).upper <= 1e-14
    assert ETA in difference.freqs
    assert ETA not in total.freqs


@pytest.mark.parametrize(
    "kind, u, f, error, message",
    [
        ("B4", 3, 3, InvalidArgument, r"Unknown bilinear operator 'B4'"),
        ("B1", 3, 1, ArityError, r"B1 needs a vector field as second argument"),
        ("B3", 3, 3, ArityError, r"B3 needs a scalar field as second argument"),
        ("B2", 1, 1, ArityError, r"B2 needs a vector field as first argument"),
    ],
)
def test_bilinear_with_invalid_input(kind, u, f, error, message):
    with pytest.raises(error, match=message):
        bilinear(
            kind,
            TrigField.cosine((0, 1, 0), [1.0] * u),
            TrigField.cosine((1, 0, 0), [1.0] * f),
            0.5,
        )


def test_bilinear_needs_positive_time():
    u = TrigField.cosine((0, 1, 0), [1.0, 0.0, 0.0])
    with pytest.raises(InvalidArgument, match=r"t must be positive and finite"):
        bilinear("B3", u, TrigField.cosine((1, 0, 0)), 0.0)

    with pytest.raises(InvalidArgument, match=r"At least one source is required"):
        bilinear("B3", [], TrigField.cosine((1, 0, 0)), 0.5)


def test_first_iterates():
    p = LacunaryParams(r=3, K=2)
    u0, rho0 = make_initial_data(p)

    state = first_iterates(u0, rho0, 0.25)
    rho10, rho11, rho12 = state.rho1_parts

    assert state.t == 0.25
    # the buoyancy term of g vanishes for this data
    assert linf_norm(state.g - heat(u0, 0.25)).upper == 0
    assert linf_norm(state.theta - heat(rho0, 0.25)).upper == 0
    assert rho10.freqs == (ETA,)
    scale = linf_norm(state.rho1).upper
    assert linf_norm(rho10 + rho11 + rho12 - state.rho1).upper <= 1e-12 * scale
    assert linf_norm(divergence(state.u1)).upper <= 1e-12


def test_first_iterates_single_wave():
    u0, rho0 = make_initial_data(LacunaryParams(r=1, K=2))

    _, rho11, rho12 = first_iterates(u0, rho0, 0.5).rho1_parts

    assert rho11.is_zero()
    assert not rho12.is_zero()


def test_first_iterates_without_density():
    u0, _ = make_initial_data(LacunaryParams(r=2, K=2))

    state = first_iterates(u0, TrigField.zero(1), 0.5)

    assert state.rho1.is_zero()
    assert all(part.is_zero() for part in state.rho1_parts)
    assert linf_norm(state.u1 - bilinear("B1", u0, u0, 0.5)).upper <= 1e-15


def test_first_iterates_on_general_data():
    u0 = leray_project(TrigField.sine((1, 2, 0), [1.0, 0.0, 1.0]))
    rho0 = TrigField.cosine((0, 1, 1), 2.0)

    state = first_iterates(u0, rho0, 0.5)
    rho10, rho11, rho12 = state.rho1_parts

    assert rho10.is_zero()
    assert linf_norm(rho11 + rho12 - state.rho1).upper <= 1e-14
    # rho0 e3 has a solenoidal part, so g picks up the buoyancy term
    assert linf_norm(state.g - heat(u0, 0.5)).upper > 0


@pytest.mark.parametrize("t", [0.0, 1.5])
def test_first_iterates_time_window(t):
    u0, rho0 = make_initial_data(LacunaryParams(r=1))
    with pytest.raises(InvalidArgument, match=r"t must lie in \(0, 1\]"):
        first_iterates(u0, rho0, t)


def test_first_iterates_arity():
    u0, rho0 = make_initial_data(LacunaryParams(r=1))
    with pytest.raises(ArityError, match=r"needs a vector u0 and a scalar rho0"):
        first_iterates(rho0, u0, 0.5)


def test_rho1_split_matches_bilinear():
    p = LacunaryParams(r=4, K=2)
    u0, rho0 = make_initial_data(p)

    parts = rho1_split(u0, rho0, 0.1)
    full = bilinear("B3", u0, rho0, 0.1)

    assert linf_norm(parts[0] + parts[1] + parts[2] - full).upper <= 1e-12 * linf_norm(full).upper


def test_rho10_coefficient():
    p = LacunaryParams(r=1, K=2)

    assert rho10_coefficient(p, 0.1) == pytest.approx(0.083900, abs=1e-6)
    assert rho10_coefficient(p, 0.1, exact=True) == pytest.approx(0.0696354, abs=1e-7)
    assert rho10_coefficient(p, 1e-12) < 1e-10

    with pytest.raises(InvalidArgument, match=r"t must lie in \(0, 1\]"):
        rho10_coefficient(p, 0.0)


def test_rho10_coefficient_matches_fields():
    p = LacunaryParams(r=5, K=2)
    u0, rho0 = make_initial_data(p)

    rho10 = rho1_split(u0, rho0, 0.3)[0]

    expected = rho10_coefficient(p, 0.3, exact=True)
    assert rho10.coefficient(ETA)[1][0] == pytest.approx(expected, rel=1e-12)


def test_rho10_coefficient_grows_like_r_to_one_minus_two_beta():
    # each wave tends to (1/2) r^-2b e^-t / 4
    for r in (100, 479, 481, 10 ** 4):
        p = LacunaryParams(r=r, K=4)
        ratio = rho10_coefficient(p, 0.5, exact=True) * 8 * math.exp(0.5) / (p.scale ** 2 * r)
        assert 0.9 < ratio < 1.01


def test_eta_besov_factor():
    assert eta_besov_factor(1.0) == pytest.approx(0.428882, abs=1e-6)
    assert eta_besov_factor(0.5) == pytest.approx(0.25 ** 0.25 * math.exp(-0.25))
    assert eta_besov_factor(4.0) == pytest.approx(4 * math.exp(-2))
    assert eta_besov_factor(4.0, inhomogeneous=True) == pytest.approx(math.exp(-1))
    measured = besov_norm(TrigField.sine(ETA), 1.0).value
    assert eta_besov_factor(1.0) == pytest.approx(measured, rel=1e-4)


def test_remainder_bound_M():
    p = LacunaryParams(r=16, beta=0.45, nu=0.1, delta=0.01)
    t = p.T

    expected = 16 ** -1.35 + 16 ** -0.35 * t ** 1.01 + 16 ** 0.2 * t ** 2.51
    assert remainder_bound_M(p, t) == pytest.approx(expected)
    assert remainder_bound_M(p, 1e-12) == pytest.approx(16 ** -1.35)
    expected = 16 ** -1.35 * t ** -1.01 + 16 ** -0.35 + 16 ** 0.2 * t ** 1.5
    assert z_bound(p, t) == pytest.approx(expected)


def test_remainder_bound_M_constraint():
    with pytest.raises(ParameterError, match=r"violates beta > max\(0, 1/2 - 3\*nu/4\)"):
        remainder_bound_M(LacunaryParams(r=16, beta=0.3, nu=0.1), 0.5)

    p = LacunaryParams(r=16, beta=0.45, nu=0.1)
    with pytest.raises(InvalidArgument, match=r"lies outside \(0, r\^-nu\]"):
        remainder_bound_M(p, 0.9)


def test_absorbing_condition():
    check = absorbing_condition(LacunaryParams(r=64, beta=0.45, nu=0.2, delta=0.01))

    assert check.all_negative
    assert check.exponents[0] == pytest.approx(-0.45)
    assert check.exponents[4] == pytest.approx(2 - 1.8 - 0.6)
    assert 0 < check.value < 1

    assert not absorbing_condition(LacunaryParams(r=64, beta=0.1, nu=0.0)).all_negative


def test_chain_exponents():
    ce = chain_exponents(LacunaryParams(beta=0.4, nu=0.2, delta=0.01))

    assert ce.growth == pytest.approx(0.2)
    assert ce.corrections == pytest.approx((-0.7, -0.998, -1.198, -0.4, -0.1))
    assert ce.holds

    # nu = 0 is the control case without inflation
    assert not chain_exponents(LacunaryParams(beta=0.5, nu=0.0)).holds


def test_chain_net_unit():
    p = LacunaryParams(r=64, beta=0.4, nu=0.2, delta=0.01)
    ce = chain_exponents(p)

    corrections, net = chain_net_unit(p)

    growth = 64 ** 0.2
    assert corrections == pytest.approx(growth * sum(64 ** e for e in ce.corrections))
    assert net == pytest.approx(growth - corrections)
