"""Cutoff profiles, product/moment fields, lifting constructions and decay laws."""

import math

import numpy as np
import pytest

from tracelab.extension import TQuadrature
from tracelab.grid import GridFunction, GridSpec, from_callable, lp_norm
from tracelab.liftings import (
    PHI,
    PSI,
    RAMP,
    CutoffProfile,
    MomentField,
    ProductField,
    composite_lift,
    cutoff_extension,
    field_l1a,
    field_seminorm,
    fit_loglog,
    grisvard_approximation,
    mironescu_lift,
    moment_lift,
    normal_derivative_trace,
    normal_trace_lift,
    trace_error,
)

SPEC1 = GridSpec(1, 256, 16.0)


def gaussian(spec, width=1.0):
    return from_callable(
        spec, lambda *xs: np.exp(-2.0 * sum(x**2 for x in xs) / width**2), centered=True
    )


class TestProfiles:
    def test_psi_plateaus(self):
        t = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
        assert np.array_equal(PSI(t), [1.0, 1.0, 1.0, 0.0, 0.0])

    def test_ramp_is_complement(self):
        t = np.linspace(0.0, 3.0, 301)
        assert np.max(np.abs(PSI(t) + RAMP(t) - 1.0)) < 1e-15

    def test_phi_flat_at_origin(self):
        # phi(0) = 1 with all pinned derivatives vanishing at t = 0
        assert PHI(np.array([0.0]))[0] == 1.0
        for order in range(1, 5):
            assert PHI(np.array([0.0, 0.5, 1.0]), order)[2] == 0.0

    def test_derivatives_match_finite_differences(self):
        t = np.linspace(1.05, 1.95, 19)
        h = 1e-4
        for order in range(1, 5):
            fd = (PSI(t + h, order - 1) - PSI(t - h, order - 1)) / (2 * h)
            scale = max(1.0, np.max(np.abs(fd)))
            assert np.max(np.abs(PSI(t, order) - fd)) / scale < 1e-4

    def test_monotone_descent(self):
        t = np.linspace(1.0, 2.0, 101)
        v = PSI(t)
        assert np.all(np.diff(v) <= 1e-15)

    def test_unknown_profile_rejected(self):
        with pytest.raises(ValueError):
            CutoffProfile("bump")

    def test_order_cap(self):
        with pytest.raises(ValueError):
            PSI(np.array([1.5]), 5)


class TestFieldsAndTraces:
    def test_product_field_derivative(self):
        g = gaussian(SPEC1)
        fld = ProductField(g, lambda t, order: [t**2, 2 * t, 2.0, 0.0, 0.0][order])
        from tracelab.grid import MultiIndex

        v = fld.derivative(MultiIndex((0,), 1), 3.0)
        assert np.allclose(v.values, 6.0 * g.values)

    def test_trace_of_polynomial_factor_is_exact(self):
        # central stencils are exact on polynomials of matching degree
        g = gaussian(SPEC1)
        fld = ProductField(g, lambda t, order: t**2 if order == 0 else None)
        tr = normal_derivative_trace(fld, 2, t0=1e-3)
        assert np.max(np.abs(tr.values - 2.0 * g.values)) < 1e-8

    def test_trace_order_range(self):
        fld = ProductField(gaussian(SPEC1), lambda t, order: 1.0)
        with pytest.raises(ValueError):
            normal_derivative_trace(fld, 5)

    def test_trace_error_zero_expected(self):
        g = gaussian(SPEC1)
        zero = GridFunction(SPEC1, np.zeros(SPEC1.shape))
        fld = ProductField(g, lambda t, order: 1.0 if order == 0 else 0.0)
        assert trace_error(fld, 1, zero) < 1e-10

    def test_moment_field_traces(self):
        g = gaussian(SPEC1)
        fld = MomentField(g, 2)
        t0 = normal_derivative_trace(fld, 0)
        t2 = normal_derivative_trace(fld, 2)
        assert lp_norm(t0, 1.0) < 1e-4 * lp_norm(g, 1.0)
        assert lp_norm(t2 - g, 1.0) / lp_norm(g, 1.0) < 1e-2

    def test_moment_order_nonnegative(self):
        with pytest.raises(ValueError):
            MomentField(gaussian(SPEC1), -1)

    def test_fit_loglog_recovers_power_law(self):
        xs = [1.0, 2.0, 4.0, 8.0]
        ys = [5.0 * x**-1.5 for x in xs]
        slope, r2 = fit_loglog(xs, ys)
        assert slope == pytest.approx(-1.5, abs=1e-12)
        assert r2 == pytest.approx(1.0)


class TestCutoffExtension:
    def test_parameter_range(self):
        with pytest.raises(ValueError):
            cutoff_extension(gaussian(SPEC1), 1, -1.0)
        with pytest.raises(ValueError):
            cutoff_extension(gaussian(SPEC1), 1, 1.5)

    def test_trace_and_l1a_bound(self):
        f = gaussian(SPEC1)
        res = cutoff_extension(f, 1, 0.0)
        errs = res.verify_traces()
        assert errs[0] < 1e-4
        assert res.l1a_term <= res.extras["l1a_bound"]
        assert res.total_norm > 0

    def test_field_vanishes_past_cutoff(self):
        res = cutoff_extension(gaussian(SPEC1), 0, 0.0)
        assert np.max(np.abs(res.field(2.5).values)) == 0.0


class TestMironescu:
    def test_scaling_validation(self):
        with pytest.raises(ValueError):
            mironescu_lift(gaussian(SPEC1), 1, 0)

    def test_trace_recovery(self):
        f = gaussian(SPEC1)
        res = mironescu_lift(f, 1, 8)
        assert res.verify_traces()[0] < 1e-6

    def test_space_bucket_decays_like_inverse_l(self):
        f = gaussian(SPEC1)
        ls = [4, 8, 16, 32]
        vals = [mironescu_lift(f, 1, l).extras["space_bucket"] for l in ls]
        slope, r2 = fit_loglog(ls, vals)
        assert slope == pytest.approx(-1.0, abs=0.1)
        assert r2 > 0.98

    def test_time_bucket_roughly_constant(self):
        f = gaussian(SPEC1)
        vals = [mironescu_lift(f, 1, l).extras["time_bucket"] for l in (8, 32)]
        assert abs(vals[1] - vals[0]) / vals[0] < 0.05


class TestNormalTraceLift:
    def test_k_range(self):
        with pytest.raises(ValueError):
            normal_trace_lift(gaussian(SPEC1), 1, 1, 8)
        with pytest.raises(ValueError):
            normal_trace_lift(gaussian(SPEC1), 1, 0, 0)

    def test_traces(self):
        g = gaussian(SPEC1)
        res = normal_trace_lift(g, 2, 0, 8)
        errs = res.verify_traces()
        # zero traces are reported as absolute L^1 errors; measuring at
        # t0 = 1e-3 leaves the O(t0 ||g||) contribution of the t^2 factor
        assert errs[0] < 1e-6
        assert errs[1] < 5e-3
        assert errs[2] < 1e-4  # g itself at order m - k = 2

    def test_beta_buckets_decay(self):
        g = gaussian(SPEC1)
        ls = [4, 8, 16, 32]
        per_beta = {}
        for l in ls:
            for b, v in normal_trace_lift(g, 2, 0, l).extras["beta_buckets"].items():
                per_beta.setdefault(b, []).append(v)
        s1, _ = fit_loglog(ls, per_beta[1])
        s2, _ = fit_loglog(ls, per_beta[2])
        assert s1 == pytest.approx(-1.0, abs=0.1)
        assert s2 == pytest.approx(-2.0, abs=0.15)
        # the beta = 0 bucket stays comparable to ||g||_1
        b0 = per_beta[0]
        assert (max(b0) - min(b0)) / min(b0) < 0.1


class TestMomentLift:
    def test_traces(self):
        f = gaussian(SPEC1)
        res = moment_lift(f, 1)
        errs = res.verify_traces()
        # the zero trace carries the absolute O(t0 ||f||) measurement floor
        assert errs[0] < 5e-3
        assert errs[1] < 1e-2


class TestComposite:
    def test_data_count_enforced(self):
        f = gaussian(SPEC1)
        with pytest.raises(ValueError):
            composite_lift([f], 2, 0.0)
        with pytest.raises(ValueError):
            composite_lift([], 2, 0.0)

    def test_mismatched_grids_rejected(self):
        f = gaussian(SPEC1)
        g = gaussian(GridSpec(1, 128, 16.0))
        with pytest.raises(ValueError):
            composite_lift([f, g, f], 2, 0.0)

    def test_three_trace_recovery(self):
        f0 = gaussian(SPEC1, 1.0)
        f1 = gaussian(SPEC1, 2.0)
        f2 = from_callable(
            SPEC1, lambda x: np.exp(-(x**2)) * np.cos(x), centered=True
        )
        res = composite_lift([f0, f1, f2], 2, 0.0)
        errs = res.verify_traces()
        assert all(e <= 1e-2 for e in errs.values())


class TestGrisvard:
    def test_regime_validation(self):
        u0 = cutoff_extension(gaussian(SPEC1), 0, 0.0)
        with pytest.raises(ValueError):
            grisvard_approximation(u0, 0.0, 4)
        with pytest.raises(ValueError):
            grisvard_approximation(u0, 1.0, 0)

    def test_i0_bucket_vanishes_with_j(self):
        u0 = cutoff_extension(gaussian(SPEC1), 0, 0.0)
        rows = [grisvard_approximation(u0, 1.0, j) for j in (4, 16, 64)]
        b0 = [r["buckets"][0] for r in rows]
        assert b0[0] > b0[1] > b0[2]
        scale = field_seminorm(u0.field, 1, TQuadrature(1.0, t_max=2.0))
        assert b0[-1] / scale < 0.01

    def test_i1_bucket_decays_like_inverse_j(self):
        u0 = cutoff_extension(gaussian(SPEC1), 0, 0.0)
        js = [8, 16, 32, 64]
        b1 = [grisvard_approximation(u0, 1.0, j)["buckets"][1] for j in js]
        slope, r2 = fit_loglog(js, b1)
        assert slope == pytest.approx(-1.0, abs=0.15)
        assert r2 > 0.98
