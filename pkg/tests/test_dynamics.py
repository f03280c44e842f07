import math
from dataclasses import replace

import numpy as np
import pytest

from wavetrace import (
    CrossingError,
    LaunchProfile,
    Medium,
    PhysicalUnits,
    RunConfig,
    advance,
    force,
    launch,
    run,
)
from wavetrace.dynamics import MediumError, TurnBackError
from wavetrace.field import SimulationAbort

EPS = 1.65e-4


def small_config(**kw):
    defaults = dict(n_steps=100, n_rays=85, span=3.0, output_every=10)
    defaults.update(kw)
    return RunConfig(**defaults)


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.eps == pytest.approx(1.65e-4)
        assert cfg.rayleigh_range == pytest.approx(math.pi / 1.65e-4)
        # default step: one two-thousandth of a Rayleigh range
        assert cfg.dt == pytest.approx(cfg.rayleigh_range / 2000)

    @pytest.mark.parametrize("kw", [
        dict(eps=0.0), dict(eps=-1.0), dict(dt=0.0), dict(n_steps=-1),
        dict(output_every=0), dict(span=-1.0), dict(stencil=4),
        dict(smooth_len=-0.1), dict(contact_fraction=1.5),
        dict(sponge_strength=2.0),
    ])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            RunConfig(**kw)

    def test_physical_units_must_match_eps(self):
        units = PhysicalUnits(w0=11.5e-6, lambda0=19.26e-10)
        # cold-neutron parameters: lambda0/w0 = 1.6748e-4
        cfg = RunConfig(eps=units.lambda0 / units.w0, physical_units=units)
        assert cfg.eps == pytest.approx(1.6748e-4, rel=1e-3)
        with pytest.raises(ValueError):
            RunConfig(eps=1.65e-4, physical_units=units)


class TestMedium:
    def test_vacuum_is_default_and_featureless(self):
        med = Medium.vacuum()
        x = np.linspace(-1, 1, 5)
        value, ddx, ddz = med.evaluate(x, np.zeros(5))
        np.testing.assert_array_equal(value, 1.0)
        np.testing.assert_array_equal(ddx, 0.0)
        np.testing.assert_array_equal(ddz, 0.0)

    def test_vacuum_rejects_field_parameters(self):
        with pytest.raises(ValueError):
            Medium(kind="vacuum", linear_x=0.1)
        with pytest.raises(ValueError):
            Medium(kind="sludge")

    def test_linear_ramp(self):
        med = Medium(kind="refractive", linear_x=0.5)
        value, ddx, _ = med.evaluate(np.array([0.0, 2.0]), np.zeros(2))
        np.testing.assert_allclose(value, [1.0, 2.0])
        np.testing.assert_allclose(ddx, 0.5)


class TestForce:
    def test_uniform_profile_vacuum_is_zero(self):
        cfg = small_config()
        front = launch(LaunchProfile.single(half_width=1e8), cfg)
        np.testing.assert_allclose(force(front, Medium.vacuum(), cfg), 0.0, atol=1e-12)

    def test_launch_gaussian_at_half(self):
        # dG/dx = 8x for the launch Gaussian, so the transverse force at
        # x = 0.5 is (eps^2 / 8 pi^2) * 4
        cfg = small_config(n_rays=121)
        front = launch(LaunchProfile.single(), cfg)
        j = int(np.argmin(np.abs(front.x - 0.5)))
        expected = cfg.eps**2 / (8 * math.pi**2) * 4.0
        assert expected == pytest.approx(1.379e-9, rel=1e-3)
        assert force(front, Medium.vacuum(), cfg, j) == pytest.approx(expected, rel=1e-6)

    def test_eikonal_mode_kills_coupling(self):
        cfg = small_config(eikonal=True)
        front = launch(LaunchProfile.single(), cfg)
        np.testing.assert_array_equal(force(front, Medium.vacuum(), cfg), 0.0)

    def test_medium_invariant_violation(self):
        cfg = small_config()
        front = launch(LaunchProfile.single(), cfg)
        # n^2 = 1 + x goes non-positive at x <= -1
        with pytest.raises(MediumError):
            force(front, Medium(kind="refractive", linear_x=1.0), cfg)
        # V/E = x exceeds 1 at x >= 1
        with pytest.raises(MediumError):
            force(front, Medium(kind="potential", linear_x=1.0), cfg)


class TestAdvance:
    def test_zero_force_straight_line(self):
        cfg = small_config(dt=1.0, n_steps=10)
        front = launch(LaunchProfile.single(half_width=1e8), cfg)
        j = int(np.argmin(np.abs(front.x - 0.5)))
        x0 = front.x[j]
        for _ in range(10):
            front = advance(front, Medium.vacuum(), cfg)
        assert front.x[j] == pytest.approx(x0, abs=1e-12)
        assert front.z[j] == pytest.approx(10.0, rel=1e-12)
        # the wide hump standing in for a uniform profile leaves a
        # vanishing residual force
        assert abs(front.px[j]) < 1e-20

    def test_constant_force_parabola(self):
        # n^2 = 1 + a x gives a constant transverse force a/2, which the
        # kicked drift integrates exactly: px = a t / 2, x = x0 + a t^2 / 4
        a = 1e-9
        cfg = small_config(n_steps=500, n_rays=85)
        front = launch(LaunchProfile.single(half_width=1e6), cfg)
        med = Medium(kind="refractive", linear_x=a)
        x0 = front.x.copy()
        for _ in range(cfg.n_steps):
            front = advance(front, med, cfg)
        t = front.t
        np.testing.assert_allclose(front.px, 0.5 * a * t, rtol=1e-10)
        np.testing.assert_allclose(front.x, x0 + 0.25 * a * t**2, atol=1e-8)

    def test_potential_ramp_bends_opposite_to_refractive(self):
        # force is +grad(n^2)/2 for a refractive medium but -grad(V/E)/2
        # for a potential one
        a = 1e-9
        cfg = small_config(n_steps=200)
        front = launch(LaunchProfile.single(half_width=1e6), cfg)
        refr = front
        pot = front
        for _ in range(cfg.n_steps):
            refr = advance(refr, Medium(kind="refractive", linear_x=a), cfg)
            pot = advance(pot, Medium(kind="potential", linear_x=a), cfg)
        np.testing.assert_allclose(pot.px, -refr.px, rtol=1e-10)

    def test_time_reversal_on_frozen_field(self):
        cfg = small_config()
        front = launch(LaunchProfile.single(), cfg)
        forward = advance(front, Medium.vacuum(), cfg, refresh=False)
        back = advance(forward, Medium.vacuum(), cfg, dt=-cfg.dt, refresh=False)
        assert np.abs(back.x - front.x).max() <= 1e-10
        assert np.abs(back.z - front.z).max() <= 1e-10
        assert np.abs(back.px - front.px).max() <= 1e-10

    def test_turn_back_aborts(self):
        cfg = small_config(dt=1.0)
        front = launch(LaunchProfile.single(), cfg)
        tilted = replace(front, px=np.full(front.n_rays, 0.9999999),
                         pz=np.sqrt(1 - 0.9999999**2) * np.ones(front.n_rays))
        hot = Medium(kind="refractive", linear_x=1e-3)
        with pytest.raises(SimulationAbort):
            advance(tilted, hot, cfg)

    def test_crossing_reported_from_advance(self):
        cfg = small_config()
        front = launch(LaunchProfile.single(), cfg)
        x = front.x.copy()
        x[10], x[11] = x[11], x[10]
        with pytest.raises(CrossingError):
            advance(replace(front, x=x), Medium.vacuum(), cfg)


class TestRun:
    def test_zero_steps_returns_launch_only(self):
        cfg = small_config(n_steps=0)
        record = run(LaunchProfile.single(), Medium.vacuum(), cfg)
        assert record.n_samples == 1
        assert record.t[0] == 0.0
        np.testing.assert_array_equal(record.px[0], 0.0)

    def test_uniform_profile_stays_straight(self):
        cfg = small_config(n_steps=200)
        record = run(LaunchProfile.single(half_width=1e8), Medium.vacuum(), cfg)
        assert np.abs(record.px).max() <= 1e-12
        spread = record.x - record.x[0]
        assert np.abs(spread).max() <= 1e-9

    def test_momentum_norm_conserved(self, gaussian_record):
        norm = gaussian_record.px**2 + gaussian_record.pz**2
        assert np.abs(norm - 1.0).max() <= 1e-9
        assert gaussian_record.diagnostics.max_norm_drift <= 1e-6

    def test_symmetric_gaussian_stays_symmetric(self, gaussian_record):
        x = gaussian_record.x
        assert np.abs(x + x[:, ::-1]).max() <= 1e-9

    def test_symmetric_slits_stay_symmetric(self, two_slit_record):
        # the contact clusters at the midline add float-ordering noise a
        # few times above the clean-bundle level
        x = two_slit_record.x
        assert np.abs(x + x[:, ::-1]).max() <= 1e-8

    def test_eikonal_trajectories_exactly_straight(self, eikonal_gaussian_record):
        assert np.abs(eikonal_gaussian_record.px).max() <= 1e-12

    def test_dispersion_slope_scales_with_eps(self, gaussian_record, gaussian_config):
        from wavetrace import far_field_slope
        doubled = replace(gaussian_config, eps=2 * gaussian_config.eps, dt=None)
        rec2 = run(LaunchProfile.single(), Medium.vacuum(), doubled)
        ratio = far_field_slope(rec2) / far_field_slope(gaussian_record)
        assert ratio == pytest.approx(2.0, rel=0.02)

    @pytest.mark.parametrize("eps", [1e-4, 3e-4, 1e-3])
    def test_dispersion_is_linear_across_the_band(self, eps):
        # the far-field slope tracks eps/pi to within 2% across a decade
        from wavetrace import far_field_slope
        cfg = RunConfig(eps=eps, n_steps=3000, n_rays=85, span=3.0, output_every=50)
        rec = run(LaunchProfile.single(), Medium.vacuum(), cfg)
        assert far_field_slope(rec) == pytest.approx(eps / math.pi, rel=0.02)

    def test_on_axis_amplitude_drops_as_fourth_root_of_two(self, gaussian_record):
        # self-similar spreading: widths grow by sqrt(2) at one Rayleigh
        # range, so the on-axis amplitude falls by 2^(-1/4)
        rec = gaussian_record
        zr = rec.config.rayleigh_range
        s = int(np.argmin(np.abs(rec.mean_z - zr)))
        j = int(np.argmin(np.abs(rec.launch_x)))
        spacing0 = rec.x[0, j + 1] - rec.x[0, j]
        spacing1 = rec.x[s, j + 1] - rec.x[s, j]
        assert spacing1 / spacing0 == pytest.approx(math.sqrt(2.0), rel=0.01)
        assert rec.r[s, j] / rec.r[0, j] == pytest.approx(2.0 ** -0.25, rel=0.01)

    def test_distances_grow_with_launch_offset(self, gaussian_record):
        # diverging beam: final neighbor distances never fall below launch
        # and are (weakly) monotone in |launch x| across the interior
        rec = gaussian_record
        d0 = np.hypot(np.diff(rec.x[0]), np.diff(rec.z[0]))
        d1 = np.hypot(np.diff(rec.x[-1]), np.diff(rec.z[-1]))
        interior = slice(20, -20)  # the sponge neighborhood wobbles ~1%
        assert np.all(d1[interior] >= d0[interior] * 0.999)
        half = d1[len(d1) // 2:-20]
        assert np.all(np.diff(half) >= -0.02 * half[:-1])
        # the growth factor itself matches the self-similar envelope
        zr = rec.config.rayleigh_range
        s_final = math.sqrt(1.0 + (rec.mean_z[-1] / zr) ** 2)
        np.testing.assert_allclose(d1[interior] / d0[interior], s_final, rtol=5e-3)

    def test_far_field_slopes_span_the_limiting_cone(self, gaussian_record):
        # after three Rayleigh ranges the +-1-launched rays approach the
        # limiting slopes +-eps/pi from below
        rec = gaussian_record
        eps = rec.config.eps
        j = int(np.argmin(np.abs(rec.launch_x - 1.0)))
        slope = rec.px[-1, j] / rec.pz[-1, j]
        assert 0.85 * eps / math.pi <= slope <= eps / math.pi

    def test_abort_carries_partial_record(self):
        # a potential ramp steep enough to turn rays around mid-run
        cfg = small_config(n_steps=4000, n_rays=85)
        med = Medium(kind="potential", linear_x=-1e-4)
        with pytest.raises(SimulationAbort) as err:
            run(LaunchProfile.single(half_width=1e6), med, cfg)
        partial = err.value.partial_record
        assert partial.abort is not None
        assert partial.abort.step == err.value.step
        assert partial.n_samples >= 1
