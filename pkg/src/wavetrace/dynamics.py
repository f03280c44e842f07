"""Hamiltonian advancement of the ray bundle in dimensionless time.

The reduced in-vacuum system per ray is

    dx/dt = px,   dz/dt = pz = sqrt(1 - px^2),
    dpx/dt = (eps^2 / 8 pi^2) dG/dx,

with the coupling field G rebuilt self-consistently from the bundle after
every drift.  Media enter through an extra force (1/2) grad(m) where m is
n^2 for a refractive medium or -V/E for a potential one.  Stepping is
kick-drift-kick: the transverse coupling keeps the momentum norm fixed in
vacuum, and pz is recomputed from the norm there rather than integrated.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import field as field_ops
from .field import CrossingError, Front, SimulationAbort
from .profiles import default_span, sample_launch_front

FORCE_PREFACTOR = 1.0 / (8.0 * math.pi**2)  # multiplies eps^2 * dG/dx
STEPS_PER_RAYLEIGH = 2000
_TINY_FLUX = 1e-300


class TurnBackError(SimulationAbort):
    """A ray's transverse momentum reached the full norm (forward model broken)."""

    def __init__(self, ray, t):
        super().__init__(f"ray {ray} turned back at t={t:.6g} (px^2 >= 1)", t=t)
        self.ray = ray


class MediumError(SimulationAbort):
    """Medium invariant violated at a ray position."""

    def __init__(self, message, ray, t):
        super().__init__(f"{message} (ray {ray}, t={t:.6g})", t=t)
        self.ray = ray


@dataclass(frozen=True)
class Medium:
    """Propagation medium seen by the bundle.

    kind "vacuum" has no external force.  "refractive" supplies n^2(x, z)
    and "potential" supplies V(x, z)/E, either as the built-in linear ramp
    ``1 + linear_x * x`` / ``linear_x * x`` or through ``field_fn``, a
    callable (x, z) -> (value, d/dx, d/dz) evaluated on arrays.
    """

    kind: str = "vacuum"
    linear_x: float = 0.0
    field_fn: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("vacuum", "refractive", "potential"):
            raise ValueError(f"unknown medium kind {self.kind!r}")
        if self.kind == "vacuum" and (self.linear_x != 0.0 or self.field_fn is not None):
            raise ValueError("vacuum medium takes no field parameters")

    @classmethod
    def vacuum(cls):
        return cls()

    def evaluate(self, x, z):
        """Medium value (n^2 or V/E) and its x-, z-derivatives at (x, z)."""
        if self.kind == "vacuum":
            one = np.ones_like(x)
            return one, np.zeros_like(x), np.zeros_like(x)
        if self.field_fn is not None:
            return self.field_fn(x, z)
        base = 1.0 if self.kind == "refractive" else 0.0
        return (
            base + self.linear_x * x,
            np.full_like(x, self.linear_x),
            np.zeros_like(x),
        )


@dataclass(frozen=True)
class PhysicalUnits:
    """Optional dimensioned scales (SI) used only for reporting."""

    w0: float
    lambda0: float
    mass: float | None = None


@dataclass(frozen=True)
class RunConfig:
    """All knobs of one run; unset dt defaults to a half-thousandth Rayleigh range."""

    eps: float = 1.65e-4
    dt: float | None = None
    n_steps: int = 6000
    n_rays: int = 145
    span: float | None = None
    stencil: int = 5
    amp_floor_ratio: float = field_ops.DEFAULT_AMP_FLOOR_RATIO
    grad_cap: float = field_ops.DEFAULT_GRAD_CAP
    smooth_len: float = field_ops.DEFAULT_SMOOTH_LEN
    contact_fraction: float = 0.1
    sponge_rays: int = 10
    sponge_strength: float = 0.5
    output_every: int = 30
    eikonal: bool = False
    physical_units: PhysicalUnits | None = None

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.dt is None:
            object.__setattr__(self, "dt", self.rayleigh_range / STEPS_PER_RAYLEIGH)
        elif self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        if self.smooth_len < 0:
            raise ValueError("smooth_len must be non-negative")
        if not 0.0 <= self.contact_fraction < 1.0:
            raise ValueError("contact_fraction must be within [0, 1)")
        if self.sponge_rays < 0 or not 0.0 <= self.sponge_strength <= 1.0:
            raise ValueError("sponge_rays must be >= 0 and sponge_strength within [0, 1]")
        if self.span is not None and self.span <= 0:
            raise ValueError("span must be positive")
        if self.stencil % 2 == 0 or self.stencil < 5:
            raise ValueError("stencil must be odd and >= 5")
        if self.physical_units is not None:
            derived = self.physical_units.lambda0 / self.physical_units.w0
            if abs(derived - self.eps) > 1e-6 * self.eps:
                raise ValueError(
                    f"eps {self.eps} inconsistent with physical units "
                    f"(lambda0/w0 = {derived:.6e})"
                )

    @property
    def rayleigh_range(self):
        """Dimensionless collimated-to-diverging crossover distance, pi/eps."""
        return math.pi / self.eps


@dataclass
class RunDiagnostics:
    steps_completed: int = 0
    max_norm_drift: float = 0.0
    max_norm_error: float = 0.0
    capped_gradient_count: int = 0
    floored_division_count: int = 0
    contact_count: int = 0
    min_ray_separation: float = math.inf


@dataclass(frozen=True)
class AbortInfo:
    kind: str
    step: int
    t: float
    detail: str


@dataclass
class RunRecord:
    """Per-ray time series sampled along a run, plus run diagnostics.

    ``t`` has shape (n_samples,); the trajectory arrays have shape
    (n_samples, n_rays).  ``launch_x`` keeps each ray's seed position for
    launch-indexed analyses.
    """

    config: RunConfig
    medium: Medium
    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    px: np.ndarray
    pz: np.ndarray
    r: np.ndarray
    g: np.ndarray
    launch_x: np.ndarray
    diagnostics: RunDiagnostics
    abort: AbortInfo | None = None

    @property
    def n_samples(self):
        return self.t.size

    @property
    def mean_z(self):
        return self.z.mean(axis=1)


@dataclass
class _StepStats:
    norm_drift: float = 0.0
    capped: int = 0
    floored: int = 0
    contacts: int = 0
    min_separation: float = math.inf


def _coupling_weight(front, config):
    """Credibility taper of the coupling force, from 0 at the amplitude
    floor to 1 a decade above it.

    Below the floor the amplitude carries no usable structure, and the
    floor clamp itself shapes a spurious ridge in G right at the clamp
    boundary that otherwise squeezes the near-dead rays together.
    """
    floor = field_ops.amplitude_floor(front, config.amp_floor_ratio)
    if floor <= 0.0:
        return 1.0
    headroom = np.log(np.maximum(front.amplitude, 1e-300) / floor)
    return np.clip(headroom / math.log(10.0), 0.0, 1.0)


def _forces(front, medium, config):
    """Transverse and longitudinal force arrays for the current caches."""
    n = front.n_rays
    fx = np.zeros(n)
    fz = np.zeros(n)
    if not config.eikonal:
        if front.g_grad is None:
            raise ValueError("G gradient not cached; refresh the field first")
        coupling = config.eps**2 * FORCE_PREFACTOR * front.g_grad
        coupling = coupling * _coupling_weight(front, config)
        fx += coupling
        if medium.kind != "vacuum":
            # grad G is perpendicular to p, fixing its z-component.
            fz -= coupling * front.px / front.pz
    if medium.kind != "vacuum":
        value, ddx, ddz = medium.evaluate(front.x, front.z)
        if medium.kind == "refractive":
            if np.any(value <= 0):
                j = int(np.argmax(value <= 0))
                raise MediumError("refractive index squared must stay positive", j, front.t)
            fx += 0.5 * ddx
            fz += 0.5 * ddz
        else:
            if np.any(value >= 1):
                j = int(np.argmax(value >= 1))
                raise MediumError("potential must stay below the total energy", j, front.t)
            fx -= 0.5 * ddx
            fz -= 0.5 * ddz
    return fx, fz


def force(front, medium, config, j=None):
    """Transverse force on ray j (or on all rays if j is None)."""
    fx, _ = _forces(front, medium, config)
    return fx if j is None else float(fx[j])


def _kick(front, medium, config, half_dt, stats):
    fx, fz = _forces(front, medium, config)
    px = front.px + half_dt * fx
    over = np.abs(px) >= 1.0
    if np.any(over):
        raise TurnBackError(int(np.argmax(over)), front.t)
    if medium.kind == "vacuum":
        stats.norm_drift = max(stats.norm_drift, float(np.abs(px**2 + front.pz**2 - 1.0).max()))
        pz = np.sqrt(1.0 - px**2)
    else:
        pz = front.pz + half_dt * fz
        if np.any(pz <= 0):
            raise TurnBackError(int(np.argmax(pz <= 0)), front.t)
    return replace(front, px=px, pz=pz)


def _pair_contacts(front, medium, config, stats):
    """Hold converging ray pairs apart at the sub-resolution contact gap.

    Amplitude structure narrower than the field smoothing length is not
    representable, so nothing in the force can arrest the final approach
    of a converging ray pair; unchecked, such pairs cross ballistically
    and abort the run even though they carry negligible flux.  Clusters of
    rays whose x-gaps fall below ``contact_fraction`` of the launch
    spacing are treated as incompressible at that scale: positions are
    projected to the contact spacing around the cluster's flux-weighted
    center, and still-approaching pairs take their flux-weighted mean px.
    Separating pairs keep their velocities, so the field is always free
    to re-expand a cluster.
    """
    gap_min = config.contact_fraction * front.launch_spacing
    if gap_min <= 0.0 or not (np.diff(front.x) < gap_min).any():
        return front
    weights = np.maximum(front.flux_constants, _TINY_FLUX)
    x, blocks = _project_min_gap(front.x, weights, gap_min)
    px = front.px.copy()
    for j, k in blocks:  # rays j..k-1 now sit at the contact spacing
        stats.contacts += k - 1 - j
        if (np.diff(px[j:k]) < 0).any():
            px[j:k] = np.average(px[j:k], weights=weights[j:k])
    pz = np.sqrt(1.0 - px**2) if medium.kind == "vacuum" else front.pz
    return replace(front, x=x, px=px, pz=pz)


def _project_min_gap(x, w, gap):
    """Least-weighted-movement positions with every gap >= ``gap``.

    Substituting u_i = x_i - i*gap turns the gap constraints into
    monotonicity, which pool-adjacent-violators solves exactly.  Returns
    the projected positions and the (start, stop) index ranges of the
    merged blocks (the contact clusters).
    """
    shift = gap * np.arange(x.size)
    u = x - shift
    means = []
    wsums = []
    starts = []
    for i in range(u.size):
        mean, wsum, start = u[i], w[i], i
        while means and means[-1] >= mean:
            prev_w = wsums.pop()
            mean = (means.pop() * prev_w + mean * wsum) / (prev_w + wsum)
            wsum += prev_w
            start = starts.pop()
        means.append(mean)
        wsums.append(wsum)
        starts.append(start)
    out = np.empty_like(u)
    blocks = []
    bounds = starts[1:] + [u.size]
    for mean, start, stop in zip(means, starts, bounds):
        out[start:stop] = mean
        if stop - start > 1:
            blocks.append((start, stop))
    return out + shift, blocks


def _edge_sponge(front, medium, config):
    """Relax the outermost rays' px toward the local linear velocity profile.

    The truncated bundle supports slowly growing numerical modes pinned at
    its edges (any stencil or tail-model closure there feeds spacing noise
    back into the transverse force).  The sponge dissipates exactly those
    modes: the physical spreading flow has px linear in x across the tail,
    so relaxing toward a least-squares linear fit leaves smooth motion
    untouched.  Strength ramps quadratically from 0 at the inner boundary
    of the sponge to ``sponge_strength`` at the outermost ray.
    """
    width = config.sponge_rays
    n = front.n_rays
    if width == 0 or config.sponge_strength == 0.0 or n < 2 * (width + config.stencil):
        return front
    px = front.px.copy()
    # Per-step weight scales with dt so the damping acts as a rate and the
    # trajectory limit is step-size independent.
    strength = min(1.0, config.sponge_strength * config.dt /
                   (config.rayleigh_range / STEPS_PER_RAYLEIGH))
    ramp = strength * (np.arange(width, 0, -1) / width) ** 2
    for sel, zone in (
        (slice(None, width + config.stencil), slice(None, width)),
        (slice(-width - config.stencil, None), slice(-width, None)),
    ):
        fit = np.polyfit(front.x[sel], px[sel], 1)
        w = ramp if zone.start is None else ramp[::-1]
        px[zone] += w * (np.polyval(fit, front.x[zone]) - px[zone])
    pz = np.sqrt(1.0 - px**2) if medium.kind == "vacuum" else front.pz
    return replace(front, px=px, pz=pz)


def _advance(front, medium, config, dt, refresh=True):
    """One kick-drift-kick step; returns the new front and step statistics."""
    stats = _StepStats()
    report = field_ops.check_ordering(front)
    if not report.ok:
        raise CrossingError(report.pair, front.t, report.gap)

    front = _kick(front, medium, config, 0.5 * dt, stats)
    front = replace(
        front,
        t=front.t + dt,
        x=front.x + dt * front.px,
        z=front.z + dt * front.pz,
    )
    if refresh:
        front = _pair_contacts(front, medium, config, stats)
        front = field_ops.refresh_field(
            front, config.stencil, config.amp_floor_ratio, config.grad_cap,
            config.smooth_len,
        )
        floor = field_ops.amplitude_floor(front, config.amp_floor_ratio)
        stats.floored = int((front.amplitude < floor).sum())
        stats.capped = int((np.abs(front.g_grad) >= config.grad_cap).sum())
        stats.min_separation = float(field_ops.neighbor_distances(front).min())
    front = _kick(front, medium, config, 0.5 * dt, stats)
    if refresh:
        front = _edge_sponge(front, medium, config)
    return front, stats


def advance(front, medium, config, dt=None, refresh=True):
    """Advance the front by one step of dt (config.dt unless overridden).

    ``refresh=False`` keeps amplitudes and the G caches frozen through the
    step, which makes the stepper exactly time-reversible; it exists for
    integrator verification, not production runs.
    """
    new_front, _ = _advance(front, medium, config, config.dt if dt is None else dt, refresh)
    return new_front


def launch(profile, config):
    """Sample the launch front and prime its coupling-field caches."""
    span = config.span if config.span is not None else default_span(profile)
    front = sample_launch_front(profile, config.n_rays, span, config.eps)
    return field_ops.refresh_field(
        front, config.stencil, config.amp_floor_ratio, config.grad_cap,
        config.smooth_len, transport=False,
    )


def run(profile, medium, config):
    """Run the full evolution, sampling every ``output_every`` steps.

    Returns a :class:`RunRecord`.  On an unrecoverable state (ray crossing,
    turn-back, medium violation) raises :class:`~.field.SimulationAbort`
    with ``partial_record`` holding everything sampled up to the failure.
    """
    config = replace(config, span=config.span if config.span is not None
                     else default_span(profile))
    front = launch(profile, config)
    diagnostics = RunDiagnostics()
    samples = [front]
    abort = None

    for step in range(1, config.n_steps + 1):
        try:
            front, stats = _advance(front, medium, config, config.dt)
        except SimulationAbort as exc:
            exc.step = step
            abort = AbortInfo(kind=type(exc).__name__, step=step, t=exc.t, detail=str(exc))
            exc.partial_record = _build_record(config, medium, samples, diagnostics, abort)
            raise
        diagnostics.steps_completed = step
        diagnostics.max_norm_drift = max(diagnostics.max_norm_drift, stats.norm_drift)
        diagnostics.capped_gradient_count += stats.capped
        diagnostics.floored_division_count += stats.floored
        diagnostics.contact_count += stats.contacts
        diagnostics.min_ray_separation = min(diagnostics.min_ray_separation, stats.min_separation)
        if step % config.output_every == 0 or step == config.n_steps:
            samples.append(front)

    return _build_record(config, medium, samples, diagnostics, abort)


def _build_record(config, medium, samples, diagnostics, abort):
    stack = lambda attr: np.stack([getattr(f, attr) for f in samples])
    x = stack("x")
    px = stack("px")
    pz = stack("pz")
    diagnostics.max_norm_error = float(np.abs(px**2 + pz**2 - 1.0).max()) \
        if medium.kind == "vacuum" else math.nan
    if diagnostics.min_ray_separation is math.inf:
        diagnostics.min_ray_separation = float(
            field_ops.neighbor_distances(samples[0]).min()
        )
    return RunRecord(
        config=config,
        medium=medium,
        t=np.array([f.t for f in samples]),
        x=x,
        z=stack("z"),
        px=px,
        pz=pz,
        r=stack("amplitude"),
        g=stack("g"),
        launch_x=samples[0].x.copy(),
        diagnostics=diagnostics,
        abort=abort,
    )
