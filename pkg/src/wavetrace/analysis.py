"""Validation quantities computed from run records.

Everything here is pure post-processing: waist-line agreement for the
Gaussian beam, the transverse-momentum uncertainty product, intensity
profiles and fringe measurements, and the conserved flux total.
"""

import math
from dataclasses import dataclass

import numpy as np


class AnalysisError(ValueError):
    """Requested quantity cannot be computed from the given record."""


@dataclass(frozen=True)
class UncertaintyReport:
    """Localization/divergence product at one station along the run.

    ``delta_x`` is the launch localization (2 in w0 units), ``delta_p`` the
    full transverse-momentum range of the centrally launched rays (p0
    units).  The product in hbar units follows from the unit conversion
    p0 = 2*pi*hbar/lambda0:  product_hbar = delta_x * delta_p * 2*pi/eps.
    A standard-deviation variant rides along for comparison.
    """

    z_eval: float
    delta_x: float
    delta_p: float
    product_hbar: float
    delta_p_std: float
    product_hbar_std: float


@dataclass(frozen=True)
class FringeReport:
    """Interior-maxima census of a transverse intensity profile."""

    fringed: bool
    n_maxima: int
    maxima_x: tuple
    spacing: float | None
    smooth_window: int
    min_height_ratio: float


def waist_line(z, eps):
    """Gaussian-beam envelope half-width sqrt(1 + (eps*z/pi)^2), w0 units."""
    z = np.asarray(z, dtype=float)
    out = np.sqrt(1.0 + (eps * z / math.pi) ** 2)
    return out if out.ndim else float(out)


def _launch_index(record, x0):
    spacing = record.launch_x[1] - record.launch_x[0]
    j = int(np.argmin(np.abs(record.launch_x - x0)))
    if abs(record.launch_x[j] - x0) > 0.5 * spacing + 1e-12:
        raise AnalysisError(f"no ray launched at x = {x0} (nearest {record.launch_x[j]:.4g})")
    return j


def select_front(record, z_eval):
    """Index of the sampled front whose mean z is nearest z_eval.

    Accepts z_eval up to half a sampling interval past the last front,
    mirroring the nearest-front semantics.
    """
    mean_z = record.mean_z
    slack = 0.5 * (mean_z[-1] - mean_z[-2]) if mean_z.size > 1 else 0.0
    if z_eval < -1e-12 or z_eval > mean_z[-1] + slack + 1e-12:
        raise AnalysisError(
            f"z_eval {z_eval:.6g} outside the recorded range [0, {mean_z[-1]:.6g}]"
        )
    return int(np.argmin(np.abs(mean_z - z_eval)))


def waist_deviation(record, eps):
    """Worst relative mismatch of the x = ±1 trajectories against the waist line."""
    devs = []
    for x0 in (1.0, -1.0):
        j = _launch_index(record, x0)
        expected = waist_line(record.z[:, j], eps)
        devs.append(np.abs(np.abs(record.x[:, j]) - expected) / expected)
    return float(np.max(devs))


def far_field_slope(record, launch_at=1.0):
    """Asymptotic |dx/dz| of one trajectory, from a linear fit of x^2 on z^2.

    The fit is exact for the hyperbolic waist trajectory, so it recovers
    the limiting slope from stations well before the motion has become
    visually straight.  Uses the later half of the sampled run.
    """
    j = _launch_index(record, launch_at)
    z = record.z[:, j]
    x = record.x[:, j]
    tail = z >= 0.5 * z[-1]
    if tail.sum() < 2:
        raise AnalysisError("record too short for a far-field fit")
    slope = np.polyfit(z[tail] ** 2, x[tail] ** 2, 1)[0]
    return math.sqrt(max(slope, 0.0))


def uncertainty_metrics(record, eps, z_eval):
    """Uncertainty product of the centrally launched rays at z_eval.

    delta_x is pinned at 2 (the launch localization, w0 units); delta_p is
    the full px range over rays launched within |x| <= 1, read off the
    sampled front nearest z_eval.
    """
    s = select_front(record, z_eval)
    spacing = record.launch_x[1] - record.launch_x[0]
    central = np.abs(record.launch_x) <= 1.0 + 0.5 * spacing
    if central.sum() < 2:
        raise AnalysisError("no rays launched within |x| <= 1")
    px = record.px[s, central]
    delta_x = 2.0
    delta_p = float(px.max() - px.min())
    delta_p_std = float(px.std())
    scale = 2.0 * math.pi / eps
    return UncertaintyReport(
        z_eval=float(record.mean_z[s]),
        delta_x=delta_x,
        delta_p=delta_p,
        product_hbar=delta_x * delta_p * scale,
        delta_p_std=delta_p_std,
        product_hbar_std=delta_x * delta_p_std * scale,
    )


def intensity_profile(record, z_eval, n_bins=None):
    """(x, R^2) across the sampled front nearest z_eval, arbitrary units.

    With n_bins the profile is linearly resampled onto that many uniform
    x positions.
    """
    s = select_front(record, z_eval)
    x = record.x[s]
    intensity = record.r[s] ** 2
    if n_bins is not None:
        grid = np.linspace(x[0], x[-1], int(n_bins))
        return grid, np.interp(grid, x, intensity)
    return x.copy(), intensity


def fringe_spacing(x, intensity, smooth_window=3, min_height_ratio=1e-3):
    """Mean spacing of interior intensity maxima, or a not-fringed report.

    Maxima are strict 3-point peaks found after an optional moving-average
    smoothing pass (window recorded in the report); peaks below
    ``min_height_ratio`` of the global maximum are ignored as numerical
    ripple.  Fewer than 3 maxima means the profile is not fringed.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if smooth_window and smooth_window > 1:
        kernel = np.ones(smooth_window) / smooth_window
        inner = np.convolve(y, kernel, mode="same")
        inner[0], inner[-1] = y[0], y[-1]
        y = inner
    interior = slice(1, -1)
    peaks = np.flatnonzero(
        (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]) & (y[1:-1] >= min_height_ratio * y.max())
    ) + 1
    maxima_x = tuple(float(v) for v in x[peaks])
    if peaks.size < 3:
        return FringeReport(False, int(peaks.size), maxima_x, None,
                            smooth_window, min_height_ratio)
    spacing = float(np.mean(np.diff(x[peaks])))
    return FringeReport(True, int(peaks.size), maxima_x, spacing,
                        smooth_window, min_height_ratio)


def intensity_total(record, sample):
    """Conserved flux sum, sum_j R_j^2 w_j over symmetrized widths, at one sample."""
    d = np.hypot(np.diff(record.x[sample]), np.diff(record.z[sample]))
    w = np.empty(d.size + 1)
    w[0], w[-1] = d[0], d[-1]
    w[1:-1] = 0.5 * (d[:-1] + d[1:])
    return float((record.r[sample] ** 2 * w).sum())


def conservation_residual(record):
    """Largest relative drift of the flux total across all samples."""
    totals = np.array([intensity_total(record, s) for s in range(record.n_samples)])
    return float(np.abs(totals - totals[0]).max() / totals[0])
