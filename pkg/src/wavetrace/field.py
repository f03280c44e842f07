"""Wavefront state and the amplitude-derived coupling field.

A front is an ordered bundle of rays advancing through the (x, z) plane,
each carrying a real amplitude.  Adjacent rays conserve the flux
``R_j^2 * d_j`` (amplitude squared times neighbor distance), which lets the
amplitude pattern be transported along the bundle without any field solve.
Transverse Lagrange stencils across the rays supply the curvature ratio

    G_j = (d2R/dx2)_j / (p_z_j^2 * R_j)

and its transverse gradient, the one and only coupling between rays.
"""

from dataclasses import dataclass, replace

import numpy as np

DEFAULT_STENCIL = 5
DEFAULT_AMP_FLOOR_RATIO = 1e-5
DEFAULT_GRAD_CAP = 1e6
DEFAULT_SMOOTH_LEN = 0.25


class SimulationAbort(RuntimeError):
    """A run cannot continue; carries the time (and step, once known)."""

    def __init__(self, message, t=None, step=None):
        super().__init__(message)
        self.t = t
        self.step = step


class CrossingError(SimulationAbort):
    """Two adjacent rays crossed, invalidating neighbor-distance transport."""

    def __init__(self, pair, t, gap):
        super().__init__(
            f"rays {pair[0]} and {pair[1]} crossed at t={t:.6g} (x-gap {gap:.3e})",
            t=t,
        )
        self.pair = pair
        self.gap = gap


@dataclass(frozen=True)
class Ray:
    """One trajectory point: launch-order id, position, momentum."""

    id: int
    x: float
    z: float
    px: float
    pz: float


@dataclass(frozen=True)
class Front:
    """Complete bundle state at one time.

    Arrays are indexed by launch order (ascending launch x).  The per-ray
    ``flux_constants`` hold ``R_j(0)^2 * w_j(0)`` with ``w_j`` the
    symmetrized flux-tube width of :func:`per_ray_widths`.  ``g`` and
    ``g_grad`` cache the coupling field and are dropped whenever positions
    or amplitudes move.
    """

    t: float
    x: np.ndarray
    z: np.ndarray
    px: np.ndarray
    pz: np.ndarray
    amplitude: np.ndarray
    flux_constants: np.ndarray  # R_j(0)^2 * width_j(0), see per_ray_widths
    launch_spacing: float
    g: np.ndarray | None = None
    g_grad: np.ndarray | None = None

    @property
    def crossing_threshold(self):
        """Margin below which adjacent rays count as crossed."""
        return 1e-6 * self.launch_spacing

    @property
    def n_rays(self):
        return self.x.size

    def ray(self, j):
        return Ray(j, self.x[j], self.z[j], self.px[j], self.pz[j])


@dataclass(frozen=True)
class OrderingReport:
    """Result of the ray-ordering check; ``pair`` names the first offender."""

    ok: bool
    pair: tuple[int, int] | None = None
    gap: float | None = None


def neighbor_distances(front):
    """Distances between adjacent rays, shape (n_rays - 1,)."""
    return np.hypot(np.diff(front.x), np.diff(front.z))


def neighbor_distance(front, j):
    """Distance between rays j and j-1 (1 <= j < n_rays)."""
    if not 1 <= j < front.n_rays:
        raise IndexError(f"pair index {j} out of range for {front.n_rays} rays")
    return float(np.hypot(front.x[j] - front.x[j - 1], front.z[j] - front.z[j - 1]))


def check_ordering(front):
    """Verify rays are strictly ordered in x with margin ``crossing_threshold``."""
    gaps = np.diff(front.x)
    bad = np.flatnonzero(gaps <= front.crossing_threshold)
    if bad.size == 0:
        return OrderingReport(ok=True)
    j = int(bad[0])
    return OrderingReport(ok=False, pair=(j, j + 1), gap=float(gaps[j]))


def per_ray_widths(front):
    """Symmetrized flux-tube width per ray.

    Interior rays average their two adjacent pair distances; the edge rays
    use their single pair.  The symmetric average is load-bearing: assigning
    each ray only its one-sided pair distance couples spacing perturbations
    to the transverse force with a phase that pumps grid-scale modes, and
    bundles then self-destruct within a fraction of a Rayleigh range.  With
    the symmetric width, every spacing mode feeds back as a pure restoring
    force (bounded oscillation).
    """
    d = neighbor_distances(front)
    widths = np.empty(front.n_rays)
    widths[0] = d[0]
    widths[-1] = d[-1]
    widths[1:-1] = 0.5 * (d[:-1] + d[1:])
    return widths


def transport_amplitudes(front):
    """Return the front with amplitudes advanced by flux conservation.

    Each ray gets ``R_j = sqrt(C_j / w_j)`` from its stored constant and its
    current symmetrized width, so ``R_j^2 w_j`` is conserved exactly.
    Raises :class:`CrossingError` if the bundle ordering has collapsed.
    """
    report = check_ordering(front)
    if not report.ok:
        raise CrossingError(report.pair, front.t, report.gap)
    amplitude = np.sqrt(front.flux_constants / per_ray_widths(front))
    return replace(front, amplitude=amplitude, g=None, g_grad=None)


def stencil_weights(nodes, x0, max_order=2):
    """Differentiation weights on arbitrarily spaced nodes (Fornberg recursion).

    Parameters
    ----------
    nodes : array, shape (..., q)
        Stencil node positions.
    x0 : array, shape (...)
        Evaluation point per stencil.
    max_order : int
        Highest derivative order to produce.

    Returns
    -------
    array, shape (..., q, max_order + 1)
        ``w[..., k, m]`` is the weight of the value at ``nodes[..., k]`` in
        the m-th derivative of the interpolating polynomial at ``x0``.
        Exact for polynomials up to degree q - 1.
    """
    nodes = np.asarray(nodes, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    q = nodes.shape[-1]
    lead = np.broadcast_shapes(nodes.shape[:-1], x0.shape)
    w = np.zeros(lead + (q, max_order + 1))
    w[..., 0, 0] = 1.0
    c1 = np.ones(lead)
    c4 = nodes[..., 0] - x0
    for i in range(1, q):
        mn = min(i, max_order)
        c2 = np.ones(lead)
        c5 = c4
        c4 = nodes[..., i] - x0
        for j in range(i):
            c3 = nodes[..., i] - nodes[..., j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[..., i, k] = c1 * (k * w[..., i - 1, k - 1] - c5 * w[..., i - 1, k]) / c2
                w[..., i, 0] = -c1 * c5 * w[..., i - 1, 0] / c2
            for k in range(mn, 0, -1):
                w[..., j, k] = (c4 * w[..., j, k] - k * w[..., j, k - 1]) / c3
            w[..., j, 0] = c4 * w[..., j, 0] / c3
        c1 = c2
    return w


def _validate_stencil(stencil, n):
    if stencil % 2 == 0 or stencil < 5:
        raise ValueError(f"stencil size must be odd and >= 5, got {stencil}")
    if n < stencil:
        raise ValueError(f"need at least {stencil} rays for a {stencil}-point stencil, have {n}")


def _fit_window(stencil, n):
    # least-squares tail windows prefer 2*stencil - 1 rays but clamp to the
    # bundle on small fronts
    return min(2 * stencil - 1, n)


_TINY_AMPLITUDE = 1e-300  # keeps log() finite on underflowed tails


def amplitude_floor(front, floor_ratio=DEFAULT_AMP_FLOOR_RATIO):
    """Regularization floor on amplitudes: ratio times the peak amplitude."""
    return floor_ratio * float(front.amplitude.max())


def _log_amplitude(r, floor_ratio):
    # Log of the peak-relative amplitude: the peak normalization makes the
    # whole derivative pipeline (tail fits, smoothing, stencils) see
    # bit-near-identical data under uniform amplitude rescaling, and the
    # common offset never meets the 1/h^2-scale stencil weights.
    peak = r.max()
    if peak <= 0.0:
        return np.zeros_like(r)
    return np.log(np.maximum(r / peak, max(floor_ratio, _TINY_AMPLITUDE)))


def _tail_fit(x, q, stencil, side):
    """Quadratic model of log-amplitude over the outermost rays of one side.

    The bundle truncates a smooth wavefront whose tails are locally
    Gaussian, so log-amplitude is locally quadratic and the fit is exact
    for a pure Gaussian tail.  A least-squares fit over 2*stencil - 1 rays
    keeps the model blind to grid-scale spacing noise.
    """
    m = _fit_window(stencil, x.size)
    sel = slice(None, m) if side == 0 else slice(-m, None)
    return np.polyfit(x[sel], q[sel], 2)


def _edge_gaps(x, stencil):
    # Smooth per-side gap estimate over the tail-fit window; tying ghost
    # geometry to one noisy edge gap feeds position noise into the weights.
    m = _fit_window(stencil, x.size)
    return (x[m - 1] - x[0]) / (m - 1), (x[-1] - x[-m]) / (m - 1)


def _extend_log_amplitude(x, q, stencil, m_lo=None, m_hi=None):
    """Log-amplitude samples continued across ghost nodes beyond both edges.

    Centered stencils at the edge rays need neighbors that do not exist;
    one-sided stencils there are biased and pump a slow instability of the
    coupled bundle.  Ghost values follow the fitted tail model instead.
    """
    if m_lo is None:
        m_lo = m_hi = stencil // 2
    lo_gap, hi_gap = _edge_gaps(x, stencil)
    lo_x = x[0] - lo_gap * np.arange(m_lo, 0, -1)
    hi_x = x[-1] + hi_gap * np.arange(1, m_hi + 1)
    lo_q = np.polyval(_tail_fit(x, q, stencil, 0), lo_x)
    hi_q = np.polyval(_tail_fit(x, q, stencil, 1), hi_x)
    return np.concatenate((lo_x, x, hi_x)), np.concatenate((lo_q, q, hi_q))


def _smoothed_nodes(x, q, stencil, smooth_len):
    """Ghost-extended log-amplitude, smoothed over a fixed physical length.

    Smoothing is a width-weighted Gaussian kernel of standard deviation
    ``smooth_len`` applied along x.  It acts as the transverse resolution
    limit of the scheme and is what makes the self-consistent bundle
    well-posed: the flux-closure feedback pumps perturbations at a rate
    growing with their wavenumber (and with the local slope of log R), so
    unfiltered bundles self-destruct at the grid scale.  A Gaussian kernel
    adds only a constant to any locally quadratic log-amplitude, leaving
    Gaussian-beam dynamics untouched.
    """
    n_ghost = stencil // 2
    if smooth_len <= 0:
        return _extend_log_amplitude(x, q, stencil)
    lo_gap, hi_gap = _edge_gaps(x, stencil)
    reach = 4.0 * smooth_len
    m_lo = max(n_ghost, int(np.ceil(reach / lo_gap)))
    m_hi = max(n_ghost, int(np.ceil(reach / hi_gap)))
    x_ext, q_ext = _extend_log_amplitude(x, q, stencil, m_lo, m_hi)
    width = np.empty(x_ext.size)
    width[1:-1] = 0.5 * (x_ext[2:] - x_ext[:-2])
    width[0], width[-1] = x_ext[1] - x_ext[0], x_ext[-1] - x_ext[-2]
    # The kernel stays dense on purpose: contact clusters compress gaps
    # well below the launch spacing, so no index band bounded at launch
    # can cover the kernel reach there, and under-covering re-opens the
    # grid instability.
    out = slice(m_lo - n_ghost, m_lo + x.size + n_ghost)
    kernel = np.exp(-((x_ext[out, None] - x_ext[None, :]) / smooth_len) ** 2 / 2.0)
    kernel *= width[None, :]
    q_s = (kernel @ q_ext) / kernel.sum(axis=1)
    return x_ext[out], q_s


def _coupling_field(front, stencil, floor_ratio, smooth_len):
    """G and dG/dx (uncapped) from smoothed log-amplitude stencil calculus.

    With q = log(max(R, floor)) the curvature ratio and its gradient are

        G = (q'' + q'^2) / pz^2,      dG/dx = (q''' + 2 q' q'') / pz^2.

    Working on q instead of R is load-bearing: amplitudes fall through 7+
    decades across a beam, and stencils applied to R itself respond to the
    steep envelope with biased, noise-amplifying estimates.  For Gaussian
    superpositions q is locally polynomial, so these stencils are exact on
    the launch beam and its spread copies.  The floor inside the log bounds
    node regions and cancels out of both derivatives, which keeps G exactly
    invariant under uniform amplitude rescaling.
    """
    q = _log_amplitude(front.amplitude, floor_ratio)
    x_nodes, q_nodes = _smoothed_nodes(front.x, q, stencil, smooth_len)
    idx = np.arange(front.n_rays)[:, None] + np.arange(stencil)
    w = stencil_weights(x_nodes[idx], front.x, max_order=3)
    # Centering each window makes the derivatives exactly blind to the
    # common offset of q, so G is invariant under amplitude rescaling to
    # round-off of the residuals rather than of the full log values.
    v = q_nodes[idx]
    v = v - v[:, stencil // 2, None]
    d1, d2, d3 = ((w[..., m] * v).sum(axis=-1) for m in (1, 2, 3))
    pz2 = front.pz**2
    return (d2 + d1**2) / pz2, (d3 + 2.0 * d1 * d2) / pz2


def transverse_second_derivative(front, j, stencil=DEFAULT_STENCIL):
    """d2R/dx2 at ray j from the Lagrange polynomial through its stencil.

    Stencils are centered on ray j, reaching into tail-model ghost nodes
    at the bundle edges.  Exact (to round-off) for amplitude samples on a
    polynomial of degree <= stencil - 1 over interior stencils.
    """
    _validate_stencil(stencil, front.n_rays)
    q = np.log(np.maximum(front.amplitude, _TINY_AMPLITUDE))
    x_ext, q_ext = _extend_log_amplitude(front.x, q, stencil)
    r_ext = np.exp(q_ext)
    r_ext[stencil // 2:stencil // 2 + front.n_rays] = front.amplitude
    sel = slice(j, j + stencil)  # extended coords: ray j sits at j + stencil//2
    w = stencil_weights(x_ext[sel], front.x[j], max_order=2)
    return float(w[..., 2] @ r_ext[sel])


def wave_potential(front, stencil=DEFAULT_STENCIL, floor_ratio=DEFAULT_AMP_FLOOR_RATIO,
                   smooth_len=DEFAULT_SMOOTH_LEN):
    """Return the front with the coupling field G cached per ray.

    G is the transverse curvature ratio (d2R/dx2) / (pz^2 R), evaluated in
    the log-amplitude form of :func:`_coupling_field` with R floored at
    ``floor_ratio`` times the peak, so it is total near amplitude nodes
    and exactly invariant under uniform rescaling of all amplitudes.
    """
    _validate_stencil(stencil, front.n_rays)
    g, _ = _coupling_field(front, stencil, floor_ratio, smooth_len)
    return replace(front, g=g, g_grad=None)


def wave_potential_gradient(front, stencil=DEFAULT_STENCIL, grad_cap=DEFAULT_GRAD_CAP,
                            floor_ratio=DEFAULT_AMP_FLOOR_RATIO,
                            smooth_len=DEFAULT_SMOOTH_LEN):
    """Return the front with dG/dx cached per ray, clipped to ±grad_cap.

    Differentiates the same log-amplitude field that produced the cached G
    (requires :func:`wave_potential` first).
    """
    if front.g is None:
        raise ValueError("wave potential not cached; call wave_potential first")
    _validate_stencil(stencil, front.n_rays)
    _, grad = _coupling_field(front, stencil, floor_ratio, smooth_len)
    return replace(front, g_grad=np.clip(grad, -grad_cap, grad_cap))


def refresh_field(front, stencil=DEFAULT_STENCIL, floor_ratio=DEFAULT_AMP_FLOOR_RATIO,
                  grad_cap=DEFAULT_GRAD_CAP, smooth_len=DEFAULT_SMOOTH_LEN,
                  transport=True):
    """Transport amplitudes (optionally) and rebuild the G caches."""
    if transport:
        front = transport_amplitudes(front)
    _validate_stencil(stencil, front.n_rays)
    g, grad = _coupling_field(front, stencil, floor_ratio, smooth_len)
    return replace(front, g=g, g_grad=np.clip(grad, -grad_cap, grad_cap))
