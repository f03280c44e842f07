"""Trajectory-based simulation of monochromatic beams and matter waves.

Rays are advanced by a Hamiltonian system in which the only coupling is
the transverse gradient of G = (d2R/dx2)/(pz^2 R), rebuilt each step from
the amplitudes transported along the bundle by flux conservation.  That
closure reproduces diffraction and interference without solving a wave
equation; switching the coupling off recovers straight geometric rays.
"""

from .analysis import (
    FringeReport,
    UncertaintyReport,
    conservation_residual,
    far_field_slope,
    fringe_spacing,
    intensity_profile,
    intensity_total,
    uncertainty_metrics,
    waist_deviation,
    waist_line,
)
from .dynamics import (
    Medium,
    PhysicalUnits,
    RunConfig,
    RunRecord,
    advance,
    force,
    launch,
    run,
)
from .field import (
    CrossingError,
    Front,
    Ray,
    SimulationAbort,
    check_ordering,
    neighbor_distance,
    neighbor_distances,
    stencil_weights,
    transport_amplitudes,
    transverse_second_derivative,
    wave_potential,
    wave_potential_gradient,
)
from .profiles import (
    GaussianComponent,
    LaunchProfile,
    default_span,
    evaluate_profile,
    sample_launch_front,
)

__version__ = "0.1.0"
