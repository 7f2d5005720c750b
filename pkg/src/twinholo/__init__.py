"""Two-photon holography testbed.

Binary phase hologram design, stochastic twin-photon simulation,
photon-counting detection and sum-coordinate coincidence retrieval,
validated against an analytic coincidence-rate map.
"""

__version__ = "0.1.0"

from .field import (  # noqa: F401
    ComplexField,
    Grid2D,
    fft2_centered,
    gaussian_beam,
    ifft2_centered,
    lens_fourier_2f,
    propagate_angular_spectrum,
)
from .holography import (  # noqa: F401
    PhaseHologram,
    TargetPattern,
    design_offaxis_binary,
    dirac_array_target,
    speckle_image_target,
    transmission,
)
from .oracle import OracleMap, analytic_coincidence_map, compare_maps  # noqa: F401
from .spdc import (  # noqa: F401
    CrystalParams,
    PairSamplingEngine,
    PumpParams,
    SimConfig,
    WignerEngine,
    generate_vacuum,
    pair_sample_frame,
    propagate_arm,
    wigner_pulse,
)
from .detection import DetectorParams, PhotonFrame, detect, threshold_grayscale  # noqa: F401
from .analysis import (  # noqa: F401
    CorrelationAccumulator,
    CorrelationMap,
    degree_of_correlation,
    peak_widths,
    schmidt_empirical,
    schmidt_theoretical,
    shuffled_control,
    sum_coordinate_correlation,
    to_decibels,
)
