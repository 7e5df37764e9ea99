"""Bell-CHSH violation, entanglement and Wigner negativity for Jaynes-Cummings hybrid states."""

from .bellchsh import (
    BellResult,
    CorrelationMatrix,
    MeasurementSettings,
    bell_value_at,
    chsh_from_matrix,
    correlation_matrix,
    horodecki_value,
    maximize_bell,
    recover_settings,
    smsv_closed_form,
)
from .disorder import (
    DisorderSpec,
    detect_saturation,
    detect_violation_loss,
    quench_series,
    quenched_oracle,
    quenched_realistic,
)
from .errors import *  # noqa: F401,F403
from .fitting import fit_curve, quartic_crossing
from .fockspace import (
    HybridMixedState,
    HybridState,
    QubitVector,
    entanglement_entropy,
    make_coherent,
    make_fock,
    make_pseudospin,
    make_smsv,
)
from .jcdynamics import (
    Cat,
    ClassicalMixture,
    CoherentProduct,
    FockProduct,
    JCParams,
    Picture,
    SmsvProduct,
    evolve,
    prepare,
)
from .wigner import WignerGridSpec, hybrid_wigner, negativity_volume

__version__ = "0.1.0"
