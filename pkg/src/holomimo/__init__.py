"""Holographic MIMO channel synthesis and capacity evaluation toolkit."""

from .capacity import (
    CapacityReport,
    PowerAllocation,
    UserDrop,
    drop_users,
    mu_sum_capacity,
    su_capacity,
    uma_pathloss_delta_db,
    waterfill,
)
from .config import ScenarioConfig, config_from_dict, load_config, preset
from .coupling import (
    CouplingProfile,
    ElementPattern,
    FromSParams,
    HannanLimited,
    RelativeEta,
    SParameterMatrix,
    build_coupling_profile,
    efficiency_amplitude_matrix,
    efficiency_from_sparams,
    hannan_limit,
    load_pattern_file,
    load_sparams_file,
    pattern_gain,
)
from .geometry import ArrayGeometry, build_planar_array, element_position
from .lattice import (
    HarmonicIndex,
    SpectralLattice,
    VarianceTable,
    build_lattice,
    build_variance_table,
    enumerate_lattice,
    harmonic_angles,
    harmonic_vector,
    marginal_integral,
)
from .spectrum import (
    AngularPowerSpectrum,
    CdlClusterRow,
    VmfComponent,
    concentration_from_spread,
    load_cdl_table,
    rotate_spectrum,
    spectra_from_cdl,
    spectrum_value,
    vmf_density,
)
from .sweep import (
    SweepResult,
    SweepRow,
    emit,
    render,
    run_multi_user_sweep,
    run_single_user_sweep,
    run_sweep,
)
from .synthesis import (
    ChannelRealization,
    SynthesisPlan,
    build_plan,
    expected_frobenius,
    sample_channel,
)

__version__ = "0.1.0"
