"""Frequency-domain stability analysis and damping-compensation planning
for multi-inverter AC networks."""

__version__ = "0.1.0"

from .dq_core import (
    DqBlock,
    FrequencyGrid,
    PoleHitError,
    SingularBlockError,
    TransferElement,
    block_inverse,
    evaluate,
    freq_shift,
)
from .component_models import (
    ADParams,
    AdmittanceTable,
    CapacitorParams,
    GridImpedanceParams,
    InverterParams,
    PiCableParams,
    RlBranchParams,
    ad_admittance,
    ad_curve_cluster,
    inverter_admittance,
    pi_cable_stamps,
    rl_series_dq,
    tabulated_admittance,
)
from .network_assembly import (
    Branch,
    InvalidNetworkError,
    NetworkGraph,
    NodalAdmittance,
    Shunt,
    SingularBranchError,
    assemble,
    assemble_grid,
    assemble_parts,
    validate,
    with_shunt,
)
from .stability_engine import (
    BisectionError,
    CrossoverEvent,
    DefectiveMatrixWarning,
    EigenSample,
    EigenTrace,
    EigNonConvergenceError,
    StabilityReport,
    analyze,
    assess,
    eig_lr,
    find_crossovers,
    nyquist_winding,
    sweep,
    track,
)
from .compensation_planner import (
    CalibrationInfeasibleError,
    CompensationCoefficient,
    CompensationPlan,
    DegenerateEigenvalueWarning,
    PlanInfeasibleError,
    SensitivityEntry,
    calibrate_ad,
    compensation_coefficient,
    compensation_table,
    plan,
    rank_locations,
    sensitivity,
    verify_with_ad,
)
from .cli_reporting import (
    NetworkFileError,
    ReportDocument,
    RunConfig,
    emit_fixture,
    load_network,
    run_command,
)
