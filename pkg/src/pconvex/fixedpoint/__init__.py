"""Fixed-point procedures on p-convex bodies."""

from pconvex.fixedpoint.alternatives import (
    EpsReport,
    ScanResult,
    birkhoff_kellogg_scan,
    homotopy_map,
    homotopy_solve,
    leray_schauder_eps_scan,
    trace_path,
)
from pconvex.fixedpoint.certificates import (
    Certificate,
    Check,
    IterTrace,
    StepRecord,
    revalidate_certificate,
)
from pconvex.fixedpoint.conditions import (
    CLASSICAL_CONDITIONS,
    CONDITIONS,
    NONSELF_CONDITIONS,
    POWER_CONDITIONS,
    SEMINORM_CONDITIONS,
    ConditionReport,
    check_boundary_conditions,
    decreasing_gap,
    increasing_gap,
    nonself_condition_dispatch,
)
from pconvex.fixedpoint.maps import MAPS, MapSpec, benchmark_maps, build_map
from pconvex.fixedpoint.scheme import (
    approximate_fixed_point,
    best_approx_certificate,
    default_schedule,
    rothe_fixed_point,
)

__all__ = [
    "CLASSICAL_CONDITIONS", "CONDITIONS", "Certificate", "Check", "ConditionReport",
    "EpsReport", "IterTrace", "MAPS", "MapSpec", "NONSELF_CONDITIONS", "POWER_CONDITIONS",
    "SEMINORM_CONDITIONS", "ScanResult", "StepRecord", "approximate_fixed_point",
    "benchmark_maps", "best_approx_certificate", "birkhoff_kellogg_scan", "build_map",
    "check_boundary_conditions", "decreasing_gap", "default_schedule", "homotopy_map",
    "homotopy_solve", "increasing_gap", "leray_schauder_eps_scan", "nonself_condition_dispatch",
    "revalidate_certificate", "rothe_fixed_point", "trace_path",
]
