"""
Pipelines behind the CLI commands: build the model, loop and bundle from a
RunConfig and assemble the pydantic report models.
"""
import logging
from typing import Any, Dict, Optional, Tuple

import pandas as pd

from . import __version__, settings
from .eigenframe import (
    Bundle,
    LoopDef,
    bundle_along,
    constant_loop,
    named_loop,
    track_path,
    waypoint_loop,
)
from .errors import ConfigError, ToleranceFailure, UnsupportedLoop
from .holonomy import (
    HolonomyResult,
    basis_change,
    classify_permutation,
    conjugation_distance,
    holonomy_M,
    label_permutation,
)
from .matrixcore import dagger, frobenius
from .models import ParameterPoint, resolve_custom_hamiltonian
from .oracles import OracleValues, analytic_holonomies, resolve_theta
from .propagate import PropagationResult, propagate_loop
from .schemas import (
    CheckResult,
    ComparisonSection,
    GaugePolicy,
    HolonomySection,
    LoopName,
    ModelKind,
    ModelSpec,
    OracleSection,
    OutputKind,
    PropagationSection,
    QuasienergyEnds,
    Report,
    RunConfig,
    SpectrumSection,
)
from .utils.parser import parse_waypoints

logger = logging.getLogger(__name__)

# Tolerance for reading a propagated matrix as a permutation
PROPAGATED_PERM_TOL = 0.1


def build_model_spec(config: RunConfig) -> ModelSpec:
    """
    Raises:
        ConfigError: if the custom Hamiltonian cannot be resolved
    """
    if config.model == ModelKind.CUSTOM_STATIC:
        hamiltonian, dim = resolve_custom_hamiltonian(config.custom_hamiltonian, config.dim)
        return ModelSpec(kind=config.model, hamiltonian=hamiltonian, dim=dim,
                         name=config.custom_hamiltonian)
    return ModelSpec(kind=config.model, T=config.T, p=config.p)


def build_base_point(config: RunConfig) -> ParameterPoint:
    """Base point; custom models share the (lambda, gamma, xi) layout."""
    if config.model == ModelKind.KICKED_SPIN_THREE_HALF:
        return ParameterPoint.spin_three_half(config.lam, config.gamma, config.eta, config.xi,
                                              config.zeta)
    return ParameterPoint.spin_half(config.lam, config.gamma, config.xi)


def build_loop(config: RunConfig, spec: ModelSpec, base: ParameterPoint) -> LoopDef:
    if config.loop == LoopName.CONSTANT:
        return constant_loop(spec, base)
    if config.loop == LoopName.WAYPOINTS:
        return waypoint_loop(spec, base, parse_waypoints(config.waypoints))
    return named_loop(spec, base, config.loop.value)


def build_bundle(config: RunConfig, K: Optional[int] = None) -> Tuple[ModelSpec, ParameterPoint, Bundle]:
    spec = build_model_spec(config)
    base = build_base_point(config)
    loop = build_loop(config, spec, base)
    bundle = bundle_along(spec, loop, K or config.K, config.policy, deg_tol=config.deg_tol,
                          overlap_min=config.overlap_min, workers=config.workers)
    return spec, base, bundle


def holonomy_section(bundle: Bundle, result: HolonomyResult) -> HolonomySection:
    return HolonomySection(
        loop=bundle.loop_meta(),
        policy=bundle.policy,
        blocks=[list(block) for block in result.blocks],
        W=result.W,
        B=result.B,
        M=result.M,
        permutation=result.permutation,
        phases=result.phases,
        geometric_phases=result.geometric_phases,
        delta_n=result.delta_n,
        consistent=result.consistent,
        quasienergies=QuasienergyEnds(start=bundle.frames[0].quasienergies,
                                      end=bundle.frames[-1].quasienergies),
    )


def _report(kind: OutputKind, config: RunConfig) -> Report:
    return Report(kind=kind, version=__version__, config=config.provenance())


def holonomy_report(config: RunConfig) -> Report:
    """
    Holonomy of the configured loop, plus any extra sections named in ``outputs``.

    Raises:
        ConfigError: if ``outputs`` names propagate without N_periods
    """
    if OutputKind.PROPAGATE in config.outputs and not config.N_periods:
        raise ConfigError("outputs=propagate needs N_periods", outputs=[
            output.value for output in config.outputs])
    spec, base, bundle = build_bundle(config)
    result = holonomy_M(bundle, perm_tol=config.perm_tol)
    report = _report(OutputKind.HOLONOMY, config)
    report.holonomy = holonomy_section(bundle, result)
    if spec.kind == ModelKind.KICKED_SPIN_THREE_HALF and config.policy == GaugePolicy.ANALYTIC_ORACLE:
        report.theta_rule = resolve_theta().name
    if OutputKind.SPECTRUM in config.outputs:
        report.spectrum = spectrum_section(config, spectrum_table(config))
    if OutputKind.PROPAGATE in config.outputs:
        report.propagation = propagation_section(spec, bundle, result, config)
    if OutputKind.COMPARE in config.outputs:
        report.comparison = comparison_section(spec, base, bundle, result, config)
    return report


def spectrum_table(config: RunConfig) -> pd.DataFrame:
    """
    Tracked and principal quasienergies along an open sweep of one coordinate.

    Columns: the swept coordinate, ``eps_tracked_<n>`` and
    ``eps_principal_<n>`` per band.
    """
    spec = build_model_spec(config)
    base = build_base_point(config)
    loop = named_loop(spec, base, config.sweep_axis, span=config.sweep_span)
    bundle = track_path(spec, loop, config.K, config.policy, deg_tol=config.deg_tol,
                        overlap_min=config.overlap_min, workers=config.workers)
    axis = loop.coordinates.index(config.sweep_axis)
    tracked = bundle.quasienergy_table()
    principal = tracked % spec.period if spec.period is not None else tracked

    columns: Dict[str, Any] = {config.sweep_axis: [frame.point.as_vector()[axis]
                                                   for frame in bundle.frames]}
    for n in range(tracked.shape[1]):
        columns[f"eps_tracked_{n}"] = tracked[:, n]
    for n in range(tracked.shape[1]):
        columns[f"eps_principal_{n}"] = principal[:, n]
    return pd.DataFrame(columns)


def spectrum_section(config: RunConfig, table: pd.DataFrame) -> SpectrumSection:
    return SpectrumSection(axis=config.sweep_axis,
                           columns={name: table[name].to_numpy() for name in table.columns})


def _oracle_or_none(spec: ModelSpec, config: RunConfig,
                    base: ParameterPoint) -> Optional[OracleValues]:
    if not spec.is_kicked or config.loop not in (LoopName.LAMBDA, LoopName.GAMMA, LoopName.XI):
        return None
    try:
        return analytic_holonomies(spec, config.loop, base)
    except UnsupportedLoop as e:
        logger.info("no oracle: %s", e.detail)
        return None


def _check(name: str, value: float, tolerance: float) -> CheckResult:
    return CheckResult(name=name, value=value, tolerance=tolerance, passed=bool(value <= tolerance))


def comparison_section(spec: ModelSpec, base: ParameterPoint, bundle: Bundle,
                       result: HolonomyResult, config: RunConfig) -> ComparisonSection:
    """
    Distances of the numeric holonomy to the closed form and to propagation.

    Raises:
        ConfigError: if the loop has no closed form and no propagation is requested
    """
    oracle = _oracle_or_none(spec, config, base)
    if oracle is None and not config.N_periods:
        raise ConfigError(f"loop '{config.loop.value}' has no closed form; set N_periods to "
                          "compare against propagation", loop=config.loop.value)

    section = ComparisonSection()
    if oracle is not None:
        source, target = bundle.frames[0], oracle.frame
        S = basis_change(source, target)
        P = label_permutation(S, source, target)
        aligned = S @ result.M @ dagger(S)
        raw = frobenius(P @ result.M @ P.T, oracle.M)
        minimized = conjugation_distance(aligned, oracle.M, target.blocks)
        ours = classify_permutation(aligned, config.perm_tol, blocks=target.blocks)
        theirs = classify_permutation(oracle.M, config.perm_tol, blocks=target.blocks)
        structure_match = (ours is not None and theirs is not None and ours[0] == theirs[0])

        section.oracle = OracleSection(M=oracle.M, W=oracle.W, B=oracle.B, E=oracle.E,
                                       Q=oracle.Q, theta_rule=oracle.theta_rule)
        section.distances["numeric_vs_oracle_raw"] = raw
        section.distances["numeric_vs_oracle"] = minimized
        section.block_structure_match = structure_match
        section.checks.append(_check("numeric_vs_oracle", minimized, config.tolerance))
        section.checks.append(CheckResult(name="block_structure_match", passed=structure_match))
        if config.policy == GaugePolicy.ANALYTIC_ORACLE:
            for name, ours_m, theirs_m in (("W_vs_oracle", result.W, oracle.W),
                                           ("B_vs_oracle", result.B, oracle.B)):
                distance = frobenius(ours_m, theirs_m)
                section.distances[name] = distance
                section.checks.append(_check(name, distance, config.tolerance))

    if config.N_periods:
        propagated = propagate_loop(spec, bundle, config.N_periods, dt=config.dt)
        distance = frobenius(propagated.M_numeric, result.M)
        section.distances["numeric_vs_propagated"] = distance
        section.checks.append(_check("numeric_vs_propagated", distance,
                                     config.propagate_tolerance))
    return section


def compare_report(config: RunConfig) -> Report:
    """
    Raises:
        ToleranceFailure: carrying the full report when any check fails
    """
    spec, base, bundle = build_bundle(config)
    result = holonomy_M(bundle, perm_tol=config.perm_tol)
    report = _report(OutputKind.COMPARE, config)
    report.holonomy = holonomy_section(bundle, result)
    report.comparison = comparison_section(spec, base, bundle, result, config)
    if not report.comparison.passed:
        failed = report.comparison.failed
        raise ToleranceFailure(f"comparison failed: {', '.join(failed)}", failed=failed,
                               report=report)
    return report


def propagation_section(spec: ModelSpec, bundle: Bundle, result: HolonomyResult,
                        config: RunConfig) -> PropagationSection:
    propagated: PropagationResult = propagate_loop(spec, bundle, config.N_periods, dt=config.dt)
    match = classify_permutation(propagated.M_numeric, PROPAGATED_PERM_TOL, blocks=result.blocks)
    permutation = match[0] if match is not None else None
    return PropagationSection(
        N_periods=config.N_periods,
        M_numeric=propagated.M_numeric,
        dynamical_phases=propagated.dynamical_phases,
        unitarity_defect=propagated.unitarity_defect,
        permutation=permutation,
        permutation_agrees=permutation is not None and permutation == result.permutation,
        distance_to_holonomy=frobenius(propagated.M_numeric, result.M),
    )


def propagate_report(config: RunConfig) -> Report:
    """
    Raises:
        ConfigError: if N_periods is not set
    """
    if not config.N_periods:
        raise ConfigError("propagate needs N_periods")
    K = max(settings.MIN_GRID, min(config.K, config.N_periods))
    spec, base, bundle = build_bundle(config, K=K)
    result = holonomy_M(bundle, perm_tol=config.perm_tol)
    report = _report(OutputKind.PROPAGATE, config)
    report.holonomy = holonomy_section(bundle, result)
    report.propagation = propagation_section(spec, bundle, result, config)
    return report
