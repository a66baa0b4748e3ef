"""The registered experiments.

Each experiment takes the built skew system and its validated parameters and returns named
CSV tables plus JSON documents; writing them out is the caller's job.
"""
import logging
from dataclasses import asdict
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import Field, model_validator

from .cocycle import badly_approximable, brin_set, diophantine_certify, tail_constants
from .config import FnConfig, as_complex, grid
from .core import ExperimentContext, ExperimentParams, ExperimentResult, registry
from .errors import DepthBudgetExceeded
from .flow import (DEFAULT_DEPTH_BUDGET, TestFn, chi_modify, correlation_mc, correlation_quadrature,
                   decompose_correlation, fit_decay, laplace_numeric)
from .groups import Irrep, epsilon_net, irreps_up_to
from .orbits import (MAX_ORBIT_LENGTH, build_ledger, closed_orbit_counts, closed_orbit_diophantine,
                     counting_functions, equi_average, equi_error_fit, weighted_zeta_check, z_function, z_trace)
from .sft import TwoSidedPoint, enumerate_prime_orbits
from .thermo import cylinder_measures, gibbs, gibbs_property_ratio, topological_entropy
from .twisted import BpiParams, dolgopyat_scan, lasota_yorke_probe
from .utils import parse_word, word_to_str

logger = logging.getLogger(__name__)

GridSpec = Union[List[float], Dict[str, Any]]
ComplexSpec = Union[float, List[float]]


def _irreps(ctx: ExperimentContext, labels: Optional[List[str]], weight_cutoff: float) -> List[Irrep]:
    group = ctx.system.group
    if labels:
        return [group.irrep(label) for label in labels]
    return [pi for pi in irreps_up_to(group, weight_cutoff) if not pi.is_trivial]


def _element_row(prefix: str, g: np.ndarray) -> Dict[str, float]:
    return {f"{prefix}_{i}": float(v) for i, v in enumerate(np.ravel(g))}


@registry.register("pressure", "Topological pressure of the potential and entropy of the shift")
def pressure_experiment(ctx: ExperimentContext, params: ExperimentParams) -> ExperimentResult:
    sys = ctx.system
    data = gibbs(sys.shift, sys.potential)
    logger.info(f"Pressure {data.pressure!r}")
    return ExperimentResult(documents={
        "pressure": {
            "pressure": data.pressure,
            "topological_entropy": topological_entropy(sys.shift),
            "n_states": data.code.n_states,
        },
    })


class GibbsParams(ExperimentParams):
    cylinder_length: int = Field(default=1, ge=1)
    ratio_n: Optional[int] = Field(default=None, ge=1, description="Word length for the Gibbs-property ratio")


@registry.register("gibbs", "Gibbs measure of cylinders and the Gibbs-property ratio", GibbsParams)
def gibbs_experiment(ctx: ExperimentContext, params: GibbsParams) -> ExperimentResult:
    sys = ctx.system
    data = gibbs(sys.shift, sys.potential)
    words = sys.shift.words(params.cylinder_length)
    measures = cylinder_measures(data, params.cylinder_length)
    summary: Dict[str, Any] = {"pressure": data.pressure, "total_mass": float(measures.sum())}
    if params.ratio_n is not None:
        lo, hi = gibbs_property_ratio(data, params.ratio_n)
        summary["ratio"] = {"n": params.ratio_n, "min": lo, "max": hi}
    return ExperimentResult(
        tables={"cylinders": [{"word": word_to_str(w), "measure": float(m)} for w, m in zip(words, measures)]},
        documents={"gibbs": summary},
    )


class BandSpec(ExperimentParams):
    """One term (Σ_k c_k u^k)·w(x)·ξ_π(g) of a test function."""
    label: str
    u_coeffs: List[ComplexSpec] = Field(default_factory=lambda: [1.0])
    x_depth: int = Field(default=1, ge=1)
    x_weights: Optional[Dict[str, ComplexSpec]] = None

    def build(self, ctx: ExperimentContext) -> TestFn:
        sys = ctx.system
        weights = None
        if self.x_weights is not None:
            table = FnConfig(depth=self.x_depth, values={k: as_complex(v) for k, v in self.x_weights.items()})
            weights = table.build(sys.shift, "complex", what=f"weights of {self.label}").values
        return TestFn.character(sys.shift, sys.group, self.label, [as_complex(c) for c in self.u_coeffs],
                                weights, self.x_depth)


def _test_fn(ctx: ExperimentContext, specs: List[BandSpec]) -> TestFn:
    fn = specs[0].build(ctx)
    for spec in specs[1:]:
        fn = fn + spec.build(ctx)
    return fn


class CorrelationParams(ExperimentParams):
    E: List[BandSpec] = Field(min_length=1)
    F: List[BandSpec] = Field(min_length=1)
    t_grid: GridSpec
    estimator: Literal["auto", "quadrature", "monte_carlo", "both"] = "auto"
    n_samples: int = Field(default=10_000, ge=1000)
    depth_budget: int = Field(default=DEFAULT_DEPTH_BUDGET, ge=1)
    weight_cutoff: Optional[float] = Field(default=None, gt=0)
    chi_k2: Optional[int] = Field(default=None, ge=0)
    chi_join_start: float = Field(default=0.0, ge=0, lt=1, description="χ vanishes on [0, chi_join_start]")
    laplace_s: List[ComplexSpec] = Field(default_factory=list)
    decay_t_min: Optional[float] = None


@registry.register("correlations", "Correlation function of the suspension flow, band decomposition and decay fit",
                   CorrelationParams)
def correlations_experiment(ctx: ExperimentContext, params: CorrelationParams) -> ExperimentResult:
    sys = ctx.system
    data = gibbs(sys.shift, sys.potential)
    E, F = _test_fn(ctx, params.E), _test_fn(ctx, params.F)
    t_grid = grid(params.t_grid)

    series = []
    if params.estimator in ("auto", "quadrature", "both"):
        try:
            series.append(correlation_quadrature(sys, data, E, F, t_grid, params.depth_budget, ctx.threads))
        except DepthBudgetExceeded as e:
            if params.estimator == "quadrature":
                raise
            logger.warning(f"{e}; switching to Monte Carlo")
    if params.estimator in ("monte_carlo", "both") or not series:
        series.append(correlation_mc(sys, data, E, F, t_grid, params.n_samples, ctx.seed, threads=ctx.threads))
    primary = series[0]

    result = ExperimentResult(tables={"correlation": [row for s in series for row in s.rows()]})
    summary: Dict[str, Any] = {"estimators": [s.estimator for s in series]}

    if params.weight_cutoff is not None:
        parts = decompose_correlation(sys, data, E, F, t_grid, params.weight_cutoff, params.depth_budget,
                                      ctx.threads)
        result.tables["decomposition"] = [
            {"pi_label": label, "t": row["t"], "re_rho": row["re_rho"], "im_rho": row["im_rho"]}
            for label, part in parts.items() for row in part.rows()
        ]
        if primary.estimator == "quadrature":
            total = sum((part.rho for part in parts.values()), np.zeros(len(t_grid), dtype=complex))
            summary["decomposition_gap"] = float(np.max(np.abs(total - primary.rho), initial=0.0))

    transformed = primary
    if params.chi_k2 is not None:
        join = chi_modify(primary, params.chi_k2, E.sup_bound(sys.max_roof) * F.sup_bound(sys.max_roof),
                          params.chi_join_start)
        transformed = join.series
        summary["chi"] = {"k2": params.chi_k2, "join_start": params.chi_join_start,
                          "derivative_ratios": list(join.derivative_ratios)}
    if params.laplace_s:
        values = laplace_numeric(transformed, [as_complex(s) for s in params.laplace_s])
        result.tables["laplace"] = [
            {"s_re": s.real, "s_im": s.imag, "re_value": v.value.real, "im_value": v.value.imag,
             "tail_bound": v.tail_bound}
            for s, v in values.items()
        ]
    if params.decay_t_min is not None:
        summary["decay"] = fit_decay(primary, params.decay_t_min).to_dict()
    result.documents["correlation_summary"] = summary
    return result


class DolgopyatParams(ExperimentParams):
    irreps: Optional[List[str]] = None
    weight_cutoff: float = Field(default=1.0, gt=0)
    b_grid: GridSpec
    C25: float = Field(default=1.0, gt=0)
    C15: Optional[float] = Field(default=None, gt=0)
    C18: float = Field(default=1.0, ge=1)
    trials: int = Field(default=32, ge=0)
    lasota_yorke_n: List[int] = Field(default_factory=list)


@registry.register("dolgopyat", "Contraction of twisted transfer operators over a frequency grid", DolgopyatParams)
def dolgopyat_experiment(ctx: ExperimentContext, params: DolgopyatParams) -> ExperimentResult:
    sys = ctx.system
    data = gibbs(sys.shift, sys.potential)
    irreps = _irreps(ctx, params.irreps, params.weight_cutoff)
    if params.C15 is None:
        bp = BpiParams.for_irreps(irreps, C18=params.C18)
    else:
        bp = BpiParams(C15=params.C15, C18=params.C18)
    b_grid = grid(params.b_grid)
    records, fitted = dolgopyat_scan(sys, data, irreps, b_grid, bp, params.C25, params.trials, ctx.seed, ctx.threads)

    result = ExperimentResult(
        tables={"contraction": [asdict(r) for r in records]},
        documents={"dolgopyat": {
            "fitted_exponent": fitted,
            "max_kappa": max((r.kappa for r in records), default=0.0),
            "C15": bp.C15,
            "C18": bp.C18,
            "C25": params.C25,
        }},
    )
    if params.lasota_yorke_n:
        rows = []
        for pi in irreps:
            for b in b_grid:
                fit = lasota_yorke_probe(sys, data, pi, float(b), params.lasota_yorke_n, params.trials, ctx.seed, bp)
                rows.append({"pi_label": str(pi.label), "b": float(b), **asdict(fit)})
        result.tables["lasota_yorke"] = rows
    return result


class DiophantineParams(ExperimentParams):
    gamma: Optional[List[Any]] = Field(default=None, description="Group elements; defaults to the cocycle values")
    eps: Optional[float] = Field(default=None, gt=0, description="Use an ε-net of the group as the set")
    weight_cutoff: float = Field(default=4.0, gt=0)
    restarts: int = Field(default=64, ge=0)
    iterations: int = Field(default=200, ge=1)
    alpha: List[float] = Field(default_factory=list)
    q_max: int = Field(default=10_000, ge=2)

    @model_validator(mode="after")
    def _one_set(self):
        if self.gamma is not None and self.eps is not None:
            raise ValueError("Give at most one of 'gamma' or 'eps'")
        return self


@registry.register("diophantine", "Per-irrep displacement constants of a finite subset of the group",
                   DiophantineParams)
def diophantine_experiment(ctx: ExperimentContext, params: DiophantineParams) -> ExperimentResult:
    sys = ctx.system
    group = sys.group
    if params.eps is not None:
        gamma = epsilon_net(group, params.eps)
    elif params.gamma is not None:
        gamma = np.stack([group.element(g) for g in params.gamma])
    else:
        gamma = sys.cocycle.values
    report = diophantine_certify(group, gamma, params.weight_cutoff, params.restarts, ctx.seed,
                                 params.iterations, ctx.threads)
    summary: Dict[str, Any] = {
        "n_gamma": len(report.gamma),
        "fitted_C": report.fitted_C,
        "fitted_delta": report.fitted_delta,
    }
    if params.alpha:
        summary["badly_approximable"] = [
            dict(zip(("alpha", "delta", "C5"), (alpha, *badly_approximable(alpha, params.q_max))))
            for alpha in params.alpha
        ]
    return ExperimentResult(tables={"diophantine": [asdict(r) for r in report.rows]},
                            documents={"diophantine": summary})


class PointSpec(ExperimentParams):
    left_cycle: str
    core: str = ""
    right_cycle: str
    offset: int = 0

    def build(self) -> TwoSidedPoint:
        core = parse_word(self.core) if self.core else ()
        return TwoSidedPoint(parse_word(self.left_cycle), core, parse_word(self.right_cycle), self.offset)


class BrinParams(ExperimentParams):
    point: Optional[PointSpec] = Field(default=None, description="Base point; defaults to the shortest periodic orbit")
    n0: int = Field(default=1, ge=0)
    p0: int = Field(default=4, ge=2)
    splice_length: int = Field(default=2, ge=0)
    tol: float = Field(default=1e-10, gt=0)
    max_nodes: int = Field(default=200_000, ge=1)
    weight_cutoff: Optional[float] = Field(default=None, gt=0)


@registry.register("brin", "Closed stable/unstable chains at a point and the twists they generate", BrinParams)
def brin_experiment(ctx: ExperimentContext, params: BrinParams) -> ExperimentResult:
    sys = ctx.system
    if params.point is not None:
        x = params.point.build()
    else:
        x = TwoSidedPoint.periodic(enumerate_prime_orbits(sys.shift, sys.shift.n_symbols)[0].necklace)
    chains = brin_set(sys, x, params.n0, params.p0, params.tol, params.splice_length, params.max_nodes)
    rows = [
        {"index": i, "length": c.length, "sides": "".join(c.sides), "displacement_sum": c.displacement_sum,
         **_element_row("twist", c.twist), "chain": " | ".join(str(p) for p in c.points)}
        for i, c in enumerate(chains)
    ]
    C10, C12 = tail_constants(sys)
    summary: Dict[str, Any] = {"point": str(x), "n_chains": len(chains), "C10": C10, "C12": C12}
    if params.weight_cutoff is not None:
        report = diophantine_certify(sys.group, np.stack([c.twist for c in chains]), params.weight_cutoff,
                                     seed=ctx.seed, threads=ctx.threads)
        summary["twist_diophantine"] = {"fitted_C": report.fitted_C, "fitted_delta": report.fitted_delta,
                                        "rows": [asdict(r) for r in report.rows]}
    return ExperimentResult(tables={"brin": rows}, documents={"brin": summary})


class EquidistributionParams(ExperimentParams):
    T_max: float = Field(gt=0)
    T_grid: GridSpec
    irreps: Optional[List[str]] = None
    weight_cutoff: float = Field(default=1.0, gt=0)
    max_length: int = Field(default=MAX_ORBIT_LENGTH, ge=1)
    orbit_diophantine: bool = False
    q_max: int = Field(default=10_000, ge=2)


@registry.register("equidistribution", "Holonomy equidistribution of prime closed orbits",
                   EquidistributionParams)
def equidistribution_experiment(ctx: ExperimentContext, params: EquidistributionParams) -> ExperimentResult:
    sys = ctx.system
    ledger = build_ledger(sys, params.T_max, params.max_length, ctx.threads)
    irreps = _irreps(ctx, params.irreps, params.weight_cutoff)
    T_grid = grid(params.T_grid)
    rows = []
    for pi in irreps:
        for T in T_grid:
            value = equi_average(ledger, pi, float(T))
            rows.append({"pi_label": str(pi.label), "T": float(T), "re_average": value.real,
                         "im_average": value.imag, "abs_average": abs(value)})
    summary: Dict[str, Any] = {"h_top": ledger.h_top, "n_orbits": len(ledger.records), "n_max": ledger.n_max}
    if len(T_grid) >= 4:
        fit = equi_error_fit(ledger, irreps, T_grid)
        summary["error_fit"] = {"per_pi": [asdict(d) for d in fit.per_pi], "weight_exponent": fit.weight_exponent}
    if params.orbit_diophantine:
        summary["closed_orbit_certificate"] = asdict(closed_orbit_diophantine(ledger, params.q_max))
    counts = [{"T": T, "count": n, "ratio": ratio} for T, n, ratio in closed_orbit_counts(ledger, T_grid)]
    return ExperimentResult(
        tables={"ledger": ledger.rows(), "equidistribution": rows, "orbit_counts": counts},
        documents={"equidistribution": summary},
    )


class LFunctionParams(ExperimentParams):
    T: float = Field(gt=0)
    s: List[ComplexSpec] = Field(min_length=1)
    irreps: Optional[List[str]] = None
    weight_cutoff: float = Field(default=1.0, gt=0)
    max_length: int = Field(default=MAX_ORBIT_LENGTH, ge=1)
    z_n_max: int = Field(default=0, ge=0, description="Compare orbit sums with traces for n up to this")
    counting_k: Optional[int] = Field(default=None, ge=0)
    counting_x: List[float] = Field(default_factory=list)
    counting_conventions: List[Literal["htop", "plain"]] = Field(
        default_factory=lambda: ["htop", "plain"], min_length=1, description="Orbit thresholds e^{h_top ℓ} or e^{ℓ} ≤ x"
    )


@registry.register("lfunction", "Partial Euler products of twisted L-functions and orbit counting sums",
                   LFunctionParams)
def lfunction_experiment(ctx: ExperimentContext, params: LFunctionParams) -> ExperimentResult:
    sys = ctx.system
    ledger = build_ledger(sys, params.T, params.max_length, ctx.threads)
    irreps = _irreps(ctx, params.irreps, params.weight_cutoff)
    s_values = [as_complex(s) for s in params.s]
    result = ExperimentResult(documents={"lfunction": {"h_top": ledger.h_top, "n_orbits": len(ledger.records)}})

    rows = []
    for pi in irreps:
        for s in s_values:
            check = weighted_zeta_check(ledger, pi, s, params.T)
            rows.append({"pi_label": str(pi.label), "s_re": s.real, "s_im": s.imag, "T": params.T,
                         "re_log_L": check.log_product.real, "im_log_L": check.log_product.imag,
                         "re_series": check.series.real, "im_series": check.series.imag,
                         "gap": check.gap, "powers": check.powers})
    result.tables["lfunction"] = rows

    if params.z_n_max:
        z_rows = []
        for pi in irreps:
            for s in s_values:
                for n in range(1, params.z_n_max + 1):
                    z = z_function(sys, pi, n, s, ledger.h_top)
                    trace = z_trace(sys, pi, n, s, ledger.h_top)
                    z_rows.append({"pi_label": str(pi.label), "n": n, "s_re": s.real, "s_im": s.imag,
                                   "re_z": z.real, "im_z": z.imag, "re_trace": trace.real, "im_trace": trace.imag})
        result.tables["z_traces"] = z_rows

    if params.counting_k is not None and params.counting_x:
        c_rows = []
        for pi in irreps:
            fns = counting_functions(ledger, pi, params.counting_k)
            for convention in params.counting_conventions:
                for x in params.counting_x:
                    value = fns.n(x, convention)
                    c_rows.append({"pi_label": str(pi.label), "k": params.counting_k, "convention": convention,
                                   "x": x, "re_n": value.real, "im_n": value.imag})
        result.tables["counting"] = c_rows
    return result
