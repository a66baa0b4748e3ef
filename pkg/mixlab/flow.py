"""The suspension flow of a skew system: test functions, correlation functions, their
decomposition over irreps, the χ modification, Laplace transforms and decay fits.

The flow moves (x, g, u) to (x, g, u + t) until u + t reaches r(x), where
(x, g, r(x)) is identified with (σx, Θ(x)g, 0). Its invariant probability is
dμ(x) dHaar(g) du / ∫ r dμ on {0 ≤ u < r(x)}.

Test functions are finite sums over irreps π of
    E_π(x, g, u) = Σ_k u^k Tr(A_{π,k}(x) π(g)),
with A_{π,k} locally constant in x, so the Haar and Gauss-Legendre rules used below are exact.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import BPoly
from scipy.special import roots_legendre

from .cocycle import SkewSystem
from .errors import (ConfigInvalid, DepthBudgetExceeded, InsufficientData, JoinOvershoot, NonpositiveRealPart,
                     PreconditionViolated)
from .groups import CompactGroup, HaarQuadrature, Irrep
from .parallel import ordered_map, spawn_seeds
from .sft import Shift, window_indices, word_lookup
from .thermo import GibbsData, LocallyConstantFn, cylinder_measures, integrate, lipschitz_seminorm, sample_paths

logger = logging.getLogger(__name__)

ESTIMATORS = ("quadrature", "monte_carlo")
DEFAULT_DEPTH_BUDGET = 14
MC_BLOCK_SIZE = 2048


@dataclass(frozen=True, eq=False)
class BandComponent:
    """Coefficients A[w, a, b, k] of u^k Tr(A_k(w) π(g)) over the x-depth words w."""
    irrep: Irrep
    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return self.coeffs.shape[-1] - 1

    @property
    def label(self) -> str:
        return str(self.irrep.label)


def _trivial_irrep(group: CompactGroup) -> Irrep:
    return group.irreps_up_to(1.0)[0]


@dataclass(frozen=True, eq=False)
class TestFn:
    shift: Shift
    group: CompactGroup
    x_depth: int
    components: Tuple[BandComponent, ...]

    __test__ = False

    def __post_init__(self):
        n_words = len(self.shift.words(self.x_depth))
        for comp in self.components:
            comp.irrep.check_group(self.group)
            d = comp.irrep.dim
            if comp.coeffs.ndim != 4 or comp.coeffs.shape[:3] != (n_words, d, d):
                raise ConfigInvalid(f"Band {comp.label} needs coefficients of shape ({n_words}, {d}, {d}, D+1), "
                                    f"got {comp.coeffs.shape}")

    @classmethod
    def from_components(cls, shift: Shift, group: CompactGroup, x_depth: int,
                        components: Dict[str, np.ndarray]) -> "TestFn":
        comps = tuple(BandComponent(group.irrep(label), np.asarray(coeffs, dtype=complex))
                      for label, coeffs in sorted(components.items()))
        return cls(shift, group, x_depth, comps)

    @classmethod
    def character(cls, shift: Shift, group: CompactGroup, label, u_coeffs: Sequence[complex] = (1.0,),
                  x_weights: Optional[Sequence[complex]] = None, x_depth: int = 1) -> "TestFn":
        """(Σ_k c_k u^k)·w(x)·ξ_π(g)."""
        pi = group.irrep(label)
        n_words = len(shift.words(x_depth))
        weights = np.ones(n_words) if x_weights is None else np.asarray(x_weights, dtype=complex)
        coeffs = (weights[:, None, None, None] * np.eye(pi.dim)[None, :, :, None]
                  * np.asarray(u_coeffs, dtype=complex)[None, None, None, :])
        return cls(shift, group, x_depth, (BandComponent(pi, coeffs.astype(complex)),))

    @classmethod
    def constant(cls, shift: Shift, group: CompactGroup, value: complex = 1.0) -> "TestFn":
        return cls.character(shift, group, _trivial_irrep(group).label, u_coeffs=(value,))

    @property
    def labels(self) -> List[str]:
        return [comp.label for comp in self.components]

    @property
    def degree(self) -> int:
        return max((comp.degree for comp in self.components), default=0)

    @property
    def band(self) -> float:
        return max((comp.irrep.weight_norm for comp in self.components), default=0.0)

    def banded(self, label) -> "TestFn":
        """The component E_π; zero if π does not occur."""
        key = str(self.group.irrep(label).label)
        return TestFn(self.shift, self.group, self.x_depth, tuple(c for c in self.components if c.label == key))

    def promote(self, depth: int) -> "TestFn":
        if depth == self.x_depth:
            return self
        if depth < self.x_depth:
            raise PreconditionViolated(f"Cannot lower depth {self.x_depth} to {depth}")
        index = self.shift.word_index(self.x_depth)
        rows = [index[w[: self.x_depth]] for w in self.shift.words(depth)]
        return TestFn(self.shift, self.group, depth,
                      tuple(BandComponent(c.irrep, c.coeffs[rows]) for c in self.components))

    def __add__(self, other: "TestFn") -> "TestFn":
        if self.group != other.group:
            raise ConfigInvalid("Cannot add test functions over different groups")
        depth = max(self.x_depth, other.x_depth)
        merged: Dict[str, BandComponent] = {}
        for comp in self.promote(depth).components + other.promote(depth).components:
            if comp.label not in merged:
                merged[comp.label] = comp
                continue
            prev = merged[comp.label]
            size = max(prev.degree, comp.degree) + 1
            total = _pad(prev.coeffs, size) + _pad(comp.coeffs, size)
            merged[comp.label] = BandComponent(comp.irrep, total)
        return TestFn(self.shift, self.group, depth, tuple(merged[k] for k in sorted(merged)))

    def evaluate(self, word_idx: np.ndarray, g: np.ndarray, u: np.ndarray) -> np.ndarray:
        """E at a batch of points: word indices into words(x_depth), group elements, heights."""
        u = np.asarray(u, dtype=float)
        total = np.zeros(len(u), dtype=complex)
        for comp in self.components:
            pows = u[:, None] ** np.arange(comp.degree + 1)
            poly = np.einsum("nabk,nk->nab", comp.coeffs[word_idx], pows)
            total += np.einsum("nab,nba->n", poly, comp.irrep.matrix(g))
        return total

    def sup_bound(self, max_u: float) -> float:
        """Upper bound on sup|E| from Σ_k ‖A_k‖_nuclear max_u^k, using unitarity of π."""
        total = 0.0
        for comp in self.components:
            nuclear = np.linalg.svd(np.moveaxis(comp.coeffs, -1, 1), compute_uv=False).sum(axis=-1)
            total += float(np.max(nuclear @ (max_u ** np.arange(comp.degree + 1))))
        return total

    def norm_bound(self, lam, k: int, max_u: float) -> float:
        """Upper bound on ‖E‖_{λ,k}: u-derivatives are exact on coefficients, each g-derivative
        costs at most |λ_π|, and the λ-Lipschitz part is taken on the flattened coefficients."""
        best = 0.0
        for k1 in range(k + 1):
            for k2 in range(k + 1 - k1):
                total = 0.0
                for comp in self.components:
                    coeffs = _u_derivative(comp.coeffs, k1)
                    if coeffs.shape[-1] == 0:
                        continue
                    part = TestFn(self.shift, self.group, self.x_depth, (BandComponent(comp.irrep, coeffs),))
                    scaled = coeffs * (max_u ** np.arange(coeffs.shape[-1]))
                    flat = scaled.reshape(len(scaled), -1)
                    lip = lipschitz_seminorm(LocallyConstantFn(self.shift, self.x_depth, flat, "vector"), lam)
                    lip *= math.sqrt(comp.irrep.dim * coeffs.shape[-1])
                    total += comp.irrep.weight_norm ** k2 * (part.sup_bound(max_u) + lip)
                best = max(best, total)
        return best


def _pad(coeffs: np.ndarray, size: int) -> np.ndarray:
    return np.concatenate([coeffs, np.zeros(coeffs.shape[:-1] + (size - coeffs.shape[-1],))], axis=-1)


def _u_derivative(coeffs: np.ndarray, order: int) -> np.ndarray:
    degree = coeffs.shape[-1] - 1
    if order > degree:
        return coeffs[..., :0]
    factors = np.array([math.perm(k + order, order) for k in range(degree - order + 1)], dtype=float)
    return coeffs[..., order:] * factors


@dataclass
class CorrelationSeries:
    t_grid: np.ndarray
    rho: np.ndarray
    estimator: str
    error_bars: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ConfigInvalid(f"Unknown estimator '{self.estimator}', expected one of {ESTIMATORS}")
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.rho = np.asarray(self.rho, dtype=complex)

    def rows(self) -> List[dict]:
        return [
            {
                "t": float(t),
                "re_rho": float(r.real),
                "im_rho": float(r.imag),
                "stderr": None if self.error_bars is None else float(self.error_bars[i]),
                "estimator": self.estimator,
            }
            for i, (t, r) in enumerate(zip(self.t_grid, self.rho))
        ]


def _fiber_values(fn: TestFn, word_idx: np.ndarray, left: Optional[np.ndarray], v: np.ndarray,
                  node_mats: Dict[str, np.ndarray]) -> np.ndarray:
    """fn(w, left·g, v) on the (word, height node, Haar node) grid."""
    n_nodes = len(next(iter(node_mats.values()))) if node_mats else 1
    out = np.zeros(v.shape + (n_nodes,), dtype=complex)
    for comp in fn.components:
        pows = v[..., None] ** np.arange(comp.degree + 1)
        poly = np.einsum("wabk,wuk->wuab", comp.coeffs[word_idx], pows)
        if left is not None:
            poly = np.einsum("wuab,wbc->wuac", poly, comp.irrep.matrix(left))
        out += np.einsum("wuab,gba->wug", poly, node_mats[comp.label])
    return out


def _haar_rule(group: CompactGroup, *fns: TestFn) -> Tuple[HaarQuadrature, Dict[str, np.ndarray]]:
    quad = group.haar_quadrature(group.quadrature_order(sum(fn.band for fn in fns)))
    mats = {}
    for fn in fns:
        for comp in fn.components:
            if comp.label not in mats:
                mats[comp.label] = comp.irrep.matrix(quad.nodes)
    return quad, mats


def _check_fns(sys: SkewSystem, *fns: TestFn):
    for fn in fns:
        if fn.group != sys.group or fn.shift is not sys.shift:
            raise ConfigInvalid("Test functions must live on the system's shift and group")


def roof_mean(sys: SkewSystem, gibbs: GibbsData) -> float:
    return float(np.real(integrate(gibbs, sys.roof)))


def suspension_integral(sys: SkewSystem, gibbs: GibbsData, F: TestFn) -> complex:
    """∫ F d(flow measure) with Gauss-Legendre in u and the Haar rule in g."""
    _check_fns(sys, F)
    if not F.components:
        return 0j
    depth = max(F.x_depth, sys.roof.depth)
    words = sys.shift.words(depth)
    mu = cylinder_measures(gibbs, depth)
    roof = sys.roof.on_words(depth)
    fn = F.promote(depth)
    quad, mats = _haar_rule(sys.group, F)
    x, wx = roots_legendre(F.degree // 2 + 1)
    u = roof[:, None] * (x + 1) / 2
    wu = roof[:, None] * wx / 2
    values = _fiber_values(fn, np.arange(len(words)), None, u, mats)
    fiber = np.einsum("wug,g->wu", values, quad.weights)
    return complex(np.sum(mu * np.sum(wu * fiber, axis=1)) / roof_mean(sys, gibbs))


def _returns(sys: SkewSystem, t: float) -> int:
    return int(math.floor((t + sys.max_roof) / sys.min_roof))


def required_depth(sys: SkewSystem, E: TestFn, F: TestFn, t: float) -> int:
    """Word depth that fixes E∘φ_t·F̄ on every cylinder."""
    return max(_returns(sys, t) + max(E.x_depth, sys.roof.depth, sys.cocycle.depth), F.x_depth)


def _raw_correlation(sys: SkewSystem, gibbs: GibbsData, E: TestFn, F: TestFn, t: float, budget: int) -> complex:
    shift, group = sys.shift, sys.group
    j_max = _returns(sys, t)
    depth = required_depth(sys, E, F, t)
    if depth > budget:
        raise DepthBudgetExceeded(
            f"t={t} needs words of length {depth} > budget {budget}; use the Monte Carlo estimator"
        )
    words = np.asarray(shift.words(depth), dtype=np.int64)
    mu = cylinder_measures(gibbs, depth)
    n_w = len(words)

    roof_lookup = word_lookup(shift, sys.roof.depth)
    cocycle_lookup = word_lookup(shift, sys.cocycle.depth)
    e_lookup = word_lookup(shift, E.x_depth)
    roof_at = np.stack([sys.roof.values[window_indices(shift, words, i, sys.roof.depth, roof_lookup)]
                        for i in range(j_max + 1)], axis=1)
    R = np.concatenate([np.zeros((n_w, 1)), np.cumsum(roof_at, axis=1)], axis=1)

    thetas = [np.tile(group.identity(), (n_w, 1))]
    for i in range(j_max):
        step = sys.cocycle.values[window_indices(shift, words, i, sys.cocycle.depth, cocycle_lookup)]
        thetas.append(group.compose(step, thetas[-1]))

    F_idx = window_indices(shift, words, 0, F.x_depth, word_lookup(shift, F.x_depth))
    quad, mats = _haar_rule(group, E, F)
    x, wx = roots_legendre((E.degree + F.degree) // 2 + 1)

    total = 0j
    for j in range(j_max + 1):
        lo = np.maximum(R[:, j] - t, 0.0)
        hi = np.minimum(R[:, j + 1] - t, R[:, 1])
        sel = np.flatnonzero(hi > lo)
        if len(sel) == 0:
            continue
        length = (hi - lo)[sel, None]
        u = lo[sel, None] + length * (x + 1) / 2
        wu = length * wx / 2
        v = u + t - R[sel, j][:, None]
        E_idx = window_indices(shift, words[sel], j, E.x_depth, e_lookup)
        Ev = _fiber_values(E, E_idx, thetas[j][sel], v, mats)
        Fv = _fiber_values(F, F_idx[sel], None, u, mats)
        fiber = np.einsum("wug,g->wu", Ev * np.conj(Fv), quad.weights)
        total += np.sum(mu[sel] * np.sum(wu * fiber, axis=1))
    return complex(total / roof_mean(sys, gibbs))


def correlation_quadrature(sys: SkewSystem, gibbs: GibbsData, E: TestFn, F: TestFn, t_grid: Sequence[float],
                           x_depth_budget: int = DEFAULT_DEPTH_BUDGET,
                           threads: Optional[int] = None) -> CorrelationSeries:
    """ρ_{E,F}(t) = ∫ E∘φ_t·F̄ − ∫E·∫F̄, exact in x; errors only from the (g, u) rules."""
    _check_fns(sys, E, F)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise PreconditionViolated("Correlation times must be nonnegative")
    for t in t_grid:
        depth = required_depth(sys, E, F, t)
        if depth > x_depth_budget:
            raise DepthBudgetExceeded(
                f"t={t} needs words of length {depth} > budget {x_depth_budget}; use the Monte Carlo estimator"
            )
    if not E.components or not F.components:
        return CorrelationSeries(t_grid, np.zeros(len(t_grid), dtype=complex), "quadrature")
    mean = suspension_integral(sys, gibbs, E) * np.conj(suspension_integral(sys, gibbs, F))
    raw = ordered_map(lambda t: _raw_correlation(sys, gibbs, E, F, float(t), x_depth_budget), t_grid, threads)
    logger.debug(f"Quadrature correlation on {len(t_grid)} times up to t={t_grid.max(initial=0):.4g}")
    return CorrelationSeries(t_grid, np.asarray(raw) - mean, "quadrature")


def _mc_block(sys: SkewSystem, gibbs: GibbsData, E: TestFn, F: TestFn, t_grid: np.ndarray, n: int,
              seed_seq, means: Tuple[complex, complex], rbar: float) -> np.ndarray:
    shift, group = sys.shift, sys.group
    rng = np.random.default_rng(seed_seq)
    depth = max(E.x_depth, F.x_depth, sys.roof.depth, sys.cocycle.depth)
    steps = _returns(sys, float(t_grid.max(initial=0.0))) + 1
    paths = sample_paths(gibbs, n, steps + depth, rng)
    g = group.random(n, rng)
    unif = rng.random(n)

    roof_lookup = word_lookup(shift, sys.roof.depth)
    cocycle_lookup = word_lookup(shift, sys.cocycle.depth)
    roof_at = np.stack([sys.roof.values[window_indices(shift, paths, i, sys.roof.depth, roof_lookup)]
                        for i in range(steps)], axis=1)
    R = np.concatenate([np.zeros((n, 1)), np.cumsum(roof_at, axis=1)], axis=1)
    thetas = [np.tile(group.identity(), (n, 1))]
    for i in range(steps - 1):
        step = sys.cocycle.values[window_indices(shift, paths, i, sys.cocycle.depth, cocycle_lookup)]
        thetas.append(group.compose(step, thetas[-1]))
    thetas = np.stack(thetas, axis=1)

    u = unif * roof_at[:, 0]
    weight = roof_at[:, 0] / rbar
    e_lookup = word_lookup(shift, E.x_depth)
    F_now = F.evaluate(window_indices(shift, paths, 0, F.x_depth, word_lookup(shift, F.x_depth)), g, u)
    F_centered = np.conj(F_now - means[1])

    out = np.zeros((n, len(t_grid)), dtype=complex)
    rows = np.arange(n)
    for col, t in enumerate(t_grid):
        j = (R[:, 1:] <= (u + t)[:, None]).sum(axis=1)
        E_idx = window_indices(shift, paths, j, E.x_depth, e_lookup)
        E_t = E.evaluate(E_idx, group.compose(thetas[rows, j], g), u + t - R[rows, j])
        out[:, col] = weight * (E_t - means[0]) * F_centered
    return out


def correlation_mc(sys: SkewSystem, gibbs: GibbsData, E: TestFn, F: TestFn, t_grid: Sequence[float],
                   n_samples: int, seed: int, block_size: int = MC_BLOCK_SIZE,
                   threads: Optional[int] = None) -> CorrelationSeries:
    """Ensemble estimate of ρ_{E,F} from Gibbs-sampled paths, Haar fibers and uniform heights.

    Heights are drawn uniformly on [0, r(x)] and samples carry the weight r(x)/∫r dμ. Samples are
    split into blocks of ``block_size``; block i draws from the i-th child of SeedSequence(seed),
    so the result does not depend on the thread count.
    """
    _check_fns(sys, E, F)
    if n_samples < 1000:
        raise PreconditionViolated(f"Monte Carlo needs at least 1000 samples, got {n_samples}")
    t_grid = np.asarray(t_grid, dtype=float)
    means = (suspension_integral(sys, gibbs, E), suspension_integral(sys, gibbs, F))
    rbar = roof_mean(sys, gibbs)
    sizes = [min(block_size, n_samples - start) for start in range(0, n_samples, block_size)]
    seeds = spawn_seeds(seed, len(sizes))
    blocks = ordered_map(lambda item: _mc_block(sys, gibbs, E, F, t_grid, item[0], item[1], means, rbar),
                         list(zip(sizes, seeds)), threads)
    samples = np.concatenate(blocks, axis=0)
    rho = samples.mean(axis=0)
    error_bars = np.sqrt(samples.real.var(axis=0, ddof=1) + samples.imag.var(axis=0, ddof=1)) / math.sqrt(n_samples)
    logger.debug(f"Monte Carlo correlation from {n_samples} samples in {len(sizes)} blocks")
    return CorrelationSeries(t_grid, rho, "monte_carlo", error_bars)


def decompose_correlation(sys: SkewSystem, gibbs: GibbsData, E: TestFn, F: TestFn, t_grid: Sequence[float],
                          weight_cutoff: float, x_depth_budget: int = DEFAULT_DEPTH_BUDGET,
                          threads: Optional[int] = None) -> Dict[str, CorrelationSeries]:
    """ρ_{E_π, F_π} for every band occurring in E or F."""
    if max(E.band, F.band) > weight_cutoff + 1e-12:
        raise PreconditionViolated(f"Inputs carry bands above the cutoff {weight_cutoff}")
    labels = sorted(set(E.labels) | set(F.labels), key=lambda lab: sys.group.irrep(lab).label.sort_key())
    return {
        label: correlation_quadrature(sys, gibbs, E.banded(label), F.banded(label), t_grid, x_depth_budget, threads)
        for label in labels
    }


@dataclass(frozen=True, eq=False)
class ChiJoin:
    """χ = 0 up to the join start, a C^{k2} Hermite join up to 1, χ = ρ on [1, ∞)."""
    series: CorrelationSeries
    k2: int
    re_join: BPoly = field(repr=False)
    im_join: BPoly = field(repr=False)
    derivative_ratios: Tuple[float, ...]

    def join(self, t, nu: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.re_join(t, nu) + 1j * self.im_join(t, nu)


def _derivatives_at_one(series: CorrelationSeries, k2: int) -> np.ndarray:
    window = (series.t_grid >= 0.5) & (series.t_grid <= 1.5)
    degree = 2 * k2 + 1
    if window.sum() < degree + 1:
        raise PreconditionViolated(
            f"Need at least {degree + 1} samples in [1/2, 3/2] to fit a degree-{degree} join, got {window.sum()}"
        )
    t = series.t_grid[window] - 1.0
    re = np.polynomial.polynomial.polyfit(t, series.rho[window].real, degree)
    im = np.polynomial.polynomial.polyfit(t, series.rho[window].imag, degree)
    factorials = np.array([math.factorial(j) for j in range(k2 + 1)], dtype=float)
    return (re[: k2 + 1] + 1j * im[: k2 + 1]) * factorials


def chi_modify(series: CorrelationSeries, k2: int, sup_bound: Optional[float] = None,
               join_start: float = 0.0) -> ChiJoin:
    """Replace ρ on [0, 1] by a function vanishing to order k2 at 0 and joining ρ C^{k2}-smoothly at 1.

    χ is zero up to ``join_start`` and a Hermite polynomial on [join_start, 1]. ``sup_bound``
    (‖E_π‖_∞‖F_π‖_∞) is enforced on the join; the ratios max|χ^{(j)}| / (2^j·bound) are reported
    for j ≤ k2.
    """
    if k2 < 0:
        raise PreconditionViolated(f"Smoothness order must be nonnegative, got {k2}")
    if not 0.0 <= join_start < 1.0:
        raise PreconditionViolated(f"Join must start in [0, 1), got {join_start}")
    derivs = _derivatives_at_one(series, k2)
    zeros = [0.0] * (k2 + 1)
    re_join = BPoly.from_derivatives([join_start, 1.0], [zeros, list(derivs.real)])
    im_join = BPoly.from_derivatives([join_start, 1.0], [zeros, list(derivs.imag)])

    dense = np.linspace(join_start, 1.0, 2001)
    scale = sup_bound if sup_bound is not None else float(np.abs(derivs[0]))
    peak = float(np.max(np.abs(re_join(dense) + 1j * im_join(dense))))
    if sup_bound is not None and peak > sup_bound * (1 + 1e-12) + 1e-15:
        raise JoinOvershoot(f"Join reaches {peak:.6g}, above the sup bound {sup_bound:.6g}")
    ratios = []
    for j in range(k2 + 1):
        top = float(np.max(np.abs(re_join(dense, j) + 1j * im_join(dense, j))))
        ratios.append(top / (2 ** j * scale) if scale > 0 else 0.0)

    t = series.t_grid
    chi = np.where(t >= 1.0, series.rho, 0.0).astype(complex)
    mid = (t > join_start) & (t < 1.0)
    chi[mid] = re_join(t[mid]) + 1j * im_join(t[mid])
    modified = CorrelationSeries(t, chi, series.estimator, series.error_bars)
    return ChiJoin(modified, k2, re_join, im_join, tuple(ratios))


@dataclass(frozen=True)
class LaplaceValue:
    value: complex
    tail_bound: float


def laplace_numeric(series: CorrelationSeries, s_grid: Sequence[complex]) -> Dict[complex, LaplaceValue]:
    """∫_0^{T_max} e^{−st} χ(t) dt by composite Simpson, with |tail| ≤ sup|χ| e^{−aT_max}/a."""
    t = series.t_grid
    if len(t) < 3:
        raise InsufficientData("Laplace transform needs at least 3 samples")
    sup = float(np.max(np.abs(series.rho)))
    out = {}
    for s in s_grid:
        s = complex(s)
        if s.real <= 0:
            raise NonpositiveRealPart(f"Laplace transform needs Re(s) > 0, got {s}")
        integrand = np.exp(-s * t) * series.rho
        value = simpson(integrand.real, x=t) + 1j * simpson(integrand.imag, x=t)
        out[s] = LaplaceValue(complex(value), sup * math.exp(-s.real * t[-1]) / s.real)
    return out


@dataclass(frozen=True)
class DecayFit:
    model: str
    order_or_rate: float
    constant: float
    r2: float
    t_min: float
    power: Tuple[float, float, float]
    exponential: Tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "order_or_rate": self.order_or_rate,
            "constant": self.constant,
            "r2": self.r2,
            "t_min": self.t_min,
        }


def _line_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(residual ** 2)) / ss_tot
    return float(slope), float(intercept), r2


def fit_decay(series: CorrelationSeries, t_min: float) -> DecayFit:
    """Power fit log|ρ| ~ −n log t, exponential fit log|ρ| ~ −a t; the better r² wins."""
    t = series.t_grid
    mag = np.abs(series.rho)
    keep = (t >= t_min) & (t > 0) & (mag > 0)
    if keep.sum() < 8:
        raise InsufficientData(f"Decay fit needs 8 points with t ≥ {t_min} and ρ ≠ 0, got {keep.sum()}")
    t, log_mag = t[keep], np.log(mag[keep])
    p_slope, p_icpt, p_r2 = _line_fit(np.log(t), log_mag)
    e_slope, e_icpt, e_r2 = _line_fit(t, log_mag)
    power = (-p_slope, math.exp(p_icpt), p_r2)
    exponential = (-e_slope, math.exp(e_icpt), e_r2)
    best = ("exponential", *exponential) if e_r2 > p_r2 else ("power", *power)
    return DecayFit(best[0], best[1], best[2], best[3], float(t_min), power, exponential)
