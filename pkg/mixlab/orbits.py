"""Prime closed orbits of the suspension flow and the sums built over them.

A ledger lists every prime orbit τ with ℓ_τ ≤ T_max together with the conjugacy invariant
of its holonomy. Sums over all closed orbits (prime powers included) use the von Mangoldt
convention: τ^m has period mℓ_τ, holonomy [τ]^m and weight Λ = ℓ_τ.
"""
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .cocycle import SkewSystem, badly_approximable
from .errors import (BudgetExceeded, EmptyWindow, InsufficientData, PoleEncountered, PreconditionViolated,
                     RationalAlpha, SolverFailure)
from .groups import Irrep
from .parallel import ordered_map
from .sft import OrbitRecord, enumerate_prime_orbits, window_indices, word_lookup
from .thermo import LocallyConstantFn, pressure
from .twisted import build_twisted

logger = logging.getLogger(__name__)

MAX_ORBIT_LENGTH = 26
CONVENTIONS = ("htop", "plain")


@dataclass(frozen=True, eq=False)
class OrbitLedger:
    sys: SkewSystem
    records: Tuple[OrbitRecord, ...]
    h_top: float
    T_max: float
    n_max: int

    @property
    def ells(self) -> np.ndarray:
        return np.array([r.r_period for r in self.records], dtype=float)

    @property
    def invariants(self) -> np.ndarray:
        return np.array([r.holonomy for r in self.records], dtype=float).reshape(len(self.records), -1)

    def window(self, T: float) -> int:
        """Number of records with ℓ ≤ T."""
        if T > self.T_max + 1e-12:
            raise PreconditionViolated(f"T={T} exceeds the ledger coverage T_max={self.T_max}")
        return int(np.searchsorted(self.ells, T + 1e-12, side="right"))

    def rows(self) -> List[dict]:
        return [
            {"necklace": "".join(map(str, r.necklace)), "n": r.n, "ell": r.r_period,
             **{f"holonomy_{i}": v for i, v in enumerate(r.holonomy)}}
            for r in self.records
        ]


def flow_entropy(sys: SkewSystem) -> float:
    """The unique h with P(−h·r) = 0."""
    log_n = math.log(sys.shift.n_symbols)
    # P(−h r) ≤ log N − h min r, widened so the sign change is strict at the bracket end
    hi = (log_n / sys.min_roof) * (1 + 1e-9) + 1e-9

    def f(h: float) -> float:
        return pressure(sys.shift, sys.roof * (-h))

    try:
        root = brentq(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (ValueError, RuntimeError) as exc:
        raise SolverFailure(f"Entropy root not bracketed in [0, {hi}]: {exc}")
    logger.debug(f"Flow entropy {root!r}, residual pressure {f(root):.3g}")
    return float(root)


def cycle_data(sys: SkewSystem, words: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(r_n, Θ_n) at the periodic points (w)^∞ for a batch of words of equal length n."""
    shift, group = sys.shift, sys.group
    count, n = words.shape
    reach = max(sys.roof.depth, sys.cocycle.depth)
    cyclic = np.tile(words, (1, reach // n + 2))
    roof_lookup = word_lookup(shift, sys.roof.depth)
    cocycle_lookup = word_lookup(shift, sys.cocycle.depth)
    ell = np.zeros(count)
    theta = np.tile(group.identity(), (count, 1))
    for i in range(n):
        ell += sys.roof.values[window_indices(shift, cyclic, i, sys.roof.depth, roof_lookup)]
        step = sys.cocycle.values[window_indices(shift, cyclic, i, sys.cocycle.depth, cocycle_lookup)]
        theta = group.compose(step, theta)
    return ell, theta


def build_ledger(sys: SkewSystem, T_max: float, max_length: int = MAX_ORBIT_LENGTH,
                 threads: Optional[int] = None) -> OrbitLedger:
    """All prime orbits with ℓ ≤ T_max, from necklaces of length ≤ ⌈T_max / min r⌉."""
    n_max = max(1, math.ceil(T_max / sys.min_roof - 1e-12))
    if n_max > max_length:
        raise BudgetExceeded(f"T_max={T_max} needs necklaces of length {n_max} > budget {max_length}")
    necklaces = enumerate_prime_orbits(sys.shift, n_max, threads)
    by_length: Dict[int, List[OrbitRecord]] = {}
    for record in necklaces:
        by_length.setdefault(record.n, []).append(record)

    def measure(n: int) -> List[OrbitRecord]:
        group_records = by_length[n]
        ell, theta = cycle_data(sys, np.array([r.necklace for r in group_records], dtype=np.int64))
        invariants = sys.group.conjugacy_invariant(theta)
        return [OrbitRecord(r.necklace, n, float(e), tuple(float(v) for v in inv))
                for r, e, inv in zip(group_records, ell, invariants)]

    measured = ordered_map(measure, sorted(by_length), threads)
    records = [r for part in measured for r in part if r.r_period <= T_max + 1e-12]
    records.sort(key=lambda r: (r.r_period, r.n, r.necklace))
    h_top = flow_entropy(sys)
    logger.info(f"Ledger with {len(records)} prime orbits up to T={T_max} (necklaces ≤ {n_max}), h_top={h_top:.6g}")
    return OrbitLedger(sys, tuple(records), h_top, float(T_max), n_max)


ClassFunction = Union[Irrep, Callable[[np.ndarray], np.ndarray]]


def _class_values(F: ClassFunction, invariants: np.ndarray) -> np.ndarray:
    if isinstance(F, Irrep):
        return F.character_from_invariant(invariants)
    return np.asarray(F(invariants))


def equi_average(ledger: OrbitLedger, F: ClassFunction, T: float, haar_mean: Optional[complex] = None) -> complex:
    """(1/#V(T)) Σ_{ℓ_τ ≤ T} F([τ]) − ∫_G F dHaar.

    For an irrep the Haar mean is known (1 for the trivial one, 0 otherwise); other class
    functions must pass it.
    """
    if isinstance(F, Irrep):
        F.check_group(ledger.sys.group)
        haar_mean = 1.0 if F.is_trivial else 0.0
    elif haar_mean is None:
        raise PreconditionViolated("A class function other than a character needs its Haar mean")
    count = ledger.window(T)
    if count == 0:
        raise EmptyWindow(f"No prime orbits with ℓ ≤ {T}")
    values = _class_values(F, ledger.invariants[:count])
    return complex(np.mean(values) - haar_mean)


def z_function(sys: SkewSystem, pi: Irrep, n: int, s: complex, h_top: Optional[float] = None) -> complex:
    """Z_{π,n}(s) = Σ_{σⁿx = x} ξ_π(Θ_n(x)) e^{−s h_top r_n(x)} over all period-n points."""
    pi.check_group(sys.group)
    if h_top is None:
        h_top = flow_entropy(sys)
    words = np.array([w for w in sys.shift.words(n) if sys.shift.is_cyclic(w)], dtype=np.int64).reshape(-1, n)
    if len(words) == 0:
        return 0j
    ell, theta = cycle_data(sys, words)
    return complex(np.sum(pi.character(theta) * np.exp(-complex(s) * h_top * ell)))


def z_trace(sys: SkewSystem, pi: Irrep, n: int, s: complex, h_top: float) -> complex:
    """Tr(Mⁿ) for the twisted matrix with potential 0 and weight e^{−s h_top r}."""
    zero = LocallyConstantFn.constant(sys.shift, 0.0)
    op = build_twisted(sys, pi, complex(s) * h_top, potential=zero)
    return complex(np.trace(op.power(n)))


def _factors(ledger: OrbitLedger, pi: Irrep, s: complex, T: float) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues e_k([τ]) and z_τ = e^{−s h_top ℓ_τ} for the orbits with ℓ ≤ T."""
    pi.check_group(ledger.sys.group)
    count = ledger.window(T)
    phases = pi.eigenphases(ledger.invariants[:count]).reshape(count, -1)
    z = np.exp(-complex(s) * ledger.h_top * ledger.ells[:count])
    return phases, z


def l_function_partial(ledger: OrbitLedger, pi: Irrep, s: complex, T: float) -> complex:
    """Π_{ℓ_τ ≤ T} det(I − π([τ]) e^{−s h_top ℓ_τ})^{−1}."""
    phases, z = _factors(ledger, pi, s, T)
    dets = np.prod(1 - phases * z[:, None], axis=1)
    if len(dets) and np.min(np.abs(dets)) < 1e-14:
        raise PoleEncountered(f"Euler factor vanishes at s={s}")
    return complex(np.prod(1.0 / dets))


def log_l_function_partial(ledger: OrbitLedger, pi: Irrep, s: complex, T: float) -> complex:
    """−Σ_{ℓ_τ ≤ T} Σ_k log(1 − e_k z_τ), principal branch per factor."""
    phases, z = _factors(ledger, pi, s, T)
    terms = 1 - phases * z[:, None]
    if terms.size and np.min(np.abs(terms)) < 1e-14:
        raise PoleEncountered(f"Euler factor vanishes at s={s}")
    return complex(-np.sum(np.log(terms)))


@dataclass(frozen=True)
class ZetaCheck:
    log_product: complex
    series: complex
    gap: float
    powers: int


def weighted_zeta_check(ledger: OrbitLedger, pi: Irrep, s: complex, T: float, tol: float = 1e-18) -> ZetaCheck:
    """log of the partial Euler product against Σ_n Z_{π,n}(s)/n restricted to the same orbits.

    Restricted to prime orbits τ with ℓ_τ ≤ T the series is Σ_τ Σ_m ξ_π([τ]^m) z_τ^m / m; powers
    are summed until |z|^m/m < tol.
    """
    phases, z = _factors(ledger, pi, s, T)
    log_product = log_l_function_partial(ledger, pi, s, T)
    zmax = float(np.max(np.abs(z))) if len(z) else 0.0
    if zmax >= 1:
        raise PreconditionViolated(f"Series diverges at s={s}: |z| reaches {zmax}")
    series, m = 0j, 0
    while len(z):
        m += 1
        series += complex(np.sum(np.sum(phases ** m, axis=1) * z ** m)) / m
        if zmax ** m / m < tol:
            break
    return ZetaCheck(log_product, series, abs(log_product - series), m)


def m_kernel(x: float, k: int, s: complex) -> complex:
    """M_{x,k}(s) = x^{s+k} / Π_{j=0}^{k} (s + j)."""
    return complex(x ** (s + k) / np.prod([s + j for j in range(k + 1)]))


@dataclass(frozen=True, eq=False)
class CountingFns:
    ledger: OrbitLedger
    pi: Irrep
    k: int

    def _characters(self, count: int) -> np.ndarray:
        return self.pi.character_from_invariant(self.ledger.invariants[:count])

    def _power_characters(self, max_period: float) -> List[Tuple[int, float, complex]]:
        """(record index, period mℓ, ξ_π([τ]^m)) for every closed orbit τ^m with period ≤ max_period."""
        phases = self.pi.eigenphases(self.ledger.invariants).reshape(len(self.ledger.records), -1)
        return [(i, period, complex(np.sum(phases[i] ** m))) for i, m, period in self.prime_powers(max_period)]

    def psi(self, T: float) -> complex:
        """Ψ_π(T) = Σ ξ_π([τ']) Λ_{τ'} over closed orbits τ' = τ^m with mℓ_τ ≤ T, where Λ_{τ'} = ℓ_τ."""
        self.ledger.window(T)
        return sum((xi * self.ledger.ells[i] for i, _, xi in self._power_characters(T)), 0j)

    def phi(self, T: float) -> complex:
        """Φ_π(T) = Σ_{τ ∈ V(T)} ξ_π([τ]) over prime orbits only."""
        return complex(np.sum(self._characters(self.ledger.window(T))))

    def prime_powers(self, max_period: float) -> List[Tuple[int, int, float]]:
        """(record index, power m, period mℓ) for all closed orbits with period ≤ max_period."""
        out = []
        for i, ell in enumerate(self.ledger.ells[: self.ledger.window(min(max_period, self.ledger.T_max))]):
            m = 1
            while m * ell <= max_period + 1e-12:
                out.append((i, m, m * ell))
                m += 1
        return out

    def n(self, x: float, convention: str = "htop") -> complex:
        """N_{π,k}(x) = Σ ξ_π([τ']) Λ_{τ'} (x − e^{ℓ_{τ'}})^k over closed orbits τ'.

        ``htop`` keeps orbits with e^{h_top ℓ} ≤ x, ``plain`` those with e^{ℓ} ≤ x; the weight uses
        e^{ℓ} in both.
        """
        if convention not in CONVENTIONS:
            raise PreconditionViolated(f"Unknown convention '{convention}', expected one of {CONVENTIONS}")
        scale = self.ledger.h_top if convention == "htop" else 1.0
        limit = math.log(x) / scale
        if limit > self.ledger.T_max + 1e-12:
            raise PreconditionViolated(f"x={x} needs orbits beyond the ledger coverage T_max={self.ledger.T_max}")
        total = 0j
        for i, period, xi in self._power_characters(limit):
            total += xi * self.ledger.ells[i] * (x - math.exp(period)) ** self.k
        return total

    def m_kernel(self, x: float, s: complex) -> complex:
        return m_kernel(x, self.k, s)


def counting_functions(ledger: OrbitLedger, pi: Irrep, k: int) -> CountingFns:
    if k < 0:
        raise PreconditionViolated(f"k must be nonnegative, got {k}")
    pi.check_group(ledger.sys.group)
    return CountingFns(ledger, pi, k)


@dataclass(frozen=True)
class EquiDecay:
    label: str
    weight_norm: float
    order: float
    constant: float
    r2: float


@dataclass(frozen=True)
class EquiErrorFit:
    per_pi: Tuple[EquiDecay, ...]
    weight_exponent: Optional[float]


def _log_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    residual = float(np.sum((y - (slope * x + intercept)) ** 2))
    return float(slope), float(intercept), 1.0 if ss_tot == 0 else 1.0 - residual / ss_tot


def equi_error_fit(ledger: OrbitLedger, pi_list: Sequence[Irrep], T_grid: Sequence[float]) -> EquiErrorFit:
    """Per π, the log-log slope of |equi_average(ξ_π, T)| in T; across π, the growth of the
    fitted constants in |λ_π|."""
    T_grid = np.asarray(T_grid, dtype=float)
    if len(T_grid) < 4:
        raise InsufficientData(f"Equidistribution fit needs at least 4 grid points, got {len(T_grid)}")
    fits = []
    for pi in pi_list:
        averages = np.abs([equi_average(ledger, pi, T) for T in T_grid])
        keep = averages > 0
        if keep.sum() < 4:
            raise InsufficientData(f"Fewer than 4 nonzero averages for {pi.label}")
        slope, intercept, r2 = _log_fit(np.log(T_grid[keep]), np.log(averages[keep]))
        fits.append(EquiDecay(str(pi.label), pi.weight_norm, -slope, math.exp(intercept), r2))
    exponent = None
    nontrivial = [f for f in fits if f.weight_norm > 0]
    if len(nontrivial) >= 2:
        xs = np.log([f.weight_norm for f in nontrivial])
        ys = np.log([f.constant for f in nontrivial])
        exponent = float(np.polyfit(xs, ys, 1)[0])
    return EquiErrorFit(tuple(fits), exponent)


@dataclass(frozen=True)
class ClosedOrbitCertificate:
    lengths: Tuple[float, float, float]
    alpha: float
    delta: float
    C5: float


def closed_orbit_diophantine(ledger: OrbitLedger, q_max: int = 10_000, n_lengths: int = 8) -> ClosedOrbitCertificate:
    """Three orbit periods with α = (ℓ1 − ℓ2)/(ℓ2 − ℓ3) badly approximable, best δ first.

    Searches triples among the ``n_lengths`` shortest distinct periods.
    """
    lengths = sorted({round(e, 12) for e in ledger.ells})[:n_lengths]
    best: Optional[ClosedOrbitCertificate] = None
    for triple in combinations(lengths, 3):
        for l1, l2, l3 in (triple, triple[::-1], (triple[1], triple[0], triple[2])):
            alpha = (l1 - l2) / (l2 - l3)
            try:
                delta, C5 = badly_approximable(alpha, q_max)
            except RationalAlpha:
                continue
            candidate = ClosedOrbitCertificate((l1, l2, l3), alpha, delta, C5)
            if best is None or (candidate.C5, -candidate.delta) < (best.C5, -best.delta):
                best = candidate
    if best is None:
        raise RationalAlpha(f"All period ratios among the {len(lengths)} shortest orbits are rational")
    logger.info(f"Closed-orbit certificate alpha={best.alpha!r}, delta={best.delta:.6g}, C5={best.C5}")
    return best


def closed_orbit_counts(ledger: OrbitLedger, T_grid: Sequence[float]) -> List[Tuple[float, int, float]]:
    """(T, #V(T), #V(T)·h_top·T / e^{h_top T}) on the grid."""
    h = ledger.h_top
    out = []
    for T in T_grid:
        count = ledger.window(T)
        out.append((float(T), count, count * h * T / math.exp(h * T)))
    return out
