"""Group extensions of the shift: Birkhoff data, stable/unstable displacements and twists,
closed s/u chains, and Diophantine certification of finite subsets of the group.

Roof and cocycle read future coordinates only, so every limit below is a finite sum or
product. For y on the stable leaf of x with last disagreement at index D, only the first
D + 1 terms survive; on the unstable leaf with first disagreement at D, only the K = k − 1 − D
backward terms do (k the depth).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigInvalid, InadmissibleWord, PreconditionViolated, RationalAlpha, SearchBudgetExceeded
from .groups import CompactGroup, Irrep
from .parallel import ordered_map, spawn_seeds
from .sft import (MetricConstant, Shift, TwoSidedPoint, first_difference, last_difference, on_stable_leaf,
                  on_unstable_leaf, same_point)
from .thermo import LocallyConstantFn, lipschitz_seminorm
from .utils import Word

logger = logging.getLogger(__name__)

SIDES = ("s", "u")


@dataclass(frozen=True, eq=False)
class SkewSystem:
    shift: Shift
    lam: MetricConstant
    roof: LocallyConstantFn
    cocycle: LocallyConstantFn
    group: CompactGroup
    potential: Optional[LocallyConstantFn] = None

    def __post_init__(self):
        if self.roof.codomain != "real" or float(np.min(self.roof.values)) <= 0:
            raise ConfigInvalid("Roof function must be real-valued and strictly positive")
        if self.cocycle.codomain != "group" or self.cocycle.group != self.group:
            raise ConfigInvalid(f"Cocycle must take values in {self.group}")
        if self.potential is None:
            object.__setattr__(self, "potential", LocallyConstantFn.constant(self.shift, 0.0))

    @property
    def min_roof(self) -> float:
        return float(np.min(self.roof.values))

    @property
    def max_roof(self) -> float:
        return float(np.max(self.roof.values))

    def with_cocycle(self, cocycle: LocallyConstantFn) -> "SkewSystem":
        return SkewSystem(self.shift, self.lam, self.roof, cocycle, self.group, self.potential)


def birkhoff(sys: SkewSystem, x: TwoSidedPoint, n: int) -> Tuple[float, np.ndarray]:
    """(r_n(x), Θ_n(x)) with Θ_n = Θ∘σ^{n-1} ⋯ Θ."""
    if n < 0:
        raise PreconditionViolated(f"Birkhoff length must be nonnegative, got {n}")
    total = 0.0
    theta = sys.group.identity()
    for i in range(n):
        y = x.shifted(i)
        total += float(sys.roof.at(y))
        theta = sys.group.compose(sys.cocycle.at(y), theta)
    return total, theta


def birkhoff_word(sys: SkewSystem, word: Sequence[int]) -> Tuple[float, np.ndarray]:
    """Birkhoff data of the periodic point (word)^∞ over one period."""
    return birkhoff(sys, TwoSidedPoint.periodic(word), len(word))


def _surviving_terms(sys: SkewSystem, x: TwoSidedPoint, y: TwoSidedPoint, side: str, depth: int) -> int:
    if side == "s":
        last = last_difference(x, y)
        return 0 if last is None or last < 0 else last + 1
    if side == "u":
        first = first_difference(x, y)
        return 0 if first is None else max(0, depth - 1 - first)
    raise PreconditionViolated(f"Side must be 's' or 'u', got {side!r}")


def displacement(sys: SkewSystem, x: TwoSidedPoint, y: TwoSidedPoint, side: str) -> float:
    """Δ^s(x, y) = lim r_n(y) − r_n(x), or Δ^u(x, y) = lim r_n(σ^{-n}x) − r_n(σ^{-n}y)."""
    n = _surviving_terms(sys, x, y, side, sys.roof.depth)
    if side == "s":
        return birkhoff(sys, y, n)[0] - birkhoff(sys, x, n)[0]
    return displacement_partial(sys, x, y, n)


def displacement_partial(sys: SkewSystem, x: TwoSidedPoint, y: TwoSidedPoint, k: int) -> float:
    """r_k(σ^{-k}x) − r_k(σ^{-k}y)."""
    return birkhoff(sys, x.shifted(-k), k)[0] - birkhoff(sys, y.shifted(-k), k)[0]


def twist(sys: SkewSystem, x: TwoSidedPoint, y: TwoSidedPoint, side: str) -> np.ndarray:
    """Θ^s(x, y) = lim Θ_n(y)^{-1} Θ_n(x), or Θ^u(x, y) = lim Θ_n(σ^{-n}y) Θ_n(σ^{-n}x)^{-1}."""
    n = _surviving_terms(sys, x, y, side, sys.cocycle.depth)
    group = sys.group
    if side == "s":
        return group.compose(group.inverse(birkhoff(sys, y, n)[1]), birkhoff(sys, x, n)[1])
    return twist_partial(sys, x, y, n)


def twist_partial(sys: SkewSystem, x: TwoSidedPoint, y: TwoSidedPoint, k: int) -> np.ndarray:
    """Θ_k(σ^{-k}y) Θ_k(σ^{-k}x)^{-1}."""
    group = sys.group
    return group.compose(birkhoff(sys, y.shifted(-k), k)[1], group.inverse(birkhoff(sys, x.shifted(-k), k)[1]))


def tail_constants(sys: SkewSystem) -> Tuple[float, float]:
    """(C10, C12) = (|r|_Lip, |Θ|_Lip) / (1 − λ)."""
    scale = 1.0 / (1.0 - sys.lam.value)
    return lipschitz_seminorm(sys.roof, sys.lam) * scale, lipschitz_seminorm(sys.cocycle, sys.lam) * scale


def splice(left: TwoSidedPoint, cut: int, word: Word, right: TwoSidedPoint) -> TwoSidedPoint:
    """The point reading ``left`` below ``cut``, then ``word``, then ``right`` from cut + len(word)."""
    end = cut + len(word)
    lo = min(left.left_threshold, cut)
    hi = max(right.right_threshold, end)
    core = left.symbols(lo, cut) + tuple(word) + right.symbols(end, hi)
    left_cycle = left.symbols(lo - len(left.left_cycle), lo)
    right_cycle = right.symbols(hi, hi + len(right.right_cycle))
    return TwoSidedPoint(left_cycle, core, right_cycle, offset=-lo)


@dataclass(frozen=True, eq=False)
class BrinTwist:
    points: Tuple[TwoSidedPoint, ...]
    sides: Tuple[str, ...]
    twist: np.ndarray
    displacement_sum: float

    @property
    def chain(self) -> List[Tuple[TwoSidedPoint, Optional[str]]]:
        return list(zip(self.points, self.sides + (None,)))

    @property
    def length(self) -> int:
        return len(self.sides)


def _splice_words(shift: Shift, max_length: int) -> List[Word]:
    words: List[Word] = [()]
    for k in range(1, max_length + 1):
        words.extend(shift.words(k))
    return words


def _neighbours(sys: SkewSystem, base: TwoSidedPoint, z: TwoSidedPoint, side: str, n0: int,
                words: List[Word]) -> List[TwoSidedPoint]:
    """Points of W^side_{n0}(z) obtained by splicing a short word onto z or onto the base point."""
    found: List[TwoSidedPoint] = []
    for source in (base, z):
        for word in words:
            if side == "s":
                y = splice(source, n0 - len(word), word, z)
            else:
                y = splice(z, -n0 + 1, word, source)
            try:
                sys.shift.check_point(y)
            except InadmissibleWord:
                continue
            if same_point(y, z) or any(same_point(y, other) for other in found):
                continue
            found.append(y)
    return found


def _on_leaf(x: TwoSidedPoint, y: TwoSidedPoint, side: str, n0: int) -> bool:
    return on_stable_leaf(x, y, n0) if side == "s" else on_unstable_leaf(x, y, n0)


def brin_set(sys: SkewSystem, x: TwoSidedPoint, n0: int, p0: int, tol: float = 1e-10,
             splice_length: int = 2, max_nodes: int = 200_000) -> List[BrinTwist]:
    """Closed s/u chains at x of size n0 and length ≤ p0 with vanishing displacement sum.

    Chain points come from splicing admissible words of length ≤ ``splice_length`` between
    the current point and either the current point or x. Consecutive legs alternate sides.
    The trivial chain is always first.
    """
    if p0 < 2:
        raise PreconditionViolated(f"Chain length bound p0 must be at least 2, got {p0}")
    sys.shift.check_point(x)
    group = sys.group
    words = _splice_words(sys.shift, splice_length)
    found = [BrinTwist((x, x), ("s",), group.identity(), 0.0)]
    nodes = 0

    def close(points, sides, g, total):
        z = points[-1]
        for side in SIDES:
            if sides and sides[-1] == side:
                continue
            if not _on_leaf(z, x, side, n0):
                continue
            delta = total + displacement(sys, z, x, side)
            if abs(delta) <= tol:
                g_closed = group.compose(twist(sys, z, x, side), g)
                found.append(BrinTwist(points + (x,), sides + (side,), g_closed, delta))

    def extend(points, sides, g, total):
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise SearchBudgetExceeded(f"Chain search visited more than {max_nodes} points")
        if len(points) > 1:
            close(points, sides, g, total)
        if len(points) >= p0:
            return
        z = points[-1]
        for side in SIDES:
            if sides and sides[-1] == side:
                continue
            for y in _neighbours(sys, x, z, side, n0, words):
                if same_point(y, x):
                    continue
                extend(points + (y,), sides + (side,),
                       group.compose(twist(sys, z, y, side), g),
                       total + displacement(sys, z, y, side))

    extend((x,), (), group.identity(), 0.0)
    logger.info(f"Chain search at n0={n0}, p0={p0}: {len(found)} closed chains over {nodes} points")
    return found


@dataclass(frozen=True)
class DiophantineRow:
    label: str
    weight_norm: float
    dim: int
    lower_bound: float
    minimax: float


@dataclass
class DiophantineReport:
    gamma: np.ndarray
    rows: List[DiophantineRow]
    weight_cutoff: float
    fitted_C: float = 0.0
    fitted_delta: float = 0.0

    def fit(self, exponent: Optional[float] = None) -> Tuple[float, float]:
        """Fit δ_π ≥ δ/|λ_π|^C on the certified lower bounds; C from record minima unless given."""
        rows = sorted(self.rows, key=lambda r: r.weight_norm)
        if exponent is None:
            records, best = [], np.inf
            for row in rows:
                if 0 < row.lower_bound < best:
                    best = row.lower_bound
                    records.append((np.log(row.weight_norm), np.log(row.lower_bound)))
            if len(records) >= 2:
                xs, ys = np.array(records).T
                exponent = max(0.0, -float(np.polyfit(xs, ys, 1)[0]))
            else:
                exponent = 0.0
        delta = min((r.lower_bound * r.weight_norm ** exponent for r in rows), default=0.0)
        self.fitted_C, self.fitted_delta = float(exponent), float(delta)
        return self.fitted_C, self.fitted_delta


def _minimax(mats: np.ndarray, start: np.ndarray, iterations: int) -> float:
    """min over unit h of max_g ‖(I − π(g))h‖ by projected subgradient descent."""
    h = start / np.linalg.norm(start)
    best = np.inf
    for t in range(iterations):
        images = np.einsum("gab,b->ga", mats, h)
        norms = np.linalg.norm(images, axis=1)
        active = int(np.argmax(norms))
        best = min(best, float(norms[active]))
        if norms[active] < 1e-15:
            break
        grad = mats[active].conj().T @ images[active] / norms[active]
        h = h - grad * (0.5 / np.sqrt(t + 1))
        h = h / np.linalg.norm(h)
    return best


def _certify_irrep(pi: Irrep, gamma: np.ndarray, restarts: int, seed_seq, iterations: int) -> DiophantineRow:
    mats = np.eye(pi.dim) - pi.matrix(gamma)
    if pi.dim == 1:
        values = np.abs(mats[:, 0, 0])
        lower = float(np.sqrt(np.mean(values ** 2)))
        return DiophantineRow(str(pi.label), pi.weight_norm, 1, lower, float(values.max()))
    Q = np.einsum("gba,gbc->ac", mats.conj(), mats) / len(gamma)
    eigvals, eigvecs = np.linalg.eigh(Q)
    lower = float(np.sqrt(max(eigvals[0], 0.0)))
    rng = np.random.default_rng(seed_seq)
    starts = [eigvecs[:, 0]] + [rng.normal(size=pi.dim) + 1j * rng.normal(size=pi.dim) for _ in range(restarts)]
    minimax = min(_minimax(mats, s, iterations) for s in starts)
    return DiophantineRow(str(pi.label), pi.weight_norm, pi.dim, lower, max(minimax, lower))


def diophantine_certify(group: CompactGroup, gamma: np.ndarray, weight_cutoff: float, restarts: int = 64,
                        seed: int = 0, iterations: int = 200, threads: Optional[int] = None) -> DiophantineReport:
    """Per-irrep displacement constants δ_π of Γ for all nontrivial π with |λ_π| ≤ cutoff."""
    gamma = group.check(np.atleast_2d(np.asarray(gamma, dtype=float)))
    if len(gamma) == 0:
        raise PreconditionViolated("Diophantine certification needs a nonempty set")
    irreps = [pi for pi in group.irreps_up_to(weight_cutoff) if not pi.is_trivial]
    seeds = spawn_seeds(seed, len(irreps))
    rows = ordered_map(lambda item: _certify_irrep(item[0], gamma, restarts, item[1], iterations),
                       list(zip(irreps, seeds)), threads)
    report = DiophantineReport(gamma, rows, weight_cutoff)
    report.fit()
    logger.info(f"Certified {len(rows)} irreps up to {weight_cutoff}: C={report.fitted_C:.4f}, "
                f"delta={report.fitted_delta:.6g}")
    return report


def torus_mode_deltas(angles: np.ndarray, max_mode: int) -> np.ndarray:
    """δ_m = max_g |1 − e^{i m θ_g}| for m = 1..max_mode on T^1."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float)).ravel()
    m = np.arange(1, max_mode + 1, dtype=float)
    return np.max(np.abs(1 - np.exp(1j * np.outer(m, angles))), axis=1)


def continued_fraction(alpha: float, max_denominator: int) -> Tuple[List[int], List[Tuple[int, int]]]:
    """Partial quotients and convergents p/q of alpha with q ≤ max_denominator."""
    terms: List[int] = []
    convergents: List[Tuple[int, int]] = []
    p_prev, p = 1, math.floor(alpha)
    q_prev, q = 0, 1
    terms.append(p)
    convergents.append((p, q))
    rest = alpha - math.floor(alpha)
    while rest > 1e-15:
        value = 1.0 / rest
        a = math.floor(value)
        rest = value - a
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        if q > max_denominator:
            break
        terms.append(a)
        convergents.append((p, q))
    return terms, convergents


def badly_approximable(alpha: float, q_max: int, slope_tol: float = 0.05) -> Tuple[float, float]:
    """Certified (δ, C5) with q^{C5}·dist(qα, Z) ≥ δ for 1 ≤ q ≤ q_max.

    Minima over q are attained at convergents. C5 = 1 unless q·dist(qα, Z) decays along the
    convergents faster than ``slope_tol`` in log-log scale.
    """
    if q_max < 2:
        raise PreconditionViolated(f"q_max must be at least 2, got {q_max}")
    _, convergents = continued_fraction(alpha, q_max)
    for p, q in convergents:
        if abs(alpha - p / q) < 1e-15:
            raise RationalAlpha(f"{alpha!r} is within 1e-15 of {p}/{q}")
    qs = np.array([q for _, q in convergents], dtype=float)
    dist = np.abs(qs * alpha - np.round(qs * alpha))
    exponent = 1.0
    if len(qs) >= 3:
        slope = float(np.polyfit(np.log(qs), np.log(qs * dist), 1)[0])
        if slope < -slope_tol:
            exponent = 1.0 - slope
    delta = float(np.min(qs ** exponent * dist))
    logger.debug(f"alpha={alpha!r}: {len(qs)} convergents, C5={exponent}, delta={delta}")
    return delta, exponent
