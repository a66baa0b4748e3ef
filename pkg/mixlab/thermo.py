"""Transfer operators, pressure and Gibbs measures for locally constant potentials.

A depth-k potential acts on the higher-block state space of m-words, m = max(k - 1, 1).
Edges are the admissible (m+1)-words e; e[:m] is the state of the preimage y = a·x and
e[1:] is the state of x, so the transfer matrix has entry e^{φ(e)} at row e[1:], column e[:m].

With right and left Perron vectors h, ν (⟨ν, h⟩ = 1) and pressure P the normalized potential
is φ̃(e) = φ(e) + log h(e[:m]) − log h(e[1:]) − P, and for |w| ≥ m

    μ[w] = h(s)·ν(s) · Π_{i=0}^{|w|-m-1} e^{φ̃(w_i … w_{i+m})},   s = last m symbols of w.
"""
import bisect
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigInvalid, IncompleteTable, InadmissibleWord, PreconditionViolated, SolverFailure
from .sft import MetricConstant, Shift, TwoSidedPoint
from .utils import Word, word_to_str

if TYPE_CHECKING:
    from .groups import CompactGroup

logger = logging.getLogger(__name__)

CODOMAINS = ("real", "complex", "vector", "group")

PERRON_TOL = 1e-13
PERRON_MAX_ITER = 100_000


@dataclass(frozen=True, eq=False)
class LocallyConstantFn:
    """A function of the first ``depth`` symbols; ``values`` is aligned with ``shift.words(depth)``."""
    shift: Shift
    depth: int
    values: np.ndarray
    codomain: str = "real"
    group: Optional["CompactGroup"] = None

    def __post_init__(self):
        if self.codomain not in CODOMAINS:
            raise ConfigInvalid(f"Unknown codomain '{self.codomain}', expected one of {CODOMAINS}")
        if self.depth < 1:
            raise ConfigInvalid(f"Depth must be positive, got {self.depth}")
        if len(self.values) != len(self.shift.words(self.depth)):
            raise ConfigInvalid(
                f"Table has {len(self.values)} entries, expected {len(self.shift.words(self.depth))}"
            )
        if self.codomain == "group" and self.group is None:
            raise ConfigInvalid("Group-valued functions need a group")

    @classmethod
    def from_mapping(cls, shift: Shift, depth: int, mapping: Mapping[Word, Any], codomain: str = "real",
                     group: Optional["CompactGroup"] = None, what: str = "table") -> "LocallyConstantFn":
        for word in mapping:
            if len(word) != depth or not shift.is_admissible(word):
                raise InadmissibleWord(f"{what} key '{word_to_str(word)}' is not an admissible {depth}-word")
        values = []
        for word in shift.words(depth):
            if word not in mapping:
                raise IncompleteTable(word_to_str(word), what)
            values.append(mapping[word])
        return cls(shift, depth, _as_values(values, codomain, group), codomain, group)

    @classmethod
    def constant(cls, shift: Shift, value, depth: int = 1, codomain: str = "real",
                 group: Optional["CompactGroup"] = None) -> "LocallyConstantFn":
        n = len(shift.words(depth))
        return cls(shift, depth, _as_values([value] * n, codomain, group), codomain, group)

    def index(self, word: Sequence[int]) -> int:
        key = tuple(word[: self.depth])
        try:
            return self.shift.word_index(self.depth)[key]
        except KeyError:
            raise InadmissibleWord(f"Word '{word_to_str(key)}' is not admissible")

    def value(self, word: Sequence[int]):
        return self.values[self.index(word)]

    def at(self, x: TwoSidedPoint):
        return self.value(x.future(self.depth))

    def promote(self, depth: int) -> "LocallyConstantFn":
        if depth == self.depth:
            return self
        if depth < self.depth:
            raise PreconditionViolated(f"Cannot lower depth {self.depth} to {depth}")
        index = self.shift.word_index(self.depth)
        rows = [index[w[: self.depth]] for w in self.shift.words(depth)]
        return LocallyConstantFn(self.shift, depth, self.values[rows], self.codomain, self.group)

    def on_words(self, depth: int) -> np.ndarray:
        return self.promote(depth).values

    def map_values(self, fn, codomain: Optional[str] = None) -> "LocallyConstantFn":
        codomain = codomain or self.codomain
        return LocallyConstantFn(self.shift, self.depth, np.asarray(fn(self.values)), codomain,
                                 self.group if codomain == "group" else None)

    def __add__(self, other) -> "LocallyConstantFn":
        if isinstance(other, LocallyConstantFn):
            depth = max(self.depth, other.depth)
            return LocallyConstantFn(self.shift, depth, self.on_words(depth) + other.on_words(depth), self.codomain)
        return LocallyConstantFn(self.shift, self.depth, self.values + other, self.codomain)

    def __mul__(self, scalar) -> "LocallyConstantFn":
        return LocallyConstantFn(self.shift, self.depth, self.values * scalar, self.codomain)

    __rmul__ = __mul__

    def distances(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.codomain == "group":
            return self.group.distance(a, b)
        diff = np.asarray(a) - np.asarray(b)
        if self.codomain == "vector":
            return np.linalg.norm(diff.reshape(diff.shape[0], -1), axis=1)
        return np.abs(diff)

    def sup_norm(self) -> float:
        if self.codomain == "group":
            raise PreconditionViolated("Group-valued functions have no sup norm")
        if self.codomain == "vector":
            return float(np.linalg.norm(self.values.reshape(len(self.values), -1), axis=1).max())
        return float(np.abs(self.values).max())


def _as_values(values: List[Any], codomain: str, group) -> np.ndarray:
    if codomain == "real":
        return np.asarray(values, dtype=float)
    if codomain in ("complex", "vector"):
        return np.asarray(values, dtype=complex)
    return np.stack([group.element(v) for v in values])


def lipschitz_seminorm(f: LocallyConstantFn, lam: MetricConstant) -> float:
    """Exact |f|_Lip: max over i < depth of the oscillation on words sharing i leading symbols, over λ^i."""
    words = f.shift.words(f.depth)
    best = 0.0
    for i in range(f.depth):
        groups: Dict[Word, List[int]] = {}
        for j, w in enumerate(words):
            groups.setdefault(w[:i], []).append(j)
        osc = 0.0
        for members in groups.values():
            if len(members) < 2:
                continue
            vals = f.values[members]
            left, right = np.triu_indices(len(members), k=1)
            osc = max(osc, float(np.max(f.distances(vals[left], vals[right]))))
        best = max(best, osc / lam.value ** i)
    return best


@dataclass(frozen=True, eq=False)
class BlockCode:
    """Higher-block recoding of a shift on m-word states."""
    m: int
    states: List[Word]
    edges: List[Word]
    src: np.ndarray
    dst: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.states)


def block_code(shift: Shift, m: int) -> BlockCode:
    if m not in shift._blocks:
        index = shift.word_index(m)
        edges = shift.words(m + 1)
        src = np.array([index[e[:m]] for e in edges])
        dst = np.array([index[e[1:]] for e in edges])
        shift._blocks[m] = BlockCode(m, shift.words(m), edges, src, dst)
    return shift._blocks[m]


def block_depth(*depths: int) -> int:
    return max(max(depths) - 1, 1)


def transfer_matrix(code: BlockCode, edge_weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(edge_weights)
    matrix = np.zeros((code.n_states, code.n_states), dtype=weights.dtype)
    matrix[code.dst, code.src] = weights
    return matrix


def perron(matrix: np.ndarray, tol: float = PERRON_TOL, max_iter: int = PERRON_MAX_ITER) -> Tuple[float, np.ndarray]:
    """Perron root and positive eigenvector (sum-normalized) by power iteration."""
    n = matrix.shape[0]
    v = np.full(n, 1.0 / n)
    for iteration in range(max_iter):
        w = matrix @ v
        rho = w.sum()
        if rho <= 0:
            raise SolverFailure("Transfer matrix annihilated the positive cone")
        w = w / rho
        if np.max(np.abs(w - v)) <= tol * np.max(w):
            logger.debug(f"Power iteration converged after {iteration + 1} steps, rho={rho!r}")
            return float(np.sum(matrix @ w)), w
        v = w
    raise SolverFailure(f"Power iteration did not reach tolerance {tol} within {max_iter} iterations")


@dataclass(frozen=True, eq=False)
class GibbsData:
    shift: Shift
    potential: LocallyConstantFn
    pressure: float
    code: BlockCode
    right_eigvec: np.ndarray
    left_eigvec: np.ndarray
    normalized_potential: LocallyConstantFn
    state_measure: np.ndarray
    kernel: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.code.m


def _check_real(phi: LocallyConstantFn):
    if phi.codomain != "real":
        raise PreconditionViolated(f"Potential must be real-valued, got {phi.codomain}")


def pressure(shift: Shift, phi: LocallyConstantFn) -> float:
    _check_real(phi)
    code = block_code(shift, block_depth(phi.depth))
    rho, _ = perron(transfer_matrix(code, np.exp(phi.on_words(code.m + 1))))
    return float(np.log(rho))


def topological_entropy(shift: Shift) -> float:
    return pressure(shift, LocallyConstantFn.constant(shift, 0.0))


def gibbs(shift: Shift, phi: LocallyConstantFn) -> GibbsData:
    _check_real(phi)
    code = block_code(shift, block_depth(phi.depth))
    phi_edges = phi.on_words(code.m + 1)
    matrix = transfer_matrix(code, np.exp(phi_edges))
    rho, h = perron(matrix)
    _, nu = perron(matrix.T)
    nu = nu / float(nu @ h)
    P = float(np.log(rho))

    normalized = phi_edges + np.log(h[code.src]) - np.log(h[code.dst]) - P
    state_measure = h * nu
    state_measure = state_measure / state_measure.sum()

    # forward kernel Q[s, s'] = μ(s') e^{φ̃(s+b)} / μ(s)
    kernel = np.zeros((code.n_states, code.n_states))
    kernel[code.src, code.dst] = state_measure[code.dst] * np.exp(normalized) / state_measure[code.src]

    logger.debug(f"Gibbs data on {code.n_states} states, pressure {P!r}")
    return GibbsData(
        shift=shift,
        potential=phi,
        pressure=P,
        code=code,
        right_eigvec=h,
        left_eigvec=nu,
        normalized_potential=LocallyConstantFn(shift, code.m + 1, normalized),
        state_measure=state_measure,
        kernel=kernel,
    )


def cylinder_measure(g: GibbsData, w: Sequence[int]) -> float:
    w = g.shift.check_word(w)
    m = g.m
    if len(w) < m:
        index = g.shift.word_index(m)
        return float(sum(g.state_measure[index[s]] for s in g.shift.words(m) if s[: len(w)] == w))
    value = g.state_measure[g.shift.word_index(m)[w[len(w) - m:]]]
    for i in range(len(w) - m):
        value *= np.exp(g.normalized_potential.value(w[i:i + m + 1]))
    return float(value)


def cylinder_measures(g: GibbsData, length: int) -> np.ndarray:
    """μ[w] for every admissible word of the given length, aligned with ``shift.words(length)``."""
    m = g.m
    shift = g.shift
    if length <= m:
        index = shift.word_index(length)
        out = np.zeros(len(shift.words(length)))
        for s, mass in zip(shift.words(m), g.state_measure):
            out[index[s[:length]]] += mass
        return out
    # words(L+1) lists each L-word's extensions in order, so measures extend blockwise
    succ: List[List[Tuple[int, float]]] = [[] for _ in range(g.code.n_states)]
    for src, dst in zip(g.code.src, g.code.dst):
        succ[src].append((dst, g.kernel[src, dst]))
    measures = list(g.state_measure)
    states = list(range(g.code.n_states))
    for _ in range(length - m):
        measures, states = (
            [mu * q for mu, s in zip(measures, states) for _, q in succ[s]],
            [t for s in states for t, _ in succ[s]],
        )
    return np.asarray(measures)


def integrate(g: GibbsData, f: LocallyConstantFn) -> complex:
    values = f.values
    return np.tensordot(cylinder_measures(g, f.depth), values, axes=(0, 0))


def gibbs_property_ratio(g: GibbsData, n: int) -> Tuple[float, float]:
    """Extremes of μ[w] / e^{φ_n(x) − nP} over n-words w and x ranging over [w]."""
    k = g.potential.depth
    if n < k:
        raise PreconditionViolated(f"Need n ≥ potential depth {k}, got {n}")
    shift = g.shift
    index = shift.word_index(n)
    measures = cylinder_measures(g, n)
    lo, hi = np.inf, 0.0
    for x in shift.words(n + k - 1):
        birkhoff = sum(g.potential.value(x[i:i + k]) for i in range(n))
        ratio = measures[index[x[:n]]] / np.exp(birkhoff - n * g.pressure)
        lo, hi = min(lo, ratio), max(hi, ratio)
    return float(lo), float(hi)


def _cumulative_kernel(g: GibbsData) -> Tuple[List[List[float]], List[List[int]]]:
    cum, targets = [], []
    for s in range(g.code.n_states):
        dst = np.flatnonzero(g.kernel[s])
        cum.append(np.cumsum(g.kernel[s, dst]).tolist())
        targets.append(dst.tolist())
    return cum, targets


def sample_path(g: GibbsData, length: int, seed: int) -> np.ndarray:
    """A μ-distributed path x_0 … x_{length-1} from the stationary Markov chain."""
    if length < 1:
        raise PreconditionViolated(f"Path length must be positive, got {length}")
    rng = np.random.default_rng(seed)
    m = g.m
    states = g.code.states
    start = int(rng.choice(len(states), p=g.state_measure))
    path = list(states[start])
    cum, targets = _cumulative_kernel(g)
    uniforms = rng.random(max(length - m, 0))
    s = start
    for u in uniforms:
        row = cum[s]
        j = min(bisect.bisect_right(row, u * row[-1]), len(row) - 1)
        s = targets[s][j]
        path.append(states[s][-1])
    return np.asarray(path[:length], dtype=np.int64)


def sample_paths(g: GibbsData, n_paths: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Batch of independent μ-distributed paths, shape (n_paths, length)."""
    m = g.m
    states_arr = np.asarray(g.code.states, dtype=np.int64)
    cum = np.cumsum(g.kernel, axis=1)
    s = rng.choice(len(states_arr), size=n_paths, p=g.state_measure)
    columns = [states_arr[s, i] for i in range(m)]
    for _ in range(max(length - m, 0)):
        u = rng.random(n_paths) * cum[s, -1]
        s = np.minimum((cum[s] <= u[:, None]).sum(axis=1), g.code.n_states - 1)
        columns.append(states_arr[s, -1])
    return np.stack(columns[:length], axis=1)
