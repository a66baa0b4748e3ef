"""Subshifts of finite type, words, two-sided points and prime periodic orbits.

Two-sided points are eventually periodic in both directions and are stored as
``(left_cycle, core, right_cycle, offset)``; the symbol at index ``i`` is read from the raw
stream ``...LLL CORE RRR...`` at position ``offset + i``, with position 0 the first core
symbol. Shifting a point only moves the offset.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InadmissibleWord, NotAperiodic, NotOnSameLeaf, PreconditionViolated, ZeroRowOrColumn
from .parallel import ordered_map
from .utils import Word, word_to_str

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Shift:
    transition: np.ndarray
    aperiodicity_power: int
    _words: Dict[int, List[Word]] = field(default_factory=dict, repr=False)
    _index: Dict[int, Dict[Word, int]] = field(default_factory=dict, repr=False)
    _blocks: Dict[int, object] = field(default_factory=dict, repr=False)

    @property
    def n_symbols(self) -> int:
        return self.transition.shape[0]

    def admissible(self, a: int, b: int) -> bool:
        return bool(self.transition[a, b])

    def is_admissible(self, word: Sequence[int]) -> bool:
        if any(s < 0 or s >= self.n_symbols for s in word):
            return False
        return all(self.transition[a, b] for a, b in zip(word, word[1:]))

    def is_cyclic(self, word: Sequence[int]) -> bool:
        return len(word) > 0 and self.is_admissible(word) and bool(self.transition[word[-1], word[0]])

    def check_word(self, word: Sequence[int]) -> Word:
        word = tuple(int(s) for s in word)
        if not word or not self.is_admissible(word):
            raise InadmissibleWord(f"Word '{word_to_str(word)}' is not admissible")
        return word

    def words(self, k: int) -> List[Word]:
        """Admissible words of length k in lexicographic order."""
        if k < 1:
            raise PreconditionViolated(f"Word length must be positive, got {k}")
        if k not in self._words:
            if k == 1:
                self._words[1] = [(a,) for a in range(self.n_symbols)]
            else:
                succ = [np.flatnonzero(row).tolist() for row in self.transition]
                self._words[k] = [w + (b,) for w in self.words(k - 1) for b in succ[w[-1]]]
        return self._words[k]

    def word_index(self, k: int) -> Dict[Word, int]:
        if k not in self._index:
            self._index[k] = {w: i for i, w in enumerate(self.words(k))}
        return self._index[k]

    def count_words(self, k: int) -> int:
        return int(np.linalg.matrix_power(self.transition.astype(object), k - 1).sum())

    def periodic_count(self, n: int) -> int:
        """Number of points with σⁿx = x, i.e. trace(Aⁿ)."""
        return int(np.trace(np.linalg.matrix_power(self.transition.astype(object), n)))

    def check_point(self, x: "TwoSidedPoint") -> "TwoSidedPoint":
        if not x.left_cycle or not x.right_cycle:
            raise InadmissibleWord("Two-sided points need nonempty left and right cycles")
        lo = -x.offset - 2 * len(x.left_cycle)
        hi = len(x.core) - x.offset + 2 * len(x.right_cycle)
        window = x.symbols(lo, hi)
        if not self.is_admissible(window):
            raise InadmissibleWord(f"Point {x} is not admissible")
        return x


def build_shift(transition) -> Shift:
    matrix = np.asarray(transition)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise ZeroRowOrColumn(f"Transition matrix must be square and nonempty, got shape {matrix.shape}")
    if not np.isin(matrix, (0, 1)).all():
        raise ZeroRowOrColumn("Transition matrix entries must be 0 or 1")
    matrix = matrix.astype(np.int64)
    n = matrix.shape[0]
    if (matrix.sum(axis=1) == 0).any() or (matrix.sum(axis=0) == 0).any():
        raise ZeroRowOrColumn("Transition matrix has an all-zero row or column")

    # Wielandt bound
    bound = n * n - 2 * n + 2
    power = matrix.copy()
    for m in range(1, bound + 1):
        if (power > 0).all():
            logger.debug(f"Built {n}-symbol shift, aperiodicity power {m}")
            return Shift(transition=matrix, aperiodicity_power=m)
        power = np.minimum(power @ matrix, 1)
    raise NotAperiodic(f"No power up to {bound} of the transition matrix is strictly positive")


@dataclass(frozen=True)
class MetricConstant:
    value: float

    def __post_init__(self):
        if not 0.0 < self.value < 1.0:
            raise PreconditionViolated(f"Metric constant must lie in (0, 1), got {self.value}")

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class TwoSidedPoint:
    left_cycle: Word
    core: Word
    right_cycle: Word
    offset: int = 0

    @classmethod
    def periodic(cls, word: Sequence[int]) -> "TwoSidedPoint":
        word = tuple(word)
        return cls(word, (), word)

    def symbol(self, i: int) -> int:
        p = self.offset + i
        if 0 <= p < len(self.core):
            return self.core[p]
        if p >= len(self.core):
            return self.right_cycle[(p - len(self.core)) % len(self.right_cycle)]
        return self.left_cycle[p % len(self.left_cycle)]

    def symbols(self, start: int, stop: int) -> Word:
        return tuple(self.symbol(i) for i in range(start, stop))

    def future(self, n: int) -> Word:
        return self.symbols(0, n)

    def shifted(self, n: int = 1) -> "TwoSidedPoint":
        return TwoSidedPoint(self.left_cycle, self.core, self.right_cycle, self.offset + n)

    @property
    def right_threshold(self) -> int:
        """Indices at or above this read from the right cycle."""
        return len(self.core) - self.offset

    @property
    def left_threshold(self) -> int:
        """Indices below this read from the left cycle."""
        return -self.offset

    def __str__(self) -> str:
        return (f"({word_to_str(self.left_cycle)})^∞ {word_to_str(self.core)} "
                f"({word_to_str(self.right_cycle)})^∞ @{self.offset}")


def _right_tail(x: TwoSidedPoint, y: TwoSidedPoint) -> Tuple[int, int]:
    start = max(x.right_threshold, y.right_threshold)
    return start, math.lcm(len(x.right_cycle), len(y.right_cycle))


def _left_tail(x: TwoSidedPoint, y: TwoSidedPoint) -> Tuple[int, int]:
    stop = min(x.left_threshold, y.left_threshold) - 1
    return stop, math.lcm(len(x.left_cycle), len(y.left_cycle))


def right_tails_agree(x: TwoSidedPoint, y: TwoSidedPoint) -> bool:
    start, period = _right_tail(x, y)
    return all(x.symbol(i) == y.symbol(i) for i in range(start, start + period))


def left_tails_agree(x: TwoSidedPoint, y: TwoSidedPoint) -> bool:
    stop, period = _left_tail(x, y)
    return all(x.symbol(i) == y.symbol(i) for i in range(stop - period + 1, stop + 1))


def last_difference(x: TwoSidedPoint, y: TwoSidedPoint) -> Optional[int]:
    """Largest index where x and y differ; None if they are equal. Requires y ∈ W^s(x)."""
    if not right_tails_agree(x, y):
        raise NotOnSameLeaf(f"{y} is not on the stable leaf of {x}")
    start, _ = _right_tail(x, y)
    stop, period = _left_tail(x, y)
    for i in range(start - 1, stop - period, -1):
        if x.symbol(i) != y.symbol(i):
            return i
    return None


def first_difference(x: TwoSidedPoint, y: TwoSidedPoint) -> Optional[int]:
    """Smallest index where x and y differ; None if they are equal. Requires y ∈ W^u(x)."""
    if not left_tails_agree(x, y):
        raise NotOnSameLeaf(f"{y} is not on the unstable leaf of {x}")
    stop, _ = _left_tail(x, y)
    start, period = _right_tail(x, y)
    for i in range(stop + 1, start + period):
        if x.symbol(i) != y.symbol(i):
            return i
    return None


def agreement_index(x: TwoSidedPoint, y: TwoSidedPoint) -> Optional[int]:
    """N(x, y) = min{|i| : x_i ≠ y_i}, or None when the points are equal."""
    start, rperiod = _right_tail(x, y)
    stop, lperiod = _left_tail(x, y)
    reach = max(abs(start) + rperiod, abs(stop) + lperiod) + 1
    for n in range(reach + 1):
        if x.symbol(n) != y.symbol(n) or x.symbol(-n) != y.symbol(-n):
            return n
    return None


def same_point(x: TwoSidedPoint, y: TwoSidedPoint) -> bool:
    return agreement_index(x, y) is None


def d_lambda(x: TwoSidedPoint, y: TwoSidedPoint, lam: MetricConstant) -> float:
    n = agreement_index(x, y)
    return 0.0 if n is None else lam.value ** n


def on_stable_leaf(x: TwoSidedPoint, y: TwoSidedPoint, n: Optional[int] = None) -> bool:
    """y ∈ W^s(x), or y ∈ W^s_n(x) (agreement for all i ≥ n) when n is given."""
    if not right_tails_agree(x, y):
        return False
    if n is None:
        return True
    last = last_difference(x, y)
    return last is None or last < n


def on_unstable_leaf(x: TwoSidedPoint, y: TwoSidedPoint, n: Optional[int] = None) -> bool:
    """y ∈ W^u(x), or y ∈ W^u_n(x) (agreement for all i ≤ −n) when n is given."""
    if not left_tails_agree(x, y):
        return False
    if n is None:
        return True
    first = first_difference(x, y)
    return first is None or first > -n


@dataclass(frozen=True)
class OrbitRecord:
    necklace: Word
    n: int
    r_period: Optional[float] = None
    holonomy: Optional[Tuple[float, ...]] = None


def _lyndon_words_from(shift: Shift, first: int, n_max: int) -> List[Word]:
    """Cyclically admissible Lyndon words of length ≤ n_max starting with ``first``."""
    k = shift.n_symbols
    found = []
    w = [first]
    while w and w[0] == first:
        if shift.is_cyclic(w):
            found.append(tuple(w))
        m = len(w)
        while len(w) < n_max:
            w.append(w[-m])
        while w and w[-1] == k - 1:
            w.pop()
        if w:
            w[-1] += 1
    return found


def enumerate_prime_orbits(shift: Shift, n_max: int, threads: Optional[int] = None) -> List[OrbitRecord]:
    """Every primitive admissible necklace of length ≤ n_max, sorted by (length, necklace)."""
    if n_max < 1:
        raise PreconditionViolated(f"n_max must be positive, got {n_max}")
    parts = ordered_map(lambda a: _lyndon_words_from(shift, a, n_max), range(shift.n_symbols), threads)
    necklaces = sorted((w for part in parts for w in part), key=lambda w: (len(w), w))
    logger.debug(f"Enumerated {len(necklaces)} prime orbits up to length {n_max}")
    return [OrbitRecord(necklace=w, n=len(w)) for w in necklaces]


def canonical_rotation(word: Sequence[int]) -> Word:
    word = tuple(word)
    return min(word[i:] + word[:i] for i in range(len(word)))


def word_lookup(shift: Shift, depth: int) -> np.ndarray:
    """Base-N code of a depth-word ↦ its index in ``shift.words(depth)``; −1 for inadmissible codes."""
    n = shift.n_symbols
    lookup = np.full(n ** depth, -1, dtype=np.int64)
    for i, w in enumerate(shift.words(depth)):
        code = 0
        for a in w:
            code = code * n + a
        lookup[code] = i
    return lookup


def window_indices(shift: Shift, symbols: np.ndarray, start, depth: int,
                   lookup: Optional[np.ndarray] = None) -> np.ndarray:
    """Index in ``shift.words(depth)`` of symbols[i, start_i : start_i + depth] for every row i."""
    if lookup is None:
        lookup = word_lookup(shift, depth)
    start = np.broadcast_to(np.asarray(start), (len(symbols),))
    windows = np.take_along_axis(symbols, start[:, None] + np.arange(depth), axis=1)
    code = np.zeros(len(symbols), dtype=np.int64)
    for col in windows.T:
        code = code * shift.n_symbols + col
    return lookup[code]
