"""Compact connected Lie groups: tori, SU(2) and SO(3).

Elements are numpy arrays: angle vectors in [0, 2π)^d for tori and unit quaternions
(w, x, y, z) for SU(2) and SO(3), the latter read modulo ±1. Every operation accepts a
leading batch axis.

Weight conventions: |λ_π| is |m|₂ for the torus character e^{i m·θ} and 2j for spin j.
Spin-j matrices act on the basis m = j, j-1, …, -j.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.special import eval_chebyu, roots_legendre

from .errors import ConfigInvalid, IncompatibleGroup, QuadratureCutoffExceeded, TrivialRep
from .labels import IrrepLabel, SO3Label, SU2Label, TorusLabel, parse_label

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


class CompactGroup(ABC):
    kind: str = ""
    element_size: int = 0

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @property
    @abstractmethod
    def rank(self) -> int: ...

    @property
    def m_G(self) -> int:
        return (self.dim - self.rank) // 2

    @abstractmethod
    def element(self, value) -> np.ndarray: ...

    @abstractmethod
    def identity(self) -> np.ndarray: ...

    @abstractmethod
    def compose(self, a: np.ndarray, b: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def inverse(self, a: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def random(self, n: int, rng: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def conjugacy_invariant(self, g: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def irreps_up_to(self, weight_cutoff: float) -> List["Irrep"]: ...

    @abstractmethod
    def haar_quadrature(self, order: int) -> "HaarQuadrature": ...

    @abstractmethod
    def quadrature_order(self, total_weight: float) -> int:
        """Smallest order whose rule integrates products of coefficients up to ``total_weight``."""

    @abstractmethod
    def epsilon_net(self, eps: float) -> np.ndarray: ...

    def conjugate(self, h: np.ndarray, g: np.ndarray) -> np.ndarray:
        return self.compose(self.compose(h, g), self.inverse(h))

    def check(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape[-1:] != (self.element_size,):
            raise IncompatibleGroup(f"Element of shape {g.shape} does not belong to {self}")
        return g

    def irrep(self, label) -> "Irrep":
        if isinstance(label, str):
            try:
                label = parse_label(label)
            except ValueError as e:
                raise ConfigInvalid(str(e))
        return self._irrep(label)

    @abstractmethod
    def _irrep(self, label: IrrepLabel) -> "Irrep": ...

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and repr(self) == repr(other)

    def __hash__(self) -> int:
        return hash(repr(self))


@dataclass(frozen=True, eq=False)
class Irrep:
    group: CompactGroup
    label: IrrepLabel
    dim: int
    weight_norm: float

    @property
    def is_trivial(self) -> bool:
        return self.label.is_trivial

    def require_nontrivial(self) -> "Irrep":
        if self.is_trivial:
            raise TrivialRep(f"Operation requires a nontrivial representation, got {self.label}")
        return self

    def check_group(self, group: CompactGroup) -> "Irrep":
        if group != self.group:
            raise IncompatibleGroup(f"Irrep {self.label} is not a representation of {group}")
        return self

    def matrix(self, g: np.ndarray) -> np.ndarray:
        g = self.group.check(g)
        if isinstance(self.label, TorusLabel):
            phase = np.exp(1j * (g @ np.asarray(self.label.modes, dtype=float)))
            return phase[..., None, None]
        return wigner_matrix(self.label.two_j, g)

    def character(self, g: np.ndarray) -> np.ndarray:
        return self.character_from_invariant(self.group.conjugacy_invariant(self.group.check(g)))

    def character_from_invariant(self, invariant: np.ndarray) -> np.ndarray:
        invariant = np.asarray(invariant, dtype=float)
        if isinstance(self.label, TorusLabel):
            return np.exp(1j * (invariant @ np.asarray(self.label.modes, dtype=float)))
        angle = invariant[..., 0]
        half = angle / 2 if isinstance(self.label, SO3Label) else angle
        return eval_chebyu(self.label.two_j, np.cos(half)).astype(complex)

    def eigenphases(self, invariant: np.ndarray) -> np.ndarray:
        """Eigenvalues of π(g) on the class with the given invariant."""
        invariant = np.asarray(invariant, dtype=float)
        if isinstance(self.label, TorusLabel):
            return np.exp(1j * (invariant @ np.asarray(self.label.modes, dtype=float)))[..., None]
        half = invariant[..., 0] / 2 if isinstance(self.label, SO3Label) else invariant[..., 0]
        # spin-j eigenvalues e^{i·2m·φ}, φ the quaternion half-angle
        ms = np.arange(self.label.two_j, -self.label.two_j - 1, -2)
        return np.exp(1j * half[..., None] * ms)

    def __repr__(self) -> str:
        return f"<Irrep {self.label} dim={self.dim}>"


def quaternion_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = np.moveaxis(np.asarray(a), -1, 0)
    w2, x2, y2, z2 = np.moveaxis(np.asarray(b), -1, 0)
    out = np.stack([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ], axis=-1)
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def axis_angle(axis: Sequence[float], angle: float) -> np.ndarray:
    """Unit quaternion of the rotation by ``angle`` about ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


def euler_zyz(alpha, beta, gamma) -> np.ndarray:
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, beta, gamma)))
    zero = np.zeros_like(alpha)
    qa = np.stack([np.cos(alpha / 2), zero, zero, np.sin(alpha / 2)], axis=-1)
    qb = np.stack([np.cos(beta / 2), zero, np.sin(beta / 2), zero], axis=-1)
    qc = np.stack([np.cos(gamma / 2), zero, zero, np.sin(gamma / 2)], axis=-1)
    return quaternion_multiply(quaternion_multiply(qa, qb), qc)


@lru_cache(maxsize=None)
def _wigner_terms(two_j: int):
    """(row p', column p, coefficient, exponents of a, b, c, d) for the symmetric-power expansion."""
    n = two_j
    fact = [math.factorial(i) for i in range(n + 1)]
    terms = []
    for pp in range(n + 1):
        for p in range(n + 1):
            norm = math.sqrt(fact[pp] * fact[n - pp] / (fact[p] * fact[n - p]))
            for k in range(max(0, p + pp - n), min(p, pp) + 1):
                coeff = norm * math.comb(p, k) * math.comb(n - p, pp - k)
                terms.append((pp, p, coeff, k, pp - k, p - k, n - p - pp + k))
    return terms


def wigner_matrix(two_j: int, q: np.ndarray) -> np.ndarray:
    """Spin-j matrix of the unit quaternion q, as the action on degree-2j binary forms."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    a, b, c, d = w - 1j * z, -y - 1j * x, y - 1j * x, w + 1j * z
    n = two_j
    powers = [np.stack([v ** k for k in range(n + 1)]) for v in (a, b, c, d)]
    out = np.zeros(np.shape(w) + (n + 1, n + 1), dtype=complex)
    for pp, p, coeff, ka, kb, kc, kd in _wigner_terms(n):
        out[..., pp, p] += coeff * powers[0][ka] * powers[1][kb] * powers[2][kc] * powers[3][kd]
    return out[..., ::-1, ::-1]


@dataclass(frozen=True, eq=False)
class HaarQuadrature:
    group: CompactGroup
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    exact_weight: float

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> complex:
        return np.tensordot(self.weights, values, axes=(0, 0))


class Torus(CompactGroup):
    kind = "torus"

    def __init__(self, d: int = 1):
        if d < 1:
            raise ConfigInvalid(f"Torus dimension must be positive, got {d}")
        self.d = d
        self.element_size = d

    @property
    def dim(self) -> int:
        return self.d

    @property
    def rank(self) -> int:
        return self.d

    def element(self, value) -> np.ndarray:
        angles = np.atleast_1d(np.asarray(value, dtype=float))
        if angles.shape != (self.d,):
            raise ConfigInvalid(f"Torus T^{self.d} elements need {self.d} angles, got {value}")
        return np.mod(angles, TWO_PI)

    def identity(self) -> np.ndarray:
        return np.zeros(self.d)

    def compose(self, a, b):
        return np.mod(np.asarray(a) + np.asarray(b), TWO_PI)

    def inverse(self, a):
        return np.mod(-np.asarray(a), TWO_PI)

    def distance(self, a, b):
        delta = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
        delta = np.minimum(delta, TWO_PI - delta)
        return np.linalg.norm(delta, axis=-1)

    def random(self, n, rng):
        return rng.uniform(0.0, TWO_PI, size=(n, self.d))

    def conjugacy_invariant(self, g):
        return np.mod(np.asarray(g, dtype=float), TWO_PI)

    def _irrep(self, label):
        if not isinstance(label, TorusLabel) or len(label.modes) != self.d:
            raise IncompatibleGroup(f"{label} is not an irrep label of T^{self.d}")
        return Irrep(self, label, 1, float(np.linalg.norm(label.modes)))

    def irreps_up_to(self, weight_cutoff):
        k = int(math.floor(weight_cutoff))
        labels = [TorusLabel(m) for m in product(range(-k, k + 1), repeat=self.d)
                  if sum(v * v for v in m) <= weight_cutoff ** 2 + 1e-12]
        return [self._irrep(label) for label in sorted(labels)]

    def haar_quadrature(self, order):
        axis = TWO_PI * np.arange(order) / order
        nodes = np.array(list(product(axis, repeat=self.d)))
        weights = np.full(len(nodes), 1.0 / len(nodes))
        # trapezoid is exact for modes with |m|_∞ < order
        return HaarQuadrature(self, order, nodes, weights, float(order - 1))

    def quadrature_order(self, total_weight):
        return int(math.floor(total_weight)) + 1

    def epsilon_net(self, eps):
        step = 2 * eps / math.sqrt(self.d)
        n = max(1, math.ceil(TWO_PI / step))
        axis = TWO_PI * (np.arange(n) + 0.5) / n
        return np.array(list(product(axis, repeat=self.d)))

    def __repr__(self):
        return f"Torus(d={self.d})"


class SU2(CompactGroup):
    kind = "su2"
    element_size = 4
    label_cls = SU2Label

    @property
    def dim(self) -> int:
        return 3

    @property
    def rank(self) -> int:
        return 1

    def element(self, value) -> np.ndarray:
        q = np.asarray(value, dtype=float)
        norm = np.linalg.norm(q) if q.shape == (4,) else 0.0
        if norm < 1e-12:
            raise ConfigInvalid(f"{self.kind} elements are nonzero quaternions [w, x, y, z], got {value}")
        return q / norm

    def identity(self) -> np.ndarray:
        return np.array([1.0, 0.0, 0.0, 0.0])

    def compose(self, a, b):
        return quaternion_multiply(a, b)

    def inverse(self, a):
        return np.asarray(a) * np.array([1.0, -1.0, -1.0, -1.0])

    def distance(self, a, b):
        a, b = np.asarray(a), np.asarray(b)
        return 2 * np.arctan2(np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1))

    def random(self, n, rng):
        q = rng.normal(size=(n, 4))
        return q / np.linalg.norm(q, axis=-1, keepdims=True)

    def conjugacy_invariant(self, g):
        w = np.clip(np.asarray(g, dtype=float)[..., 0], -1.0, 1.0)
        return np.arccos(w)[..., None]

    def _irrep(self, label):
        if type(label) is not self.label_cls:
            raise IncompatibleGroup(f"{label} is not an irrep label of {self.kind}")
        return Irrep(self, label, label.two_j + 1, float(label.two_j))

    def irreps_up_to(self, weight_cutoff):
        step = 2 if self.kind == "so3" else 1
        return [self._irrep(self.label_cls(two_j)) for two_j in range(0, int(math.floor(weight_cutoff)) + 1, step)]

    def haar_quadrature(self, order):
        # ZYZ Euler angles with α, γ ∈ [0, 4π); Gauss-Legendre in cos β
        n_circle = 4 * order
        circle = 2 * TWO_PI * np.arange(n_circle) / n_circle
        x, wx = roots_legendre(order)
        alpha, beta, gamma = np.meshgrid(circle, np.arccos(x), circle, indexing="ij")
        weights = np.broadcast_to((wx / 2)[None, :, None], alpha.shape) / n_circle ** 2
        nodes = euler_zyz(alpha.ravel(), beta.ravel(), gamma.ravel())
        return HaarQuadrature(self, order, nodes, weights.ravel().copy(), float(4 * order - 2))

    def quadrature_order(self, total_weight):
        return max(1, math.ceil((total_weight + 2) / 4))

    def epsilon_net(self, eps):
        # nearest grid point is within h/2 in each Euler angle, so within 3h/4 in SU(2)
        step = 4 * eps / 3
        grids = [(np.arange(n) + 0.5) * span / n
                 for span in (TWO_PI, np.pi, 2 * TWO_PI)
                 for n in [max(1, math.ceil(span / step))]]
        alpha, beta, gamma = np.meshgrid(*grids, indexing="ij")
        return euler_zyz(alpha.ravel(), beta.ravel(), gamma.ravel())

    def __repr__(self):
        return "SU2()"


class SO3(SU2):
    kind = "so3"
    label_cls = SO3Label

    def distance(self, a, b):
        a, b = np.asarray(a), np.asarray(b)
        return np.minimum(super().distance(a, b), super().distance(a, -b))

    def conjugacy_invariant(self, g):
        w = np.clip(np.abs(np.asarray(g, dtype=float)[..., 0]), 0.0, 1.0)
        return (2 * np.arccos(w))[..., None]

    def __repr__(self):
        return "SO3()"


def make_group(kind: str, d: Optional[int] = None) -> CompactGroup:
    kind = kind.lower()
    if kind == "torus":
        return Torus(d or 1)
    if kind == "su2":
        return SU2()
    if kind == "so3":
        return SO3()
    raise ConfigInvalid(f"Unknown group kind '{kind}', expected torus, su2 or so3")


def haar_quadrature(group: CompactGroup, order: int) -> HaarQuadrature:
    if order < 1:
        raise ConfigInvalid(f"Quadrature order must be positive, got {order}")
    return group.haar_quadrature(order)


def irreps_up_to(group: CompactGroup, weight_cutoff: float) -> List[Irrep]:
    if weight_cutoff <= 0:
        raise ConfigInvalid(f"Weight cutoff must be positive, got {weight_cutoff}")
    return group.irreps_up_to(weight_cutoff)


def rep_matrix(pi: Irrep, g: np.ndarray) -> np.ndarray:
    return pi.matrix(g)


def character(pi: Irrep, g: np.ndarray) -> np.ndarray:
    return pi.character(g)


def conjugacy_invariant(group: CompactGroup, g: np.ndarray) -> np.ndarray:
    return group.conjugacy_invariant(group.check(g))


def _check_exactness(quad: HaarQuadrature, pi: Irrep, band: float, strict: bool):
    if pi.weight_norm + band > quad.exact_weight + 1e-12:
        message = (f"Quadrature of order {quad.order} is exact up to total weight {quad.exact_weight}, "
                   f"requested {pi.weight_norm + band} for {pi.label}")
        if strict:
            raise QuadratureCutoffExceeded(message)
        logger.warning(message)


def fourier_coeff(values: np.ndarray, pi: Irrep, quad: HaarQuadrature, band: float = 0.0,
                  strict: bool = False) -> np.ndarray:
    """F̂(π) = ∫ F(g) π(g)^* dg from samples of F on the quadrature nodes."""
    pi.check_group(quad.group)
    _check_exactness(quad, pi, band, strict)
    mats = pi.matrix(quad.nodes)
    weighted = quad.weights * np.asarray(values)
    return np.einsum("k,kba->ab", weighted, mats.conj())


def peter_weyl_truncate(values: np.ndarray, quad: HaarQuadrature, cutoff: float,
                        at: Optional[np.ndarray] = None, band: float = 0.0, strict: bool = False) -> np.ndarray:
    """Σ_{|λ_π| ≤ cutoff} dim_π Tr(F̂(π) π(g)) evaluated at ``at`` (default: the nodes)."""
    points = quad.nodes if at is None else at
    total = np.zeros(len(points), dtype=complex)
    for pi in quad.group.irreps_up_to(cutoff):
        coeff = fourier_coeff(values, pi, quad, band=band, strict=strict)
        total += pi.dim * np.einsum("ab,kba->k", coeff, pi.matrix(points))
    return total


def class_coefficient(values: np.ndarray, pi: Irrep, quad: HaarQuadrature) -> complex:
    """f_π = ∫ F conj(ξ_π) for a class function F."""
    return complex(quad.integrate(np.asarray(values) * np.conj(pi.character(quad.nodes))))


def epsilon_net(group: CompactGroup, eps: float) -> np.ndarray:
    if eps <= 0:
        raise ConfigInvalid(f"Net radius must be positive, got {eps}")
    return group.epsilon_net(eps)


def lipschitz_fit(group: CompactGroup, pi: Irrep, n_pairs: int, seed: int) -> float:
    """Smallest C with ‖π(g) − π(g')‖_op ≤ C |λ_π|^{1+m_G/2} d_G(g, g') over sampled pairs."""
    pi.require_nontrivial()
    rng = np.random.default_rng(seed)
    g = group.random(n_pairs, rng)
    near = group.random(n_pairs, rng)
    if group.kind == "torus":
        nudge = rng.normal(scale=0.05, size=g.shape)
    else:
        tangent = rng.normal(size=(n_pairs, 3))
        tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
        angles = rng.uniform(0.0, 0.1, size=n_pairs)
        nudge = np.column_stack([np.cos(angles / 2), np.sin(angles / 2)[:, None] * tangent])
    # half the pairs are close, half are independent
    g2 = np.where((np.arange(n_pairs) % 2 == 0)[:, None], group.compose(g, nudge), near)
    dist = group.distance(g, g2)
    keep = dist > 1e-12
    diff = pi.matrix(g[keep]) - pi.matrix(g2[keep])
    op = np.linalg.svd(diff, compute_uv=False)[..., 0]
    scale = pi.weight_norm ** (1 + group.m_G / 2)
    return float(np.max(op / (scale * dist[keep])))


def weight_zeta_partial_sums(group: CompactGroup, x: float, cutoffs: Iterable[float]) -> List[float]:
    """Partial sums Σ_{π ≠ 1, |λ_π| ≤ K} |λ_π|^{-x} for each K."""
    cutoffs = list(cutoffs)
    if group.kind == "torus":
        k = int(max(cutoffs))
        grid = np.indices((2 * k + 1,) * group.d).reshape(group.d, -1).T - k
        norms = np.linalg.norm(grid, axis=1)
        norms = np.sort(norms[norms > 0])
    else:
        step = 2 if group.kind == "so3" else 1
        norms = np.arange(step, int(max(cutoffs)) + 1, step, dtype=float)
    terms = np.cumsum(norms ** -x)
    out = []
    for cut in cutoffs:
        count = int(np.searchsorted(norms, cut + 1e-12, side="right"))
        out.append(float(terms[count - 1]) if count else 0.0)
    return out
