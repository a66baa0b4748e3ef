"""Twisted transfer operators L_{s,π} as exact block matrices, the b_π norm, and the
Lasota–Yorke and Dolgopyat measurements built on them.

Vectors are arrays of shape (n_states, dim_π) or (n_states, dim_π, n_cols); the operator acts
on every column.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .cocycle import SkewSystem, birkhoff_word
from .errors import IncompatibleDepths, PreconditionViolated
from .groups import Irrep
from .parallel import ordered_map, spawn_seeds
from .thermo import BlockCode, GibbsData, LocallyConstantFn, block_code, block_depth, lipschitz_seminorm

logger = logging.getLogger(__name__)


class BpiParams(BaseModel):
    C15: float = Field(default=1.0, gt=0, description="Weight of the representation scale in b_π")
    C18: float = Field(default=1.0, ge=1, description="Lipschitz damping in the b_π norm")

    @classmethod
    def for_irreps(cls, irreps: Sequence[Irrep], floor: float = 10.0, C18: float = 1.0) -> "BpiParams":
        """C15 chosen so that b_π ≥ ``floor`` for every listed π ≠ 1 at b = 0."""
        scales = [pi.weight_norm ** (1 + pi.group.m_G / 2) for pi in irreps if not pi.is_trivial]
        return cls(C15=floor / min(scales), C18=C18)


@dataclass(frozen=True, eq=False)
class TwistedOperator:
    sys: SkewSystem
    pi: Irrep
    s: complex
    code: BlockCode
    matrix: np.ndarray

    @property
    def n_states(self) -> int:
        return self.code.n_states

    def apply(self, h: np.ndarray, n: int = 1) -> np.ndarray:
        h = np.asarray(h, dtype=complex)
        flat = h.reshape(self.n_states * self.pi.dim, -1)
        for _ in range(n):
            flat = self.matrix @ flat
        return flat.reshape(h.shape)

    def power(self, n: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, n)

    def as_function(self, h: np.ndarray) -> LocallyConstantFn:
        return LocallyConstantFn(self.sys.shift, self.code.m, np.asarray(h, dtype=complex), "vector")


def build_twisted(sys: SkewSystem, pi: Irrep, s: complex, gibbs: Optional[GibbsData] = None,
                  potential: Optional[LocallyConstantFn] = None) -> TwistedOperator:
    """Block (x-state, y-state) = e^{φ(y) − s r(y)} π(Θ(y)) on every admissible preimage y of x.

    φ is the normalized potential of ``gibbs``, or ``potential`` as given when no Gibbs data is passed.
    """
    pi.check_group(sys.group)
    weight = gibbs.normalized_potential if gibbs is not None else potential
    if weight is None:
        raise PreconditionViolated("Twisted operator needs Gibbs data or a potential")
    m = block_depth(weight.depth, sys.roof.depth, sys.cocycle.depth)
    code = block_code(sys.shift, m)
    phi = weight.on_words(m + 1)
    roof = sys.roof.on_words(m + 1)
    theta = sys.cocycle.on_words(m + 1)
    if not (len(phi) == len(roof) == len(theta) == len(code.edges)):
        raise IncompatibleDepths(f"Edge tables disagree with block depth {m}")
    weights = np.exp(phi - complex(s) * roof)
    blocks = weights[:, None, None] * pi.matrix(theta)
    d = pi.dim
    big = np.zeros((code.n_states, d, code.n_states, d), dtype=complex)
    big[code.dst, :, code.src, :] = blocks
    return TwistedOperator(sys, pi, complex(s), code, big.reshape(code.n_states * d, code.n_states * d))


def periodic_orbit_sum(sys: SkewSystem, pi: Irrep, s: complex, n: int, potential: LocallyConstantFn) -> complex:
    """Σ_{σⁿx = x} ξ_π(Θ_n(x)) e^{φ_n(x) − s r_n(x)} by direct enumeration."""
    shift = sys.shift
    k = potential.depth
    total = 0j
    for word in shift.words(n):
        if not shift.is_cyclic(word):
            continue
        r_n, theta_n = birkhoff_word(sys, word)
        cyc = word * (k // n + 2)
        phi_n = sum(float(potential.value(cyc[i:i + k])) for i in range(n))
        total += complex(pi.character(theta_n)) * np.exp(phi_n - s * r_n)
    return total


def block_sup_norm(matrix: np.ndarray, n_states: int, dim: int) -> float:
    """max_x Σ_y ‖block(x, y)‖_op, the induced norm for the sup over states of vector norms."""
    blocks = matrix.reshape(n_states, dim, n_states, dim).transpose(0, 2, 1, 3)
    ops = np.linalg.svd(blocks, compute_uv=False)[..., 0] if dim > 1 else np.abs(blocks[..., 0, 0])
    return float(ops.sum(axis=1).max())


def bpi(b: float, pi: Irrep, params: BpiParams) -> float:
    pi.require_nontrivial()
    return abs(b) + params.C15 * pi.weight_norm ** (1 + pi.group.m_G / 2)


def sup_norm(h: np.ndarray) -> float:
    h = np.asarray(h)
    return float(np.linalg.norm(h.reshape(h.shape[0], -1), axis=1).max())


def bpi_norm(h: LocallyConstantFn, b: float, pi: Irrep, params: BpiParams, lam) -> float:
    """‖h‖_{b_π} = max{‖h‖_∞, |h|_Lip / (C18 b_π)} for a locally constant H_π-valued h."""
    scale = params.C18 * bpi(b, pi, params)
    return max(h.sup_norm(), lipschitz_seminorm(h, lam) / scale)


def lasota_yorke_constant(sys: SkewSystem, gibbs: GibbsData, pi: Irrep, b: float, params: BpiParams) -> float:
    """Explicit C with |L^n h|_Lip ≤ C b_π ‖h‖_∞ + λⁿ |h|_Lip, from the input seminorms."""
    lam = sys.lam.value
    geom = lam / (1 - lam)
    phi_lip = lipschitz_seminorm(gibbs.normalized_potential, sys.lam) * geom
    c_phi = phi_lip * math.exp(phi_lip)
    roof_term = abs(b) * lipschitz_seminorm(sys.roof, sys.lam) * geom
    twist_term = pi.weight_norm * lipschitz_seminorm(sys.cocycle, sys.lam) * geom
    total = c_phi + roof_term + twist_term
    if not np.all(sys.shift.transition):
        # points with different first symbols have unrelated preimages: only the 2‖h‖_∞ bound applies
        total = max(total, 2.0)
    return total / bpi(b, pi, params)


@dataclass(frozen=True)
class LasotaYorkeFit:
    C16: float
    witness_index: int
    witness_n: int
    explicit: float


def _witnesses(n_states: int, dim: int, trials: int, rng: np.random.Generator) -> List[np.ndarray]:
    basis = [np.tile(np.eye(dim)[a], (n_states, 1)).astype(complex) for a in range(dim)]
    randoms = [rng.normal(size=(n_states, dim)) + 1j * rng.normal(size=(n_states, dim)) for _ in range(trials)]
    return basis + randoms


def _aligned_witnesses(power: np.ndarray, n_states: int, dim: int) -> List[np.ndarray]:
    """One unit-sup witness per state x whose image at x attains Σ_y ‖block(x, y)‖_op when dim = 1."""
    blocks = power.reshape(n_states, dim, n_states, dim).transpose(0, 2, 1, 3)
    out = []
    for x in range(n_states):
        u, s, vh = np.linalg.svd(blocks[x])
        ref = u[int(np.argmax(s[:, 0]))][:, 0]
        h = vh[:, 0, :].conj()
        # phase each top singular direction so its contribution at x lines up with the largest block
        phases = np.einsum("i,yij,yj->y", ref.conj(), blocks[x], h)
        h = h * np.exp(-1j * np.angle(phases))[:, None]
        out.append(h.astype(complex))
    return out


def lasota_yorke_probe(sys: SkewSystem, gibbs: GibbsData, pi: Irrep, b: float, n_list: Sequence[int],
                       trials: int, seed: int, params: Optional[BpiParams] = None) -> LasotaYorkeFit:
    """Smallest C with |L_{ib,π}ⁿh|_Lip ≤ C b_π‖h‖_∞ + λⁿ|h|_Lip over the witnesses and n ∈ n_list."""
    pi.require_nontrivial()
    params = params or BpiParams()
    op = build_twisted(sys, pi, 1j * b, gibbs)
    scale = bpi(b, pi, params)
    lam = sys.lam.value
    rng = np.random.default_rng(seed)
    best, where = 0.0, (0, 0)
    for idx, h in enumerate(_witnesses(op.n_states, pi.dim, trials, rng)):
        h_lip = lipschitz_seminorm(op.as_function(h), sys.lam)
        for n in n_list:
            image = op.apply(h, n)
            excess = lipschitz_seminorm(op.as_function(image), sys.lam) - lam ** n * h_lip
            candidate = excess / (scale * sup_norm(h))
            if candidate > best:
                best, where = candidate, (idx, n)
    explicit = lasota_yorke_constant(sys, gibbs, pi, b, params)
    logger.debug(f"Lasota-Yorke fit for {pi.label} at b={b}: C16={best:.6g} (explicit {explicit:.6g})")
    return LasotaYorkeFit(best, where[0], where[1], explicit)


@dataclass(frozen=True)
class ContractionRecord:
    pi_label: str
    weight_norm: float
    b: float
    b_pi: float
    n: int
    kappa: float
    matrix_norm_proxy: float
    fitted_C: float


def _exponent(kappa: float, b_pi: float) -> float:
    if kappa >= 1.0:
        return math.inf
    return -math.log(1.0 - kappa) / math.log(b_pi)


def _contraction(sys: SkewSystem, gibbs: GibbsData, pi: Irrep, b: float, params: BpiParams, C25: float,
                 trials: int, seed_seq) -> ContractionRecord:
    scale = bpi(b, pi, params)
    n = max(1, math.ceil(C25 * math.log(scale)))
    op = build_twisted(sys, pi, 1j * b, gibbs)
    power = op.power(n)
    rng = np.random.default_rng(seed_seq)
    kappa = 0.0
    witnesses = _witnesses(op.n_states, pi.dim, trials, rng) + _aligned_witnesses(power, op.n_states, pi.dim)
    for h in witnesses:
        h = h / bpi_norm(op.as_function(h), b, pi, params, sys.lam)
        image = (power @ h.reshape(-1)).reshape(h.shape)
        kappa = max(kappa, bpi_norm(op.as_function(image), b, pi, params, sys.lam))
    proxy = block_sup_norm(power, op.n_states, pi.dim)
    return ContractionRecord(str(pi.label), pi.weight_norm, float(b), scale, n, kappa, proxy,
                             _exponent(kappa, scale))


def dolgopyat_scan(sys: SkewSystem, gibbs: GibbsData, pi_list: Sequence[Irrep], b_grid: Sequence[float],
                   params: BpiParams, C25: float = 1.0, trials: int = 32, seed: int = 0,
                   threads: Optional[int] = None) -> Tuple[List[ContractionRecord], float]:
    """κ(π, b) = max over witnesses of ‖L_{ib,π}ⁿh‖_{b_π}, n = ⌈C25 log b_π⌉, for every grid cell.

    Returns the records and the fitted exponent Ĉ with κ ≤ 1 − b_π^{−Ĉ} on every cell.
    """
    for pi in pi_list:
        pi.require_nontrivial()
    cells = [(pi, b) for pi in pi_list for b in b_grid]
    seeds = spawn_seeds(seed, len(cells))
    records = ordered_map(
        lambda item: _contraction(sys, gibbs, item[0][0], item[0][1], params, C25, trials, item[1]),
        list(zip(cells, seeds)), threads)
    fitted = max((r.fitted_C for r in records), default=0.0)
    logger.info(f"Contraction scan over {len(cells)} cells: max kappa "
                f"{max((r.kappa for r in records), default=0.0):.6g}, fitted exponent {fitted:.6g}")
    return records, fitted


def cancellation_check(v1: np.ndarray, v2: np.ndarray, eps: float) -> Tuple[bool, float]:
    """Check ‖v1 + v2‖ ≤ (1 − ε²/4)‖v1‖ + ‖v2‖ and return (holds, slack)."""
    v1, v2 = np.asarray(v1), np.asarray(v2)
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if n1 == 0 or n2 == 0:
        raise PreconditionViolated("Cancellation needs nonzero vectors")
    if n1 > n2 * (1 + 1e-12):
        raise PreconditionViolated("Cancellation needs ‖v1‖ ≤ ‖v2‖")
    if np.linalg.norm(v1 / n1 - v2 / n2) < eps * (1 - 1e-12):
        raise PreconditionViolated(f"Directions of v1 and v2 are closer than ε={eps}")
    slack = float((1 - eps ** 2 / 4) * n1 + n2 - np.linalg.norm(v1 + v2))
    return slack >= -1e-12, slack


def perturbation_bound(sys: SkewSystem, gibbs: GibbsData, pi: Irrep, a: float, b: float) -> Tuple[float, float]:
    """(‖L_{a+ib,π} − L_{ib,π}‖, (e^{|a| max r} − 1)‖L_{ib,π}‖) in the block sup norm."""
    base = build_twisted(sys, pi, 1j * b, gibbs)
    moved = build_twisted(sys, pi, a + 1j * b, gibbs)
    diff = block_sup_norm(moved.matrix - base.matrix, base.n_states, pi.dim)
    bound = (math.exp(abs(a) * sys.max_roof) - 1) * block_sup_norm(base.matrix, base.n_states, pi.dim)
    return diff, bound
