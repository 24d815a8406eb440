"""Discrete RIS phase design by penalty-alternating SCA.

Three nested loops maximize the minimum pairwise distance
``Delta_k(v) = ||a_k + B_k v||^2`` over discrete unit-modulus phases:

* outer: grow the penalty weight ``rho`` that couples the continuous
  reflection vector ``v`` to its discrete copy ``u``;
* middle: alternate an SCA solve for ``v`` with the nearest-point
  projection of ``v`` onto the phase alphabet to get ``u``;
* inner: linearize each convex ``v^H R_k v`` at the current point and solve
  the resulting max-min of affine functions minus ``rho ||v - u||^2``.

By default the continuous iterate is kept in the unit disk, ``|v_l| <= 1``
(``relaxation="disk"``). Without that bound (``relaxation="none"``) the
penalized problem is unbounded whenever ``rho`` is below the pair curvature,
so the starting ``rho`` is then floored just above the smallest curvature.

The best discrete vector found by the loops is then polished by a discrete
single-element ascent (``refine="flip"``): repeatedly apply the one-element
phase change that most increases the true minimum distance. It never lowers
the objective and can be switched off with ``refine="none"``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .maxmin_qp import SubproblemError, solve_maxmin, solve_maxmin_disk
from .rng import RngStream, as_generator


class OptimizerError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Phase alphabet
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscretePhaseVector:
    """Phases stored as alphabet indices: element l has phase 2*pi*index[l]/2**q_bits."""

    indices: np.ndarray
    q_bits: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= 2 ** self.q_bits):
            raise ValueError("alphabet index out of range")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def phases(self) -> np.ndarray:
        return 2.0 * np.pi * self.indices / 2 ** self.q_bits

    @property
    def entries(self) -> np.ndarray:
        return alphabet(self.q_bits)[self.indices]

    def __len__(self):
        return self.indices.size

    def __eq__(self, other):
        if not isinstance(other, DiscretePhaseVector):
            return NotImplemented
        return self.q_bits == other.q_bits and np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash((self.q_bits, self.indices.tobytes()))


def alphabet(q_bits: int) -> np.ndarray:
    """The 2**q_bits unit-modulus reflection coefficients."""
    if q_bits < 1:
        raise ValueError(f"q_bits must be >= 1, got {q_bits}")
    return np.exp(2j * np.pi * np.arange(2 ** q_bits) / 2 ** q_bits)


def project_discrete(v, q_bits: int) -> DiscretePhaseVector:
    """Nearest alphabet phase per element under circular angular distance.

    Amplitudes are discarded; a zero entry maps to phase 0. Ties go to the
    smaller alphabet phase.
    """
    if q_bits < 1:
        raise ValueError(f"q_bits must be >= 1, got {q_bits}")
    size = 2 ** q_bits
    x = np.mod(np.angle(np.asarray(v, dtype=complex).reshape(-1)), 2 * np.pi) * size / (2 * np.pi)
    base = np.floor(x)
    frac = x - base
    lo = base.astype(np.int64) % size
    hi = (lo + 1) % size
    dist_lo, dist_hi = frac, 1.0 - frac
    pick_hi = (dist_hi < dist_lo) | ((dist_hi == dist_lo) & (hi < lo))
    return DiscretePhaseVector(np.where(pick_hi, hi, lo), q_bits)


# ---------------------------------------------------------------------------
# Pair data and surrogates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairData:
    """Quadratic form of ``Delta(v) = ||a + B v||^2 = v^H R v + 2 Re{c v} + m``."""

    pair: tuple[int, int]
    a: np.ndarray
    b_mat: np.ndarray
    r_mat: np.ndarray = field(repr=False)
    c_row: np.ndarray = field(repr=False)
    m: float = 0.0

    def quadratic(self, v) -> float:
        v = np.asarray(v, dtype=complex)
        return float(np.real(np.vdot(v, self.r_mat @ v)) + 2 * np.real(self.c_row @ v) + self.m)

    def delta(self, v) -> float:
        w = self.a + self.b_mat @ np.asarray(v, dtype=complex)
        return float(np.real(np.vdot(w, w)))


@dataclass(frozen=True)
class SurrogateCoefficients:
    """Tangent minorant ``2 Re{c_n v} + m_n`` of a pair's distance."""

    c_n: np.ndarray
    m_n: float

    def value(self, v) -> float:
        return float(2 * np.real(self.c_n @ np.asarray(v, dtype=complex)) + self.m_n)


def build_pair_data(channels) -> list[PairData]:
    """One entry per unordered antenna pair (1-based, i < j)."""
    n_tx = channels.n_tx
    if n_tx < 2:
        raise ValueError("need at least two transmit antennas")
    h, f, g = channels.h_direct, channels.f_tx_ris, channels.g_ris_rx
    pairs = []
    for i, j in itertools.combinations(range(n_tx), 2):
        a = h[:, i] - h[:, j]
        b = g * (f[:, i] - f[:, j])
        pairs.append(PairData(
            pair=(i + 1, j + 1),
            a=a,
            b_mat=b,
            r_mat=b.conj().T @ b,
            c_row=a.conj() @ b,
            m=float(np.real(np.vdot(a, a))),
        ))
    return pairs


def sca_linearize(pd: PairData, v_n) -> SurrogateCoefficients:
    v_n = np.asarray(v_n, dtype=complex)
    bv = pd.b_mat @ v_n
    return SurrogateCoefficients(pd.c_row + bv.conj() @ pd.b_mat,
                                 pd.m - float(np.real(np.vdot(bv, bv))))


class _PairStack:
    """Stacked pair arrays for vectorized evaluation over all K pairs."""

    def __init__(self, pairs: list[PairData]):
        if not pairs:
            raise ValueError("no antenna pairs")
        self.pairs = pairs
        self.a = np.stack([p.a for p in pairs])            # K x N_r
        self.b = np.stack([p.b_mat for p in pairs])        # K x N_r x L
        self.c = np.stack([p.c_row for p in pairs])        # K x L
        self.m = np.array([p.m for p in pairs])

    def deltas(self, v) -> np.ndarray:
        w = self.a + self.b @ v
        return np.sum(w.real ** 2 + w.imag ** 2, axis=1)

    def linearize(self, v_n):
        bv = self.b @ v_n                                  # K x N_r
        c_n = self.c + np.einsum("kr,krl->kl", bv.conj(), self.b)
        m_n = self.m - np.sum(bv.real ** 2 + bv.imag ** 2, axis=1)
        return c_n, m_n

    def max_curvature(self) -> np.ndarray:
        """Largest eigenvalue of each R_k = B_k^H B_k."""
        return np.array([np.linalg.norm(b, 2) ** 2 for b in self.b])


def penalized_objective(stack_or_pairs, v, u, rho: float) -> float:
    """min_k Delta_k(v) - rho ||v - u||^2."""
    stack = stack_or_pairs if isinstance(stack_or_pairs, _PairStack) else _PairStack(stack_or_pairs)
    diff = np.asarray(v) - np.asarray(u)
    return float(stack.deltas(v).min() - rho * np.real(np.vdot(diff, diff)))


RELAXATIONS = ("disk", "none")
REFINEMENTS = ("flip", "none")


def solve_maxmin_subproblem(surrogates, u, rho: float, tol: float | None = None,
                            relaxation: str = "none") -> np.ndarray:
    """argmax_v min_k { -rho ||v - u||^2 + 2 Re{c_{n,k} v} + m_{n,k} }.

    With ``v = u + d`` every piece shares the curvature ``-rho ||d||^2``, so
    this is a strongly concave max-min of affine functions in ``d``; see
    :mod:`risssk.maxmin_qp`. ``relaxation="disk"`` adds ``|v_l| <= 1``.
    Raises :class:`SubproblemError` when the KKT certificate exceeds ``tol``.
    """
    u = np.asarray(u, dtype=complex)
    if isinstance(surrogates, tuple):
        c_n, m_n = surrogates
    else:
        c_n = np.stack([s.c_n for s in surrogates])
        m_n = np.array([s.m_n for s in surrogates])
    if relaxation == "disk":
        return u + solve_maxmin_disk(c_n, m_n, rho, u, tol=1e-8 if tol is None else tol).d
    if relaxation != "none":
        raise ValueError(f"unknown relaxation {relaxation!r}")
    g = 2.0 * np.real(c_n @ u) + m_n
    return u + solve_maxmin(c_n, g, rho, tol=1e-10 if tol is None else tol).d


# ---------------------------------------------------------------------------
# Loops
# ---------------------------------------------------------------------------

@dataclass
class ScaResult:
    v: np.ndarray
    trace: list[float]
    iterations: int
    converged: bool


def sca_inner_loop(pairs, u, rho: float, epsilon: float, v_init, max_iter: int = 100,
                   tol: float | None = None, relaxation: str = "disk") -> ScaResult:
    """Repeat linearize -> solve until ``||v_{n+1} - v_n||^2 <= epsilon``.

    ``trace`` holds the true penalized objective at every iterate, starting
    with ``v_init``; it is non-decreasing because each surrogate minorizes
    its distance and is tight at the expansion point.
    """
    stack = pairs if isinstance(pairs, _PairStack) else _PairStack(pairs)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v_init, dtype=complex).copy()
    trace = [penalized_objective(stack, v, u, rho)]
    for n in range(1, max_iter + 1):
        c_n, m_n = stack.linearize(v)
        try:
            v_next = solve_maxmin_subproblem((c_n, m_n), u, rho, tol, relaxation)
        except SubproblemError as exc:
            v_next = u + exc.best.d
        # Keep the incumbent if the surrogate did not improve (solver noise).
        sur_next = float((2 * np.real(c_n @ v_next) + m_n).min() - rho * _sqnorm(v_next - u))
        sur_here = float((2 * np.real(c_n @ v) + m_n).min() - rho * _sqnorm(v - u))
        if sur_next < sur_here - 1e-12 * (1.0 + abs(sur_here)):
            return ScaResult(v, trace, n, False)
        step = _sqnorm(v_next - v)
        v = v_next
        trace.append(penalized_objective(stack, v, u, rho))
        if step <= epsilon:
            return ScaResult(v, trace, n, True)
    return ScaResult(v, trace, max_iter, False)


def _sqnorm(z) -> float:
    return float(np.real(np.vdot(z, z)))


@dataclass
class OptimizeOptions:
    rho0: float | None = None
    c_growth: float = 5.0
    epsilon: float = 1e-5
    max_outer: int = 30
    max_middle: int = 50
    max_inner: int = 100
    v_init_mode: str = "ones"
    restarts: int = 1
    relaxation: str = "disk"
    curvature_margin: float = 1.05
    record_inner: bool = False
    subproblem_tol: float | None = None
    refine: str = "flip"

    def __post_init__(self):
        if self.rho0 is not None and not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if not self.c_growth > 1:
            raise ValueError("c_growth must exceed 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.v_init_mode not in ("ones", "random"):
            raise ValueError(f"unknown v_init_mode {self.v_init_mode!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.relaxation not in RELAXATIONS:
            raise ValueError(f"unknown relaxation {self.relaxation!r}")
        if self.refine not in REFINEMENTS:
            raise ValueError(f"unknown refine mode {self.refine!r}")


@dataclass
class OptimizeResult:
    u_final: DiscretePhaseVector
    achieved_min_delta: float
    objective_trace: list[dict]
    iterations: tuple[int, int, int]
    converged: bool
    rho0: float
    inner_traces: list[list[float]] = field(default_factory=list, repr=False)
    loop_min_delta: float | None = None
    refine_moves: int = 0
    # ||v - u||^2 between the loop's final continuous and discrete iterates
    penalty_residual: float = math.inf

    def to_dict(self) -> dict:
        return {
            "q_bits": self.u_final.q_bits,
            "phase_indices": self.u_final.indices.tolist(),
            "achieved_min_delta": self.achieved_min_delta,
            "objective_trace": self.objective_trace,
            "iterations": {"outer": self.iterations[0], "middle": self.iterations[1],
                           "inner": self.iterations[2]},
            "converged": self.converged,
            "rho0": self.rho0,
            "loop_min_delta": self.loop_min_delta,
            "refine_moves": self.refine_moves,
            "penalty_residual": self.penalty_residual,
        }


def initial_rho(stack: _PairStack, options: OptimizeOptions) -> float:
    """Starting penalty weight: a small multiple of the mean pair offset.

    Without the disk bound the value is floored just above the smallest pair
    curvature; below it the max-min of convex distances minus
    ``rho ||v - u||^2`` is unbounded and SCA diverges.
    """
    if options.rho0 is not None:
        return float(options.rho0)
    small = max(1e-3 * float(np.mean(stack.m)), 1e-12)
    if options.relaxation == "disk":
        return small
    return max(small, options.curvature_margin * float(stack.max_curvature().min()))


def optimize(channels, q_bits: int, options: OptimizeOptions | None = None, rng=None) -> OptimizeResult:
    """Run the three-layer loop; returns the best feasible phase vector seen.

    Restart ``r`` (random starts only) draws from ``rng.child(r)`` when
    ``rng`` is an :class:`RngStream`, from ``rng`` itself when it is a
    Generator, and from ``RngStream(rng or 0).child(r)`` otherwise.
    """
    options = options or OptimizeOptions()
    if q_bits < 1:
        raise ValueError(f"q_bits must be >= 1, got {q_bits}")
    stack = _PairStack(build_pair_data(channels))
    n_ris = channels.n_ris
    rho0 = initial_rho(stack, options)

    best = None
    for r in range(options.restarts):
        if options.v_init_mode == "ones" and r == 0:
            start = np.ones(n_ris, dtype=complex)
        else:
            start = np.exp(2j * np.pi * _restart_generator(rng, r).random(n_ris))
        result = _run_penalty_loop(stack, q_bits, rho0, start, options)
        result.loop_min_delta = result.achieved_min_delta
        if options.refine == "flip":
            u, value, moves = refine_flip(stack, result.u_final)
            result.u_final, result.achieved_min_delta, result.refine_moves = u, value, moves
        if best is None or result.achieved_min_delta > best.achieved_min_delta:
            best = result
    return best


def _restart_generator(rng, r: int) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng or 0))
    return stream.child(r).generator()


def refine_flip(pairs, u: DiscretePhaseVector, max_moves: int | None = None):
    """Best-improvement ascent over single-element phase changes.

    Each move evaluates every (element, phase) change at once and applies the
    one with the largest minimum distance; ties go to the lowest element and
    then the lowest phase index. Stops when no change improves by more than a
    relative ``1e-12``. Returns ``(u, min_delta, moves)``.
    """
    stack = pairs if isinstance(pairs, _PairStack) else _PairStack(pairs)
    alpha = alphabet(u.q_bits)
    idx = u.indices.copy()
    n_ris = len(idx)
    max_moves = 10 * n_ris * len(alpha) if max_moves is None else max_moves
    v = alpha[idx]
    w = stack.a + stack.b @ v                                     # K x N_r
    value = float(np.sum(w.real ** 2 + w.imag ** 2, axis=1).min())
    moves = 0
    while moves < max_moves:
        shift = alpha[None, :] - v[:, None]                       # L x M
        cand = w[:, :, None, None] + stack.b[:, :, :, None] * shift   # K x N_r x L x M
        vals = np.sum(cand.real ** 2 + cand.imag ** 2, axis=1).min(axis=0)
        flat = int(np.argmax(vals))
        l, k = divmod(flat, len(alpha))
        if not vals[l, k] > value + 1e-12 * (1.0 + abs(value)):
            break
        idx[l] = k
        v = alpha[idx]
        w = stack.a + stack.b @ v
        value = float(np.sum(w.real ** 2 + w.imag ** 2, axis=1).min())
        moves += 1
    return DiscretePhaseVector(idx, u.q_bits), value, moves


def _run_penalty_loop(stack, q_bits, rho0, start, options) -> OptimizeResult:
    u = project_discrete(start, q_bits)
    v = u.entries.copy()
    best_u, best_delta = u, float(stack.deltas(u.entries).min())
    rho = rho0
    trace: list[dict] = []
    inner_traces: list[list[float]] = []
    total_middle = total_inner = 0
    converged = False
    zeta = 0
    for zeta in range(1, options.max_outer + 1):
        for eta in range(1, options.max_middle + 1):
            total_middle += 1
            u_vec = u.entries
            q_before = penalized_objective(stack, v, u_vec, rho)
            inner = sca_inner_loop(stack, u_vec, rho, options.epsilon, v,
                                   options.max_inner, options.subproblem_tol,
                                   options.relaxation)
            total_inner += inner.iterations
            if options.record_inner:
                inner_traces.append(inner.trace)
            v_next = inner.v
            q_mid = penalized_objective(stack, v_next, u_vec, rho)
            u = project_discrete(v_next, q_bits)
            q_after = penalized_objective(stack, v_next, u.entries, rho)
            trace.append({"outer": zeta, "middle": eta, "rho": rho, "before": q_before,
                          "after_v": q_mid, "after_u": q_after})
            delta_u = float(stack.deltas(u.entries).min())
            if delta_u > best_delta:
                best_u, best_delta = u, delta_u
            step = _sqnorm(v_next - v)
            v = v_next
            if step <= options.epsilon:
                break
        if _sqnorm(v - u.entries) <= options.epsilon:
            converged = True
            break
        rho *= options.c_growth
    return OptimizeResult(best_u, best_delta, trace, (zeta, total_middle, total_inner),
                          converged, rho0, inner_traces,
                          penalty_residual=_sqnorm(v - u.entries))


# ---------------------------------------------------------------------------
# Baselines and oracle
# ---------------------------------------------------------------------------

def exhaustive_oracle(channels, q_bits: int, cap: int = 2 ** 20, chunk: int = 4096):
    """Global max-min over every discrete configuration.

    Configurations are enumerated in lexicographic order of their index
    vectors (element 0 most significant); ties keep the first.
    """
    n_ris = channels.n_ris
    size = 2 ** q_bits
    total = size ** n_ris
    if total > cap:
        raise OptimizerError(f"{total} configurations exceed the cap of {cap}")
    stack = _PairStack(build_pair_data(channels))
    alpha = alphabet(q_bits)
    weights = size ** np.arange(n_ris - 1, -1, -1)
    best_idx, best_val = 0, -math.inf
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        idx = (codes[:, None] // weights) % size                  # M x L
        w = stack.a[:, :, None] + stack.b @ alpha[idx].T          # K x N_r x M
        vals = np.sum(w.real ** 2 + w.imag ** 2, axis=1).min(axis=0)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_idx = float(vals[k]), int(codes[k])
    idx = (best_idx // weights) % size
    return DiscretePhaseVector(idx, q_bits), best_val


def random_phase_baseline(channels, q_bits: int, rng) -> DiscretePhaseVector:
    gen = as_generator(rng)
    n_ris = channels if isinstance(channels, int) else channels.n_ris
    return DiscretePhaseVector(gen.integers(0, 2 ** q_bits, n_ris), q_bits)
