"""Divergences between discrete distributions, with explicit zero conventions.

All logarithms are base 2, so every value is in bits.  Infinities are
first-class results, never exceptions: KL of p against a q that lacks part of
p's support is +inf, exactly as the defining sum says.  Empty-against-empty
cells contribute nothing (the 0*f(0/0) = 0 convention), which is what makes
these functions directly applicable to partition-aggregated vectors and raw
sketch rows containing zeros.

Every divergence is wrapped in a :class:`DivergenceSpec` carrying honesty
flags (symmetric? triangle? f-divergence? Bregman?); the property-test suite
derives which axioms to enforce from those flags.  Specs are selectable by
name through a registry ("kl", "js", "bhattacharyya", "hellinger", "tv"), and
custom divergences enter the same machinery through :class:`FGenerator` /
:class:`BregmanGenerator`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .histogram import as_distribution

_LOG2E = math.log2(math.e)


class DivergenceDomainError(ValueError):
    """A generator met a zero it has no defined limit for."""


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = as_distribution(p)
    q = as_distribution(q)
    if p.size != q.size:
        raise ValueError(f"length mismatch: {p.size} vs {q.size}")
    return p, q


def _rows(P, Q) -> tuple[np.ndarray, np.ndarray]:
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {Q.shape}")
    return P, Q


# --- batch kernels (rows are distributions; no per-row validation) ---------

def _kl_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    pos = P > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(pos, P, 1.0) / np.where(Q > 0.0, Q, 1.0)
        terms = np.where(pos, P * np.log2(ratio), 0.0)
    out = terms.sum(axis=1)
    out[(pos & (Q <= 0.0)).any(axis=1)] = np.inf
    return out


def _js_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    mix = 0.5 * (P + Q)
    vals = 0.5 * _kl_rows(P, mix) + 0.5 * _kl_rows(Q, mix)
    return np.clip(vals, 0.0, 1.0)


def _bc_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return np.minimum(np.sqrt(P * Q).sum(axis=1), 1.0)


def _bhattacharyya_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return -np.log2(_bc_rows(P, Q))


def _hellinger_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # 1 - BC rewritten termwise as 0.5 * sum (sqrt p - sqrt q)^2: identical
    # inputs cancel exactly instead of leaving a sqrt of rounding noise.
    hsq = 0.5 * ((np.sqrt(P) - np.sqrt(Q)) ** 2).sum(axis=1)
    return np.minimum(np.sqrt(hsq), 1.0)


def _tv_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return np.minimum(0.5 * np.abs(P - Q).sum(axis=1), 1.0)


# --- scalar entry points ----------------------------------------------------

def kl(p, q) -> float:
    """Kullback-Leibler divergence, bits: sum p_i log2(p_i / q_i).

    0 log(0/q) = 0; +inf as soon as some p_i > 0 has q_i = 0.  Equals the
    cross entropy of (p, q) minus the entropy of p whenever finite.
    """
    p, q = _pair(p, q)
    return float(_kl_rows(p[None, :], q[None, :])[0])


def js(p, q) -> float:
    """Jensen-Shannon divergence, bits; always finite, in [0, 1]."""
    p, q = _pair(p, q)
    return float(_js_rows(p[None, :], q[None, :])[0])


def bhattacharyya_coefficient(p, q) -> float:
    """Similarity sum sqrt(p_i q_i), in [0, 1]."""
    p, q = _pair(p, q)
    return float(_bc_rows(p[None, :], q[None, :])[0])


def bhattacharyya(p, q) -> float:
    """-log2 of the coefficient; +inf on disjoint supports."""
    p, q = _pair(p, q)
    return float(_bhattacharyya_rows(p[None, :], q[None, :])[0])


def hellinger(p, q) -> float:
    """Hellinger distance sqrt(1 - BC); a genuine metric, in [0, 1]."""
    p, q = _pair(p, q)
    return float(_hellinger_rows(p[None, :], q[None, :])[0])


def tv(p, q) -> float:
    """Total variation distance, half the L1 difference."""
    p, q = _pair(p, q)
    return float(_tv_rows(p[None, :], q[None, :])[0])


def entropy(p) -> float:
    """Shannon entropy in bits."""
    p = as_distribution(p)
    pos = p > 0.0
    return float(-(p[pos] * np.log2(p[pos])).sum())


def cross_entropy(p, q) -> float:
    """-sum p_i log2 q_i; +inf when q misses part of p's support."""
    p, q = _pair(p, q)
    pos = p > 0.0
    if np.any(pos & (q <= 0.0)):
        return math.inf
    return float(-(p[pos] * np.log2(q[pos])).sum())


# --- generic f-divergences --------------------------------------------------

_CONVEXITY_SAMPLES = 1000


@dataclass(frozen=True)
class FGenerator:
    """Convex generator f on (0, inf) with f(1) = 0 plus its edge limits.

    ``limit_zero`` is lim_{u->0+} f(u) and ``limit_ratio_inf`` is
    lim_{u->inf} f(u)/u; either may be +inf, and None means the limit does
    not exist, turning the corresponding zero pattern into a domain error.
    ``f`` must accept numpy arrays.
    """

    f: Callable[[np.ndarray], np.ndarray]
    limit_zero: float | None
    limit_ratio_inf: float | None
    name: str = "f"

    def __post_init__(self) -> None:
        one = float(self.f(np.array([1.0]))[0])
        if one != 0.0:
            raise ValueError(f"{self.name}: f(1) = {one!r}, expected exactly 0")
        rng = np.random.default_rng(0)
        x = rng.uniform(0.01, 20.0, _CONVEXITY_SAMPLES)
        y = rng.uniform(0.01, 20.0, _CONVEXITY_SAMPLES)
        fm = self.f((x + y) / 2.0)
        if np.any(fm > (self.f(x) + self.f(y)) / 2.0 + 1e-9):
            raise ValueError(f"{self.name}: midpoint convexity check failed")


def _f_div_rows(gen: FGenerator, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    pp = P > 0.0
    qq = Q > 0.0
    both = pp & qq
    ratio = np.where(both, P, 1.0) / np.where(qq, Q, 1.0)
    terms = np.where(both, Q * gen.f(ratio), 0.0)

    p_only = pp & ~qq
    q_only = qq & ~pp
    with np.errstate(invalid="ignore"):
        if p_only.any():
            if gen.limit_ratio_inf is None:
                i = int(np.argwhere(p_only)[0][-1])
                raise DivergenceDomainError(
                    f"{gen.name}: q is 0 where p > 0 at index {i} and lim f(u)/u is undefined"
                )
            terms = terms + np.where(p_only, P * gen.limit_ratio_inf, 0.0)
        if q_only.any():
            if gen.limit_zero is None:
                i = int(np.argwhere(q_only)[0][-1])
                raise DivergenceDomainError(
                    f"{gen.name}: p is 0 where q > 0 at index {i} and lim f(u) at 0 is undefined"
                )
            terms = terms + np.where(q_only, Q * gen.limit_zero, 0.0)
    return terms.sum(axis=1)


def f_divergence(gen: FGenerator, p, q) -> float:
    """sum q_i f(p_i / q_i) under the three zero conventions."""
    p, q = _pair(p, q)
    return float(_f_div_rows(gen, p[None, :], q[None, :])[0])


# --- decomposable Bregman divergences ---------------------------------------

_DERIV_GRID = np.linspace(0.05, 1.0, 40)


@dataclass(frozen=True)
class BregmanGenerator:
    """Strictly convex differentiable F on (0, 1] with optional 0-extensions.

    ``value_at_zero`` extends F to 0; ``deriv_at_zero`` is the limit of F'
    there (may be -inf, in which case a vanishing q against positive p costs
    +inf).  None means no extension: zeros become domain errors.
    """

    F: Callable[[np.ndarray], np.ndarray]
    Fprime: Callable[[np.ndarray], np.ndarray]
    value_at_zero: float | None = None
    deriv_at_zero: float | None = None
    name: str = "F"

    def __post_init__(self) -> None:
        rng = np.random.default_rng(1)
        x = rng.uniform(0.02, 1.0, _CONVEXITY_SAMPLES)
        y = rng.uniform(0.02, 1.0, _CONVEXITY_SAMPLES)
        apart = np.abs(x - y) > 1e-3
        fm = self.F((x + y) / 2.0)
        avg = (self.F(x) + self.F(y)) / 2.0
        if np.any(fm[apart] >= avg[apart]):
            raise ValueError(f"{self.name}: strict midpoint convexity check failed")
        h = 1e-5
        central = (self.F(_DERIV_GRID + h) - self.F(_DERIV_GRID - h)) / (2.0 * h)
        exact = self.Fprime(_DERIV_GRID)
        rel = np.abs(central - exact) / np.maximum(1.0, np.abs(exact))
        if np.any(rel > 1e-6):
            raise ValueError(f"{self.name}: Fprime disagrees with central differences")


def _bregman_rows(gen: BregmanGenerator, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    pp = P > 0.0
    qq = Q > 0.0
    if (~pp).any() or (~qq).any():
        if gen.value_at_zero is None:
            i = int(np.argwhere(~(pp & qq))[0][-1])
            raise DivergenceDomainError(
                f"{gen.name}: zero at index {i} but F has no value extension at 0"
            )
        if (~qq).any() and gen.deriv_at_zero is None:
            i = int(np.argwhere(~qq)[0][-1])
            raise DivergenceDomainError(
                f"{gen.name}: q is 0 at index {i} but F' has no limit at 0"
            )
    F0 = gen.value_at_zero if gen.value_at_zero is not None else 0.0
    Fp = np.where(pp, gen.F(np.where(pp, P, 1.0)), F0)
    Fq = np.where(qq, gen.F(np.where(qq, Q, 1.0)), F0)
    dFq = np.where(qq, gen.Fprime(np.where(qq, Q, 1.0)), 0.0)
    terms = np.where(qq, Fp - Fq - (P - Q) * dFq, 0.0)
    q0 = ~qq
    if q0.any():
        if gen.deriv_at_zero == -math.inf:
            # F(p) - F(0) - p * (-inf) = +inf for p > 0, 0 for p = 0.
            terms = terms + np.where(q0 & pp, np.inf, 0.0)
        else:
            terms = terms + np.where(q0, Fp - F0 - P * gen.deriv_at_zero, 0.0)
    return terms.sum(axis=1)


def bregman(gen: BregmanGenerator, p, q) -> float:
    """Decomposable sum of F(p_i) - F(q_i) - (p_i - q_i) F'(q_i)."""
    p, q = _pair(p, q)
    return float(_bregman_rows(gen, p[None, :], q[None, :])[0])


def combine_bregman(g1: BregmanGenerator, g2: BregmanGenerator, lam: float) -> BregmanGenerator:
    """Generator for F1 + lam * F2, used by the linearity checks."""
    def zsum(a, b):
        return None if a is None or b is None else a + lam * b

    return BregmanGenerator(
        F=lambda x: g1.F(x) + lam * g2.F(x),
        Fprime=lambda x: g1.Fprime(x) + lam * g2.Fprime(x),
        value_at_zero=zsum(g1.value_at_zero, g2.value_at_zero),
        deriv_at_zero=zsum(g1.deriv_at_zero, g2.deriv_at_zero),
        name=f"{g1.name}+{lam}*{g2.name}",
    )


def _xlog2x(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0.0, x * np.log2(np.where(x > 0.0, x, 1.0)), 0.0)


KL_GENERATOR = FGenerator(_xlog2x, limit_zero=0.0, limit_ratio_inf=math.inf, name="t*log2(t)")
TV_GENERATOR = FGenerator(lambda u: 0.5 * np.abs(u - 1.0), limit_zero=0.5,
                          limit_ratio_inf=0.5, name="|t-1|/2")
HELLINGER_SQ_GENERATOR = FGenerator(lambda u: 0.5 * (np.sqrt(u) - 1.0) ** 2, limit_zero=0.5,
                                    limit_ratio_inf=0.5, name="(sqrt(t)-1)^2/2")


def _js_generator_f(u: np.ndarray) -> np.ndarray:
    return 0.5 * (_xlog2x(u) - (1.0 + u) * np.log2((1.0 + u) / 2.0))


JS_GENERATOR = FGenerator(_js_generator_f, limit_zero=0.5, limit_ratio_inf=0.5, name="js")

KL_BREGMAN = BregmanGenerator(
    F=_xlog2x,
    Fprime=lambda x: np.log2(x) + _LOG2E,
    value_at_zero=0.0,
    deriv_at_zero=-math.inf,
    name="t*log2(t)",
)
SQEUCLID_BREGMAN = BregmanGenerator(
    F=lambda x: x ** 2,
    Fprime=lambda x: 2.0 * x,
    value_at_zero=0.0,
    deriv_at_zero=0.0,
    name="t^2",
)


# --- named specs and registry -----------------------------------------------

@dataclass(frozen=True)
class DivergenceFlags:
    """Which axioms and structural properties a divergence honestly claims."""

    nonneg: bool = True
    identity: bool = True
    symmetric: bool = False
    triangle: bool = False
    f_div: bool = False
    bregman: bool = False


@dataclass(frozen=True)
class DivergenceSpec:
    """A named divergence: scalar eval, optional row-batched eval, flags."""

    name: str
    eval: Callable[[np.ndarray, np.ndarray], float]
    flags: DivergenceFlags = field(default_factory=DivergenceFlags)
    eval_rows: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __call__(self, p, q) -> float:
        return float(self.eval(p, q))

    def batch(self, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        """Evaluate on matching rows of two stacks of distributions."""
        P, Q = _rows(P, Q)
        if self.eval_rows is not None:
            return np.asarray(self.eval_rows(P, Q), dtype=np.float64)
        return np.array([self.eval(P[i], Q[i]) for i in range(P.shape[0])])


_REGISTRY: dict[str, DivergenceSpec] = {}


def register(spec: DivergenceSpec, overwrite: bool = False) -> DivergenceSpec:
    if spec.name in _REGISTRY and not overwrite:
        raise ValueError(f"divergence {spec.name!r} is already registered")
    _REGISTRY[spec.name] = spec
    return spec


def get_divergence(name: str) -> DivergenceSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown divergence {name!r}; available: {available()}") from None


def available() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def from_f_generator(name: str, gen: FGenerator, **flag_overrides) -> DivergenceSpec:
    """Wrap an FGenerator as a registrable spec (f_div flag set)."""
    flags = DivergenceFlags(f_div=True, **flag_overrides)
    return DivergenceSpec(
        name,
        eval=lambda p, q: f_divergence(gen, p, q),
        flags=flags,
        eval_rows=lambda P, Q: _f_div_rows(gen, P, Q),
    )


def from_bregman_generator(name: str, gen: BregmanGenerator, **flag_overrides) -> DivergenceSpec:
    """Wrap a BregmanGenerator as a registrable spec (bregman flag set)."""
    flags = DivergenceFlags(bregman=True, **flag_overrides)
    return DivergenceSpec(
        name,
        eval=lambda p, q: bregman(gen, p, q),
        flags=flags,
        eval_rows=lambda P, Q: _bregman_rows(gen, P, Q),
    )


KL = register(DivergenceSpec(
    "kl", eval=kl, eval_rows=_kl_rows,
    flags=DivergenceFlags(f_div=True, bregman=True),
))
JS = register(DivergenceSpec(
    "js", eval=js, eval_rows=_js_rows,
    flags=DivergenceFlags(symmetric=True, f_div=True),
))
BHATTACHARYYA = register(DivergenceSpec(
    "bhattacharyya", eval=bhattacharyya, eval_rows=_bhattacharyya_rows,
    flags=DivergenceFlags(symmetric=True),
))
HELLINGER = register(DivergenceSpec(
    "hellinger", eval=hellinger, eval_rows=_hellinger_rows,
    flags=DivergenceFlags(symmetric=True, triangle=True),
))
TV = register(DivergenceSpec(
    "tv", eval=tv, eval_rows=_tv_rows,
    flags=DivergenceFlags(symmetric=True, triangle=True, f_div=True),
))


def smoothed(spec: DivergenceSpec, alpha: float) -> DivergenceSpec:
    """Additive-alpha variant: add alpha to every cell and renormalize.

    alpha = 0 returns the spec unchanged.  Smoothing removes infinities at
    the cost of the exact sketch-below-reference ordering, so result files
    must record the alpha used.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha == 0:
        return spec

    def smooth_rows(V: np.ndarray) -> np.ndarray:
        W = V + alpha
        return W / W.sum(axis=1, keepdims=True)

    def eval_rows(P, Q):
        return spec.batch(smooth_rows(P), smooth_rows(Q))

    def eval_one(p, q):
        p, q = _pair(p, q)
        return float(eval_rows(p[None, :], q[None, :])[0])

    return replace(spec, eval=eval_one, eval_rows=eval_rows)
