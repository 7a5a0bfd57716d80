"""Combinatorial ruin-probability series and its closed-form shortcuts.

A ruin path with ``N`` gains against a barrier at distance ``d`` has length
``d + 2N`` and probability ``q**(d+N) * p**N``.  Two counting rules for the
number of such paths are provided side by side:

* ``paper`` mode: the pencil-and-paper combination count
  ``C(d+2N-2, N)`` minus, for ``N >= 2``, the correction ``C(2N-2, N)``.
  Exact for ``N <= 2``, an overcount from ``N = 3`` on.
* ``exact`` mode: the true first-passage count, i.e. the number of
  gain/loss sequences whose net loss reaches ``d`` for the first time on
  the final step.

Every series term carries its count as an arbitrary-precision integer;
probabilities switch to log space once paths get long enough that the
direct product could overflow or underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Literal

from .errors import DomainError, ValidityError

CoefficientMode = Literal["paper", "exact"]

# Beyond this path length the term probability is evaluated in log space.
_LOG_SPACE_PATH_LENGTH = 300


def multinomial(n: int, parts: list[int]) -> int:
    """Exact multinomial coefficient ``n! / (k_1! k_2! ... k_m!)``.

    ``parts`` must be nonnegative and sum to ``n``.
    """
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if any(k < 0 for k in parts):
        raise DomainError(f"parts must be nonnegative, got {parts}")
    if sum(parts) != n:
        raise DomainError(f"parts {parts} do not sum to n = {n}")
    result = math.factorial(n)
    for k in parts:
        result //= math.factorial(k)
    return result


def _binom(n: int, k: int) -> int:
    """C(n, k) by the falling-factorial product.

    Unlike ``math.comb`` this is defined for negative ``n`` when ``k = 0``
    (empty product = 1), which the leading series term needs at ``d = 1``.
    """
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    result = 1
    for i in range(1, k + 1):
        result = result * (n - i + 1) // i
    return result


def paper_coefficient(d: int, n_gains: int) -> int:
    """Pencil-and-paper path count for the series term with ``n_gains`` gains.

    ``C(d+2N-2, N)`` for ``N < 2``; ``C(d+2N-2, N) - C(2N-2, N)`` for
    ``N >= 2``.  Matches :func:`exact_coefficient` for ``N <= 2`` and
    overcounts from ``N = 3`` on (16 vs 14 at d=2, N=3).
    """
    _check_coefficient_args(d, n_gains)
    count = _binom(d + 2 * n_gains - 2, n_gains)
    if n_gains >= 2:
        count -= _binom(2 * n_gains - 2, n_gains)
    return count


def exact_coefficient(d: int, n_gains: int) -> int:
    """Number of length ``d + 2N`` gain/loss sequences whose net loss first
    reaches ``d`` on the final step.

    Computed as ``d * C(d+2N, N) / (d+2N)`` (the first-passage identity for
    the +/-1 walk); equals brute-force enumeration over all ``2**(d+2N)``
    sequences.
    """
    _check_coefficient_args(d, n_gains)
    length = d + 2 * n_gains
    numerator = d * math.comb(length, n_gains)
    assert numerator % length == 0
    return numerator // length


@dataclass(frozen=True)
class SeriesTerm:
    """One term of the ruin series: ``probability = path_count * q**(d+N) * p**N``."""

    n_gains: int
    path_count: int
    probability: float
    cumulative: float

    def to_dict(self) -> dict:
        # exact count rendered as a decimal string: it routinely exceeds
        # 64-bit range and JSON consumers would silently truncate it
        return {
            "n_gains": self.n_gains,
            "path_count": str(self.path_count),
            "probability": self.probability,
            "cumulative": self.cumulative,
        }


@dataclass(frozen=True)
class SeriesReport:
    """Partial sums of the ruin series up to ``truncation`` gains.

    ``tail_bound`` is a geometric envelope on the omitted mass, built from
    the last term and the larger of the observed and asymptotic term
    ratios; it is infinite when no geometric envelope exists (ratio >= 1,
    which happens near p = 1/2).  A reporting device, not part of the
    series itself.
    """

    p_gain: float
    distance: int
    terms: tuple[SeriesTerm, ...]
    truncation: int
    tail_bound: float
    coefficient_mode: CoefficientMode

    @property
    def cumulative(self) -> float:
        return self.terms[-1].cumulative

    def to_dict(self) -> dict:
        return {
            "p_gain": self.p_gain,
            "distance": self.distance,
            "coefficient_mode": self.coefficient_mode,
            "truncation": self.truncation,
            "cumulative": self.cumulative,
            "tail_bound": None if math.isinf(self.tail_bound) else self.tail_bound,
            "terms": [t.to_dict() for t in self.terms],
        }

    def csv_rows(self) -> Iterator[tuple]:
        for t in self.terms:
            yield (t.n_gains, str(t.path_count), t.probability, t.cumulative)


def ruin_series(
    p: float,
    d: int,
    max_gains: int,
    mode: CoefficientMode = "exact",
) -> SeriesReport:
    """Evaluate the ruin series for gain counts ``N = 0 .. max_gains``.

    In ``exact`` mode the cumulative sum at ``N`` is exactly the
    probability of ruin within ``d + 2N`` trials.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p}")
    if d < 1:
        raise DomainError(f"distance must be >= 1, got {d}")
    if max_gains < 0:
        raise DomainError(f"max_gains must be >= 0, got {max_gains}")
    if mode not in ("paper", "exact"):
        raise DomainError(f"mode must be 'paper' or 'exact', got {mode!r}")

    coefficient = paper_coefficient if mode == "paper" else exact_coefficient
    q = 1.0 - p

    terms: list[SeriesTerm] = []
    cumulative = 0.0
    for n_gains in range(max_gains + 1):
        count = coefficient(d, n_gains)
        probability = _term_probability(count, p, q, d, n_gains)
        cumulative += probability
        terms.append(SeriesTerm(n_gains, count, probability, cumulative))

    return SeriesReport(
        p_gain=p,
        distance=d,
        terms=tuple(terms),
        truncation=max_gains,
        tail_bound=_geometric_tail_bound(terms, p, q),
        coefficient_mode=mode,
    )


def approx_arith_geometric(p: float, d: int) -> float:
    """Arithmetic-geometric surrogate ``q**d / (1 - q*p*d)``.

    Only meaningful while ``q*p*d < 1``; beyond that the geometric
    surrogate diverges and a :class:`ValidityError` is raised.
    """
    q = _check_approx_args(p, d)
    ratio = q * p * d
    if ratio >= 1.0:
        raise ValidityError(
            f"arithmetic-geometric approximation requires q*p*d < 1, "
            f"got {ratio} (p={p}, d={d})"
        )
    return q**d / (1.0 - ratio)


def approx_simplified(p: float, d: int) -> float:
    """Simplified surrogate ``q**d / (1 - q*d)``, for small q and large d.

    Raises :class:`ValidityError` when ``q*d >= 1``; expect that whenever
    ``q >= 1/2`` with ``d >= 2``.
    """
    q = _check_approx_args(p, d)
    ratio = q * d
    if ratio >= 1.0:
        raise ValidityError(
            f"simplified approximation requires q*d < 1, got {ratio} "
            f"(p={p}, d={d})"
        )
    return q**d / (1.0 - ratio)


def paper_final_form(p: float, d: int) -> float:
    """Literal endpoint of the approximation chain: ``(q*p)**d``.

    Provided verbatim for comparison tables.  Note the classical
    infinite-horizon ruin probability is ``(q/p)**d``, not this value; the
    comparison surface reports both rather than guessing which was meant.
    """
    q = _check_approx_args(p, d)
    return (q * p) ** d


def _check_coefficient_args(d: int, n_gains: int) -> None:
    if d < 1:
        raise DomainError(f"distance must be >= 1, got {d}")
    if n_gains < 0:
        raise DomainError(f"gain count must be >= 0, got {n_gains}")


def _check_approx_args(p: float, d: int) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p}")
    if d < 1:
        raise DomainError(f"distance must be >= 1, got {d}")
    return 1.0 - p


def _term_probability(count: int, p: float, q: float, d: int, n_gains: int) -> float:
    if count == 0:
        return 0.0
    # direct products are exact for the degenerate probabilities and safe
    # for short paths; long paths go through log space so huge counts and
    # tiny powers never overflow or underflow each other
    if p in (0.0, 1.0) or q == 0.0 or d + 2 * n_gains <= _LOG_SPACE_PATH_LENGTH:
        return count * q ** (d + n_gains) * p**n_gains
    log_term = math.log(count) + (d + n_gains) * math.log(q)
    if n_gains:
        log_term += n_gains * math.log(p)
    return math.exp(log_term)


def _geometric_tail_bound(terms: list[SeriesTerm], p: float, q: float) -> float:
    """Geometric envelope of the omitted mass.

    Extrapolates from the ratio of the last two terms, floored at the
    asymptotic per-term ratio ``4*p*q`` (path counts grow at most 4x per
    unit of extra length while each additional gain contributes one factor
    of ``p`` and one of ``q``), so past the early transient this bounds the
    true tail from above.  Infinite when the ratio reaches 1 (near
    ``p = 1/2`` the tail has no geometric envelope) or when a single term
    gives nothing to extrapolate from.
    """
    last = terms[-1].probability
    if last == 0.0 or p == 0.0 or p == 1.0:
        return 0.0
    if len(terms) < 2 or terms[-2].probability == 0.0:
        return math.inf
    ratio = max(last / terms[-2].probability, 4.0 * p * q)
    if ratio >= 1.0:
        return math.inf
    return last * ratio / (1.0 - ratio)
