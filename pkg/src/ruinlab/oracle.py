"""Ground-truth engines for the lattice ruin problem.

The reference oracle is a forward dynamic program over the net-loss walk:
each trial moves the position +1 with probability ``p`` and -1 with
probability ``q``, and mass reaching ``-d`` is absorbed.  Classical closed
forms and the closed-form expected-time estimators are provided alongside
for comparison tables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

# The surviving mass of a +/-1 walk spreads like sqrt(t); tracking this
# many standard deviations above the barrier keeps truncation leakage far
# below double-precision noise while the state space stays O(sqrt(horizon)).
_BAND_SIGMAS = 8.0

# Mass below this is periodically flushed to exact zero: it cannot move any
# result by more than ~1e-270, and letting it decay further would fill the
# state with subnormal floats, which are orders of magnitude slower.
_FLUSH_THRESHOLD = 1e-280
_FLUSH_EVERY = 64


@dataclass(frozen=True)
class AbsorptionResult:
    """Ruin mass absorbed within a finite horizon.

    ``expected_time_censored`` is the mean number of steps among paths
    ruined within the horizon (NaN when no mass was absorbed, e.g. p = 1).
    ``survival_mass`` is the complement of the ruin probability; the DP
    conserves total mass by construction.
    """

    ruin_probability_within_horizon: float
    horizon: int
    expected_time_censored: float
    survival_mass: float
    ruin_time_distribution: dict[int, float] | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        mean = self.expected_time_censored
        return {
            "ruin_probability_within_horizon": self.ruin_probability_within_horizon,
            "horizon": self.horizon,
            "expected_time_censored": None if math.isnan(mean) else mean,
            "survival_mass": self.survival_mass,
            "ruin_time_distribution": (
                None
                if self.ruin_time_distribution is None
                else {str(t): m for t, m in sorted(self.ruin_time_distribution.items())}
            ),
        }


def ruin_probability_dp(
    p: float,
    d: int,
    horizon: int,
    keep_distribution: bool = False,
) -> AbsorptionResult:
    """Exact probability that net loss reaches ``d`` within ``horizon`` steps.

    Forward DP over reachable lattice positions with the absorbing barrier
    removed from circulation each step.  "Within horizon" is inclusive of
    the horizon-th step.  Absorbed mass and the time accumulator use
    compensated (Kahan) summation; long horizons truncate the tracked band
    at ``~8 * sqrt(horizon)`` positions above the barrier, where the
    unreachable tail mass is below double-precision noise.

    With ``keep_distribution`` the per-step absorbed mass is returned as a
    sparse ``{step: mass}`` map (ruin times share the parity of ``d``).
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p}")
    if d < 1:
        raise DomainError(f"distance must be >= 1, got {d}")
    if horizon < d:
        raise DomainError(
            f"horizon must be >= distance (ruin needs at least d steps), "
            f"got horizon={horizon}, d={d}"
        )
    q = 1.0 - p

    # tracked positions -(d-1) .. top, index j = position + d - 1;
    # absorption happens on a loss from j = 0
    top = min(horizon, max(64, math.ceil(_BAND_SIGMAS * math.sqrt(horizon))))
    m = top + d
    state = np.zeros(m)
    state[d - 1] = 1.0
    nxt = np.zeros(m)
    buf = np.zeros(m)

    ruin = _Kahan()
    time_sum = _Kahan()
    distribution: dict[int, float] | None = {} if keep_distribution else None

    for t in range(1, horizon + 1):
        absorbed = float(q * state[0])
        if absorbed != 0.0:
            ruin.add(absorbed)
            time_sum.add(t * absorbed)
            if distribution is not None:
                distribution[t] = absorbed
        live = min(m, d + t)  # highest reachable index after t steps, plus one
        np.multiply(state[0 : live - 1], p, out=nxt[1:live])
        nxt[0] = 0.0
        if live == m:
            nxt[m - 1] += p * state[m - 1]  # band top saturates
        np.multiply(state[1:live], q, out=buf[0 : live - 1])
        nxt[0 : live - 1] += buf[0 : live - 1]
        state, nxt = nxt, state
        if t % _FLUSH_EVERY == 0:
            state[state < _FLUSH_THRESHOLD] = 0.0

    ruin_probability = float(ruin.total)
    survival = float(np.sum(state))
    mean_time = (
        float(time_sum.total) / ruin_probability if ruin_probability > 0.0 else math.nan
    )
    return AbsorptionResult(
        ruin_probability_within_horizon=ruin_probability,
        horizon=horizon,
        expected_time_censored=mean_time,
        survival_mass=survival,
        ruin_time_distribution=distribution,
    )


def ruin_probability_closed_form(p: float, d: int) -> float:
    """Classical infinite-horizon ruin probability ``min(1, (q/p)**d)``.

    Ruin is certain for ``p <= 1/2``; the degenerate ``p = 0`` and
    ``p = 1`` cases are exactly 1 and 0.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p}")
    if d < 1:
        raise DomainError(f"distance must be >= 1, got {d}")
    if p <= 0.5:
        return 1.0
    if p == 1.0:
        return 0.0
    return ((1.0 - p) / p) ** d


def expected_time_paper(p: float, d: int) -> float:
    """Closed-form time-to-ruin estimator ``(d-1)/(1 - p**d) + (d-1)``.

    Reported verbatim in comparison tables but never used as a reference:
    it does not match the true first-passage mean in general (at p = 0 it
    gives ``2(d-1)`` where the walk ruins in exactly ``d`` steps).
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p}")
    if d < 1:
        raise DomainError(f"distance must be >= 1, got {d}")
    if p == 1.0:
        raise DomainError("estimator undefined at p = 1 (denominator vanishes)")
    return (d - 1) / (1.0 - p**d) + (d - 1)


def expected_time_classical(p: float, d: int) -> float:
    """Classical drift formula ``d / (q - p)`` for the mean ruin time.

    Finite only when the walk drifts toward the barrier (p < 1/2); returns
    ``math.inf`` otherwise (absorption time divergent or ruin not certain).
    Divergence is a value, not an error.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p}")
    if d < 1:
        raise DomainError(f"distance must be >= 1, got {d}")
    if p >= 0.5:
        return math.inf
    return d / (1.0 - 2.0 * p)


def expected_time_censored_dp(p: float, d: int, horizon: int) -> float:
    """Mean ruin time conditioned on ruin within ``horizon``, from the DP."""
    result = ruin_probability_dp(p, d, horizon)
    if result.ruin_probability_within_horizon <= 0.0:
        raise DomainError(
            f"no ruin mass within horizon {horizon} (p={p}, d={d}); "
            f"censored mean undefined"
        )
    return result.expected_time_censored


class _Kahan:
    """Compensated scalar accumulator."""

    __slots__ = ("total", "_c")

    def __init__(self) -> None:
        self.total = 0.0
        self._c = 0.0

    def add(self, value: float) -> None:
        y = value - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t
