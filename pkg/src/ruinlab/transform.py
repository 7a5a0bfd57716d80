"""Risk-neutral probability rebalancing for asymmetric gain/loss legs.

Given a trial model, a new pair of gain/loss legs can reproduce its
per-trial expected arithmetic return by adjusting the probabilities
instead of the legs: from

    p_gain_adjusted * target_gain + p_loss_adjusted * target_loss = mean

with the probabilities summing to one,

    p_loss_adjusted = (target_gain - mean) / (target_gain - target_loss).

Rebalancing dilates the per-trial moves, so downstream ruin analysis must
recalibrate the distance against the target loss leg; warning flags mark
the regimes where the transformed problem reads very differently from the
original (adjusted gain probability below one half, small distances).
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, InfeasibleTargetError
from .model import TrialModel, generalized_distance, lattice_distance

WARN_GAIN_BELOW_HALF = "adjusted_gain_below_half"
WARN_SMALL_DISTANCE = "small_distance"

_SMALL_DISTANCE = 5


@dataclass(frozen=True)
class TransformResult:
    """Probabilities that make the target legs match the original mean.

    ``p_loss_adjusted + p_gain_adjusted == 1`` and the rebalanced mean
    equals ``matched_mean`` to within float rounding.
    """

    original: TrialModel
    target_gain_factor: float
    target_loss_factor: float
    matched_mean: float
    p_loss_adjusted: float
    p_gain_adjusted: float

    @property
    def warnings(self) -> tuple[str, ...]:
        if self.p_gain_adjusted < 0.5:
            return (WARN_GAIN_BELOW_HALF,)
        return ()

    def to_dict(self) -> dict:
        return {
            "original": {
                "p_gain": self.original.p_gain,
                "gain_factor": self.original.gain_factor,
                "loss_factor": self.original.loss_factor,
            },
            "target_gain_factor": self.target_gain_factor,
            "target_loss_factor": self.target_loss_factor,
            "matched_mean": self.matched_mean,
            "p_loss_adjusted": self.p_loss_adjusted,
            "p_gain_adjusted": self.p_gain_adjusted,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class RebalancedRuinInputs:
    """Adjusted gain probability packaged with the recalibrated distance,
    ready for the series, DP, or Monte Carlo engines."""

    p_gain: float
    distance: int
    distance_exact: float
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "p_gain": self.p_gain,
            "distance": self.distance,
            "distance_exact": self.distance_exact,
            "warnings": list(self.warnings),
        }


def model_mean(model: TrialModel) -> float:
    """Per-trial expected arithmetic return of ``model``."""
    return model.p_gain * model.gain_factor + model.p_loss * model.loss_factor


def rebalance(
    model: TrialModel,
    target_gain_factor: float,
    target_loss_factor: float,
) -> TransformResult:
    """Adjust probabilities so the target legs preserve ``model``'s mean.

    The mean must lie strictly between the target legs; otherwise no valid
    probability exists and an :class:`InfeasibleTargetError` is raised
    rather than clamping (a clamped probability would silently change the
    drift, defeating the whole point of the transform).
    """
    if not target_gain_factor > target_loss_factor:
        raise DomainError(
            f"target_gain_factor must exceed target_loss_factor, got "
            f"{target_gain_factor} <= {target_loss_factor}"
        )
    mean = model_mean(model)
    if not target_loss_factor < mean < target_gain_factor:
        raise InfeasibleTargetError(
            f"per-trial mean {mean} is outside the open interval "
            f"({target_loss_factor}, {target_gain_factor}); the target legs "
            f"cannot reproduce the original drift"
        )
    p_loss = (target_gain_factor - mean) / (target_gain_factor - target_loss_factor)
    return TransformResult(
        original=model,
        target_gain_factor=target_gain_factor,
        target_loss_factor=target_loss_factor,
        matched_mean=mean,
        p_loss_adjusted=p_loss,
        p_gain_adjusted=1.0 - p_loss,
    )


def rebalanced_ruin_inputs(
    result: TransformResult, loss_level: float
) -> RebalancedRuinInputs:
    """Distance calibration of the transformed problem at ``loss_level``.

    Pairs the adjusted gain probability with the distance implied by the
    target loss leg.  Flags ``adjusted_gain_below_half`` when the rebalanced
    per-wager gain chance drops under 50% and ``small_distance`` when the
    integer distance lands below 5; both are interpretation hazards of the
    amplified per-trial moves, not errors.
    """
    exact = generalized_distance(loss_level, result.target_loss_factor)
    distance = lattice_distance(exact)
    warnings = []
    if result.p_gain_adjusted < 0.5:
        warnings.append(WARN_GAIN_BELOW_HALF)
    if distance < _SMALL_DISTANCE:
        warnings.append(WARN_SMALL_DISTANCE)
    return RebalancedRuinInputs(
        p_gain=result.p_gain_adjusted,
        distance=distance,
        distance_exact=exact,
        warnings=tuple(warnings),
    )
