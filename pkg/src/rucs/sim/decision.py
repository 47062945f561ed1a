"""Lane-change decision rule and the delay-to-distance conversion."""

from __future__ import annotations

from typing import Optional

CHANGE_AHEAD = "change_ahead"
DECELERATE_AND_CHANGE_BEHIND = "decelerate_and_change_behind"


def lane_change_decision(drowsiness_value: Optional[dict]) -> str:
    """Decide the merge based on the neighbor driver's drowsiness.

    A non-drowsy neighbor lets the vehicle change lanes ahead; a drowsy
    one (or no data at all, the conservative default) means decelerating
    and changing behind.
    """
    if not drowsiness_value:
        return DECELERATE_AND_CHANGE_BEHIND
    if drowsiness_value.get("binary") == "non-drowsy":
        return CHANGE_AHEAD
    return DECELERATE_AND_CHANGE_BEHIND


def distance_during_delay(speed_mps: float, delay_s: float) -> float:
    """Meters traveled at `speed_mps` while waiting `delay_s` for a response."""
    if speed_mps < 0 or delay_s < 0:
        raise ValueError("speed and delay must be non-negative")
    return speed_mps * delay_s
