"""Numerical tolerances and caps, collected in one configuration record.

Every magic number used by the ray engine, the tail classifier and the
certificate search lives here so that experiments can tighten or loosen
them in one place.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # default pointwise tolerance for backward iteration
    eps: float = 1e-12
    # |z - kappa| below this floor aborts a pullback (potential at or below
    # the lower end of the ray)
    singular_floor: float = 1e-12
    # depth cap for entry generation on generator-backed addresses
    depth_cap: int = 4096
    # imaginary-part jump between adjacent samples that triggers local grid
    # refinement in a traced ray
    branch_jump: float = 3.141592653589793
    # midpoint insertions allowed per grid gap before the trace is truncated
    refine_cap: int = 16
    # tail classification: terminal window size and thresholds
    tail_window: int = 20
    cloud_diameter: float = 1e-4
    real_escape_floor: float = -10.0
    magnitude_ceiling: float = 1e6
    # slack allowed per step in the "monotone leftward" tail test; pure
    # float monotonicity is too brittle for spiralling approaches
    monotone_slack: float = 0.5
    # certificate stage search
    stage_grid: int = 64
    stage_attempts: int = 64
    t_min_hint: float = 0.05

    def with_eps(self, eps: float) -> "Tolerances":
        return replace(self, eps=eps)


DEFAULT = Tolerances()
