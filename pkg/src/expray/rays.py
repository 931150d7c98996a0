"""Dynamic rays of exponential maps by backward iteration.

For kappa in the plane, the map z -> exp(z) + kappa has curves of
escaping points (dynamic rays) indexed by exponentially bounded
infinite addresses.  A ray point at potential t is computed by running
the model growth map t -> exp(t) - 1 forward n steps, placing a seed
at real part F^n(t) in the strip of the n-th shifted address, and
pulling back n times through branches of the logarithm selected by the
address entries.  The error contracts like exp(-F^n(t)/2) times the
product of the pullback derivatives, which this module tracks
explicitly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional

from .addresses import (
    ExternalAddress,
    Kind,
    first_difference,
    format_address,
    growth_bounds,
    parse_address,
    shift,
)
from .config import DEFAULT, Tolerances
from .exceptions import (
    NotExponentiallyBounded,
    PreconditionError,
    RayNumericsError,
    SeedOverflow,
    SingularValueCollision,
)

TWO_PI = 2.0 * math.pi


def growth_map(t: float) -> float:
    """The model growth map F(t) = exp(t) - 1."""
    return math.expm1(t)


def growth_map_inverse(t: float) -> float:
    return math.log1p(t)


# -- parameters ------------------------------------------------------------


@dataclass(frozen=True)
class Parameter:
    """A point kappa of parameter space, optionally tagged and addressed."""

    kappa: complex
    label: str = "custom"
    address: Optional[ExternalAddress] = None

    def __post_init__(self):
        k = complex(self.kappa)
        if not (math.isfinite(k.real) and math.isfinite(k.imag)):
            raise PreconditionError("parameter must be a finite complex number")


def misiurewicz_example() -> Parameter:
    """kappa = ln(2*pi) + i*pi/2: the singular value is preperiodic and the
    ray at address 0,(1) lands on it."""
    kappa = complex(math.log(TWO_PI), math.pi / 2.0)
    return Parameter(kappa, "misiurewicz-example", parse_address("0,(1)"))


def attracting_example() -> Parameter:
    """kappa = -2: real attracting fixed point, Fatou set contains the
    singular orbit."""
    return Parameter(complex(-2.0, 0.0), "attracting-example")


def siegel(theta: float) -> Parameter:
    """Parameter whose fixed point 2*pi*i*theta has multiplier e^{2*pi*i*theta}.

    For irrational theta of bounded type this is a Siegel disk; theta
    must lie in (0, 1).
    """
    if not 0.0 < theta < 1.0:
        raise PreconditionError("rotation number theta must lie in (0, 1)")
    z0 = complex(0.0, TWO_PI * theta)
    kappa = z0 - cmath.exp(z0)
    return Parameter(kappa, f"siegel({theta:.12g})")


def known_parameter(label: str, theta: Optional[float] = None,
                    kappa: Optional[complex] = None) -> Parameter:
    if label == "misiurewicz-example":
        return misiurewicz_example()
    if label == "attracting-example":
        return attracting_example()
    if label == "siegel":
        if theta is None:
            raise PreconditionError("siegel parameter needs a rotation number")
        return siegel(theta)
    if label == "custom":
        if kappa is None:
            raise PreconditionError("custom parameter needs kappa")
        return Parameter(complex(kappa))
    raise PreconditionError(f"unknown parameter label {label!r}")


# -- escape threshold ------------------------------------------------------


@lru_cache(maxsize=65536)
def big_tee(s: ExternalAddress, kappa: complex,
            depth_cap: Optional[int] = None) -> float:
    """Potential threshold 2*tStar(s) + log^+|kappa| + 4 above which the
    ray at s is certainly in its asymptotic regime."""
    gb = growth_bounds(s, depth_cap)
    if not gb.exp_bounded:
        raise NotExponentiallyBounded(
            "address growth terms are unbounded; no ray exists"
        )
    mag = abs(kappa)
    log_plus = math.log(mag) if mag > 1.0 else 0.0
    return 2.0 * gb.t_star + log_plus + 4.0


# -- samples and traces ----------------------------------------------------


@dataclass(frozen=True)
class RaySample:
    """One ray point: value z at potential t, with its computation record.

    stages[k-1] holds the pullback value after stage k (stages[0] is z
    itself); err_bound is the seeding error amplified by the recorded
    pullback derivative factors.
    """

    t: float
    z: complex
    depth: int
    err_bound: float
    stages: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.depth < 1:
            raise PreconditionError("sample depth must be >= 1")
        if not math.isfinite(self.err_bound) or self.err_bound < 0.0:
            raise RayNumericsError("sample error bound is not finite")


@dataclass(frozen=True)
class RayTrace:
    parameter: Parameter
    address: ExternalAddress
    eps: float
    samples: tuple
    branch_log: tuple = ()
    truncated: bool = False


def _pullback(p: Parameter, s: ExternalAddress, t: float, eps: float,
              tol: Tolerances, reference: Optional[tuple] = None):
    """Compute one ray sample; returns (sample, turn corrections).

    reference, when given, is the stage tuple of a nearby accepted
    sample: each pullback branch is shifted by whole turns to stay
    within half a turn of the reference stage, and every nonzero shift
    is reported.
    """
    if t <= 0.0:
        raise PreconditionError("potential t must be positive")
    if eps <= 0.0:
        raise PreconditionError("eps must be positive")
    if s.kind is not Kind.INFINITE:
        raise PreconditionError("only infinite addresses index dynamic rays")
    kappa = complex(p.kappa)
    eps_floor = max(2.0 * math.log(1.0 / eps), 0.0)

    # minimal depth n >= 1 with F^n(t) >= max(threshold of shifted address,
    # the eps seeding floor)
    n = 0
    value = t
    tail = s
    while True:
        n += 1
        tail = shift(tail)
        try:
            value = growth_map(value)
        except OverflowError:
            raise SeedOverflow(t) from None
        if value >= eps_floor and value >= big_tee(tail, kappa):
            break
        if n >= 1_000_000:
            raise RayNumericsError("backward-iteration depth exceeded 1e6")

    seed_potential = value
    z = complex(seed_potential, TWO_PI * float(tail.entry(1)))
    err = math.exp(-seed_potential / 2.0)
    stages = [0j] * n
    turns = []
    for k in range(n, 0, -1):
        w = z - kappa
        dist = abs(w)
        if dist < tol.singular_floor:
            raise SingularValueCollision(t, dist)
        err /= dist
        base = cmath.log(w) + complex(0.0, TWO_PI * float(s.entry(k)))
        m = 0
        if reference is not None and k <= len(reference):
            m = round((reference[k - 1].imag - base.imag) / TWO_PI)
        if m:
            z = base + complex(0.0, TWO_PI * m)
            turns.append((k, m))
        else:
            z = base
        stages[k - 1] = z
    sample = RaySample(t, z, n, err, tuple(stages))
    return sample, turns


def trace_point(p: Parameter, s: ExternalAddress, t: float,
                eps: Optional[float] = None,
                tolerances: Tolerances = DEFAULT) -> RaySample:
    """The ray point g_s(t), computed on the nominal branches."""
    sample, _ = _pullback(p, s, t, eps if eps is not None else tolerances.eps,
                          tolerances)
    return sample


def _stage_jump(a: RaySample, b: RaySample) -> float:
    shared = min(len(a.stages), len(b.stages))
    if shared == 0:
        return 0.0
    return max(abs(a.stages[k].imag - b.stages[k].imag) for k in range(shared))


def trace_ray(p: Parameter, s: ExternalAddress, t_max: float,
              t_min_hint: Optional[float] = None, n_samples: int = 200,
              eps: Optional[float] = None,
              tolerances: Tolerances = DEFAULT) -> RayTrace:
    """Sample the ray on a geometric grid from t_max down toward t_min_hint.

    Samples continue each other's logarithm branches; a step whose
    stage values move more than half the branch-jump tolerance is
    subdivided at the geometric midpoint, up to the refinement cap
    (exceeding it truncates the trace with an explicit marker).  The
    trace stops cleanly, without error, where the pullback floor
    signals that t has reached the bottom of the parametrisation.
    """
    tol = tolerances
    t_min = tol.t_min_hint if t_min_hint is None else t_min_hint
    eps_val = tol.eps if eps is None else eps
    if not t_max > t_min > 0.0:
        raise PreconditionError("need t_max > t_min_hint > 0")
    if n_samples < 2:
        raise PreconditionError("need at least two samples")

    ratio = t_min / t_max
    grid = [t_max * ratio ** (i / (n_samples - 1)) for i in range(n_samples)]
    grid[0], grid[-1] = t_max, t_min

    log: list = []
    truncated = False
    first, _ = _pullback(p, s, grid[0], eps_val, tol)
    samples = [first]
    # stack of (target t, refinement level), next target on top
    stack = [(t, 0) for t in reversed(grid[1:])]
    accept_jump = tol.branch_jump / 2.0
    while stack:
        target, level = stack.pop()
        prev = samples[-1]
        try:
            cand, turns = _pullback(p, s, target, eps_val, tol,
                                    reference=prev.stages)
        except SingularValueCollision as err:
            log.append({"kind": "stop", "reason": "singular-value-floor",
                        "t": target, "distance": err.distance})
            break
        except RayNumericsError:
            log.append({"kind": "stop", "reason": "error-bound-overflow",
                        "t": target})
            break
        if _stage_jump(prev, cand) <= accept_jump:
            for stage, m in turns:
                log.append({"kind": "turn", "t": cand.t,
                            "stage": stage, "turns": m})
            samples.append(cand)
            continue
        if level >= tol.refine_cap:
            log.append({"kind": "truncated",
                        "reason": "refinement-cap-exceeded",
                        "tHi": prev.t, "tLo": target})
            truncated = True
            break
        mid = math.sqrt(prev.t * target)
        if not target < mid < prev.t:
            log.append({"kind": "truncated",
                        "reason": "refinement-resolution-exhausted",
                        "tHi": prev.t, "tLo": target})
            truncated = True
            break
        log.append({"kind": "refine", "tHi": prev.t, "tLo": target,
                    "tMid": mid})
        stack.append((target, level + 1))
        stack.append((mid, level + 1))

    for a, b in zip(samples, samples[1:]):
        if not b.t < a.t:
            raise RayNumericsError("trace potentials are not decreasing")
    return RayTrace(p, s, eps_val, tuple(samples), tuple(log), truncated)


# -- residual checks -------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    """Maximum semiconjugacy defect |E(g_s(t)) - g_{shift(s)}(F(t))|."""

    max_residual: float
    checked: int
    skipped: int

    def __float__(self) -> float:
        return self.max_residual


def functional_residual(trace: RayTrace,
                        tolerances: Tolerances = DEFAULT) -> ResidualReport:
    """Compare the mapped trace with an independent trace of the shifted
    address at the grown potential; samples whose comparison would
    overflow are skipped and counted."""
    if not trace.samples:
        raise PreconditionError("cannot take the residual of an empty trace")
    shifted = shift(trace.address)
    worst = 0.0
    checked = 0
    skipped = 0
    for sample in trace.samples:
        try:
            grown = growth_map(sample.t)
            other = trace_point(trace.parameter, shifted, grown, trace.eps,
                                tolerances)
            mapped = cmath.exp(sample.z) + trace.parameter.kappa
        except (OverflowError, SeedOverflow):
            skipped += 1
            continue
        worst = max(worst, abs(mapped - other.z))
        checked += 1
    return ResidualReport(worst, checked, skipped)


@dataclass(frozen=True)
class AsymptoticReport:
    """Margins bound - |g_s(t) - (t + 2*pi*i*s_1)| with bound = e^{-t/2},
    for the samples at or above the asymptotic threshold."""

    margins: tuple  # (t, margin) pairs
    excluded: int

    @property
    def all_positive(self) -> bool:
        return all(m > 0.0 for _, m in self.margins)

    @property
    def min_margin(self) -> float:
        return min((m for _, m in self.margins), default=math.inf)


def asymptotic_residual(trace: RayTrace) -> AsymptoticReport:
    if not trace.samples:
        raise PreconditionError("cannot check the asymptotics of an empty trace")
    threshold = big_tee(trace.address, complex(trace.parameter.kappa))
    first_entry = float(trace.address.entry(1))
    margins = []
    excluded = 0
    for sample in trace.samples:
        if sample.t < threshold:
            excluded += 1
            continue
        straight = complex(sample.t, TWO_PI * first_entry)
        margins.append((sample.t, math.exp(-sample.t / 2.0)
                        - abs(sample.z - straight)))
    return AsymptoticReport(tuple(margins), excluded)


# -- continuity between rays -----------------------------------------------


def _membership_horizon(s: ExternalAddress, s_tilde: ExternalAddress,
                        tol: Tolerances) -> int:
    if s.is_generator_backed or s_tilde.is_generator_backed:
        spans = []
        for a in (s, s_tilde):
            if a.is_generator_backed:
                spans.append(a.cap + len(a.prefix) - a.gen_offset)
        return min(min(spans), tol.depth_cap)
    pfx = max(len(s.prefix), len(s_tilde.prefix))
    cyc = max(len(s.cycle), len(s_tilde.cycle))
    return pfx + cyc + math.lcm(len(s.cycle), len(s_tilde.cycle)) + 1


def continuity_gap(p: Parameter, s: ExternalAddress, s_tilde: ExternalAddress,
                   t0: float, eps: Optional[float] = None, bound: int = 0,
                   agree: int = 1, n_grid: int = 21,
                   tolerances: Tolerances = DEFAULT) -> float:
    """Sup of |g_s - g_s_tilde| over a grid on [t0, t0 + 10].

    The perturbed address must agree with s in its first ``agree``
    entries and satisfy |s~_n| <= bound + max_{k<=n} |s_k| everywhere
    (checked exactly for explicit addresses, to the cap for
    generator-backed ones).
    """
    if t0 <= 0.0:
        raise PreconditionError("t0 must be positive")
    diff = first_difference(s, s_tilde)
    if diff is not None and diff <= agree:
        raise PreconditionError(
            f"addresses differ at entry {diff}, inside the first {agree}"
        )
    horizon = max(_membership_horizon(s, s_tilde, tolerances), agree)
    running = 0.0
    for n in range(1, horizon + 1):
        running = max(running, abs(s.entry(n)))
        if abs(s_tilde.entry(n)) > bound + running:
            raise PreconditionError(
                f"perturbed entry {n} exceeds the declared bound"
            )
    worst = 0.0
    for i in range(n_grid):
        t = t0 + 10.0 * i / (n_grid - 1)
        za = trace_point(p, s, t, eps, tolerances).z
        zb = trace_point(p, s_tilde, t, eps, tolerances).z
        worst = max(worst, abs(za - zb))
    return worst


# -- tail diagnostics ------------------------------------------------------


class Verdict(Enum):
    LANDS_FINITE = "LANDS_FINITE"
    ESCAPES_LEFT = "ESCAPES_LEFT"
    UNBOUNDED_OTHER = "UNBOUNDED_OTHER"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class TailReport:
    verdict: Verdict
    z_star: Optional[complex]
    diameter: float
    strip_estimates: tuple
    evidence: dict


def tail_diagnostic(trace: RayTrace,
                    tolerances: Tolerances = DEFAULT) -> TailReport:
    """Classify the low-t end of a trace from its terminal sample window."""
    tol = tolerances
    window = tol.tail_window
    if len(trace.samples) < window:
        raise PreconditionError(
            f"tail diagnostics need at least {window} samples"
        )
    tail = trace.samples[-window:]
    zs = [sample.z for sample in tail]
    res = [z.real for z in zs]
    ims = [z.imag for z in zs]
    mags = [abs(z) for z in zs]
    diameter = max(
        abs(zs[i] - zs[j]) for i in range(window) for j in range(i + 1, window)
    )
    strips = tuple(int(round(im / TWO_PI)) for im in ims)
    evidence = {
        "tRange": [tail[-1].t, tail[0].t],
        "absRange": [min(mags), max(mags)],
        "reRange": [min(res), max(res)],
        "imRange": [min(ims), max(ims)],
        "diameter": diameter,
        "finalZ": [zs[-1].real, zs[-1].imag],
    }
    bounded = max(mags) <= tol.magnitude_ceiling
    drifting_left = all(
        later <= earlier + tol.monotone_slack
        for earlier, later in zip(res, res[1:])
    )
    if diameter < tol.cloud_diameter and bounded:
        centroid = sum(zs, 0j) / window
        return TailReport(Verdict.LANDS_FINITE, centroid, diameter, strips,
                          evidence)
    if res[-1] < tol.real_escape_floor and drifting_left:
        return TailReport(Verdict.ESCAPES_LEFT, None, diameter, strips,
                          evidence)
    if not bounded:
        return TailReport(Verdict.UNBOUNDED_OTHER, None, diameter, strips,
                          evidence)
    return TailReport(Verdict.INCONCLUSIVE, None, diameter, strips, evidence)


# -- serialization ---------------------------------------------------------


def trace_to_json(trace: RayTrace, tail: Optional[TailReport] = None,
                  tolerances: Tolerances = DEFAULT) -> dict:
    """Plain-dict form of a trace, stable under json.dumps round trips."""
    if tail is None and len(trace.samples) >= tolerances.tail_window:
        tail = tail_diagnostic(trace, tolerances)
    if tail is None:
        tail_obj = {
            "verdict": Verdict.INCONCLUSIVE.value,
            "evidence": {"note": "trace too short for tail diagnostics"},
        }
    else:
        evidence = dict(tail.evidence)
        evidence["stripEstimates"] = list(tail.strip_estimates)
        if tail.z_star is not None:
            evidence["zStar"] = [tail.z_star.real, tail.z_star.imag]
        tail_obj = {"verdict": tail.verdict.value, "evidence": evidence}
    kappa = complex(trace.parameter.kappa)
    return {
        "kappa": [kappa.real, kappa.imag],
        "address": format_address(trace.address),
        "eps": trace.eps,
        "samples": [
            {"t": sample.t, "z": [sample.z.real, sample.z.imag],
             "depth": sample.depth, "err": sample.err_bound}
            for sample in trace.samples
        ],
        "branchLog": [dict(entry) for entry in trace.branch_log],
        "tail": tail_obj,
    }
