"""Ray tracing: thresholds, backward iteration, residuals, tails."""

import cmath
import dataclasses
import json
import math

import pytest
from scipy.optimize import brentq

from expray import (
    Parameter,
    RaySample,
    RayTrace,
    Verdict,
    asymptotic_residual,
    attracting_example,
    big_tee,
    continuity_gap,
    functional_residual,
    generator_address,
    growth_map,
    known_parameter,
    misiurewicz_example,
    parse_address,
    siegel,
    tail_diagnostic,
    trace_point,
    trace_ray,
    trace_to_json,
)
from expray.config import DEFAULT
from expray.exceptions import (
    AddressStructureError,
    NotExponentiallyBounded,
    PreconditionError,
    SeedOverflow,
    SingularValueCollision,
)

TWO_PI = 2.0 * math.pi
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

ATT = attracting_example()
MIS = misiurewicz_example()


# -- known parameters ------------------------------------------------------


def test_misiurewicz_parameter():
    assert MIS.kappa == complex(math.log(TWO_PI), math.pi / 2.0)
    assert MIS.kappa == pytest.approx(1.83788 + 1.57080j, abs=1e-5)
    assert MIS.address == parse_address("0,(1)")
    # the singular value is preperiodic: E(kappa) is fixed under E
    k = MIS.kappa
    once = cmath.exp(k) + k
    twice = cmath.exp(once) + k
    assert abs(twice - once) < 1e-12


def test_attracting_parameter_fixed_points():
    assert ATT.kappa == -2.0 + 0.0j
    # oracle: the two real solutions of exp(z) - 2 = z
    f = lambda z: math.exp(z) - 2.0 - z
    attracting = brentq(f, -2.0, -1.0, xtol=1e-14)
    repelling = brentq(f, 1.0, 2.0, xtol=1e-14)
    assert attracting == pytest.approx(-1.84141, abs=1e-5)
    assert repelling == pytest.approx(1.14619, abs=1e-5)
    # multipliers: derivative of exp(z) - 2 is exp(z) = z + 2 at a fixed point
    assert attracting + 2.0 == pytest.approx(0.15859, abs=1e-5)
    assert abs(attracting + 2.0) < 1.0 < abs(repelling + 2.0)


def test_siegel_parameter():
    p = siegel(GOLDEN)
    z0 = complex(0.0, TWO_PI * GOLDEN)
    assert abs(cmath.exp(z0) + p.kappa - z0) < 1e-14
    assert abs(abs(cmath.exp(z0)) - 1.0) < 1e-14
    assert p.kappa == pytest.approx(0.73737 + 4.55871j, abs=1e-5)
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(PreconditionError):
            siegel(bad)


def test_known_parameter_dispatch():
    assert known_parameter("attracting-example") == ATT
    assert known_parameter("misiurewicz-example") == MIS
    assert known_parameter("siegel", theta=GOLDEN) == siegel(GOLDEN)
    assert known_parameter("custom", kappa=1 + 2j).kappa == 1 + 2j
    with pytest.raises(PreconditionError):
        known_parameter("siegel")
    with pytest.raises(PreconditionError):
        known_parameter("custom")
    with pytest.raises(PreconditionError):
        known_parameter("no-such-label")


def test_parameter_must_be_finite():
    with pytest.raises(PreconditionError):
        Parameter(complex(math.inf, 0.0))


# -- escape threshold ------------------------------------------------------


def test_big_tee_values():
    assert big_tee(parse_address("(0)"), -2 + 0j) == pytest.approx(
        math.log(2.0) + 4.0, rel=1e-15
    )
    assert big_tee(parse_address("(0)"), 0j) == 4.0
    # |kappa| <= 1 contributes nothing
    assert big_tee(parse_address("(0)"), 0.5 + 0.5j) == 4.0
    oracle = 2.0 * math.log1p(TWO_PI) + math.log(abs(MIS.kappa)) + 4.0
    assert big_tee(parse_address("0,(1)"), MIS.kappa) == pytest.approx(
        oracle, rel=1e-15
    )
    assert big_tee(parse_address("0,(1)"), MIS.kappa) == pytest.approx(
        8.8537, abs=1e-3
    )


def test_big_tee_rejects_unbounded_addresses():
    towers = generator_address(lambda k: 10 ** (500 * k), cap=8)
    with pytest.raises(NotExponentiallyBounded):
        big_tee(towers, 0j)
    with pytest.raises(AddressStructureError):
        big_tee(parse_address("1/2,inf"), 0j)


# -- single-point tracing --------------------------------------------------


def test_trace_point_asymptotic_attracting():
    sample = trace_point(ATT, parse_address("(0)"), 12.0)
    assert abs(sample.z - 12.0) < math.exp(-6.0)
    assert sample.z.imag == 0.0
    assert sample.depth == 1  # F(12) already clears every threshold
    assert sample.err_bound >= 0.0


def test_trace_point_asymptotic_misiurewicz():
    sample = trace_point(MIS, parse_address("0,(1)"), 12.0)
    assert abs(sample.z - 12.0) < math.exp(-6.0)


def test_trace_point_depth_rule():
    # F(2) = 6.389 misses the eps floor 2 ln(1e12) = 55.26, F^2(2) = 595 clears it
    sample = trace_point(ATT, parse_address("(0)"), 2.0, 1e-12)
    assert sample.depth == 2
    assert 0.0 < sample.err_bound < 1e-100


def test_trace_point_depth_independence():
    # chosen so the two eps values select different depths
    s = parse_address("0,(1)")
    coarse = trace_point(MIS, s, 4.2, 1e-8)
    fine = trace_point(MIS, s, 4.2, 1e-16)
    assert coarse.depth != fine.depth
    assert abs(coarse.z - fine.z) < 100 * 1e-8
    for t in (1.0, 2.5, 7.0):
        a = trace_point(MIS, s, t, 1e-12)
        b = trace_point(MIS, s, t, 1e-12 * 1e-4)
        assert abs(a.z - b.z) < 100 * 1e-12


def test_trace_point_preconditions():
    s = parse_address("(0)")
    with pytest.raises(PreconditionError):
        trace_point(ATT, s, 0.0)
    with pytest.raises(PreconditionError):
        trace_point(ATT, s, -1.0)
    with pytest.raises(PreconditionError):
        trace_point(ATT, s, 2.0, 0.0)
    with pytest.raises(PreconditionError):
        trace_point(ATT, parse_address("1/2,inf"), 2.0)


def test_trace_point_seed_overflow():
    s = parse_address("(0)")
    with pytest.raises(SeedOverflow):
        trace_point(ATT, s, 800.0)
    with pytest.raises(SeedOverflow):
        trace_point(ATT, s, 709.9)
    # t just below the overflow edge still works
    assert trace_point(ATT, s, 700.0).depth == 1


def test_trace_point_singular_collision():
    # place kappa exactly where the second pullback lands: the float fixed
    # point of x -> log(F^2(3) - x)
    seed = growth_map(growth_map(3.0))
    x = 19.0
    for _ in range(60):
        x = math.log(seed - x)
    with pytest.raises(SingularValueCollision) as exc:
        trace_point(Parameter(complex(x, 0.0)), parse_address("(0)"), 3.0)
    assert exc.value.t == 3.0
    assert exc.value.distance < DEFAULT.singular_floor


# -- ray traces ------------------------------------------------------------


def test_real_ray_is_real_and_monotone():
    trace = trace_ray(ATT, parse_address("(0)"), 12.0, 0.5, 200)
    assert len(trace.samples) == 200
    assert trace.samples[0].t == 12.0
    assert trace.samples[-1].t == 0.5
    assert not trace.truncated
    assert trace.branch_log == ()
    assert all(s.z.imag == 0.0 for s in trace.samples)
    values = [s.z.real for s in trace.samples]
    assert all(b < a for a, b in zip(values, values[1:]))
    ts = [s.t for s in trace.samples]
    assert all(b < a for a, b in zip(ts, ts[1:]))


def test_landing_ray_clusters_at_the_singular_value():
    trace = trace_ray(MIS, parse_address("0,(1)"), 12.0, 0.05, 200)
    assert not trace.truncated
    report = tail_diagnostic(trace)
    assert report.verdict is Verdict.LANDS_FINITE
    assert abs(report.z_star - MIS.kappa) < 1e-6
    assert report.diameter < 1e-6
    assert set(report.strip_estimates) == {0}


def test_preimage_ray_escapes_left_with_branch_turns():
    trace = trace_ray(MIS, parse_address("2,0,(1)"), 12.0, 0.05, 200)
    report = tail_diagnostic(trace)
    assert report.verdict is Verdict.ESCAPES_LEFT
    assert trace.samples[-1].z.real < -10.0
    kinds = {entry["kind"] for entry in trace.branch_log}
    assert "turn" in kinds  # winding around the singular value is unwrapped
    assert "stop" in kinds  # the pullback floor ends the trace cleanly
    assert not trace.truncated
    # the imaginary part winds through more than a full turn yet no
    # consecutive step jumps by more than the acceptance tolerance
    ims = [s.z.imag for s in trace.samples]
    assert max(ims) - min(ims) > TWO_PI
    steps = [abs(b - a) for a, b in zip(ims, ims[1:])]
    assert max(steps) <= DEFAULT.branch_jump / 2.0 + 1e-9


def test_trace_preconditions():
    s = parse_address("(0)")
    with pytest.raises(PreconditionError):
        trace_ray(ATT, s, 1.0, 2.0, 10)
    with pytest.raises(PreconditionError):
        trace_ray(ATT, s, 0.0, -1.0, 10)
    with pytest.raises(PreconditionError):
        trace_ray(ATT, s, 12.0, 1.0, 1)


def test_trace_truncates_at_refinement_cap():
    strict = dataclasses.replace(DEFAULT, branch_jump=1e-12, refine_cap=0)
    trace = trace_ray(MIS, parse_address("0,(1)"), 12.0, 1.0, 50,
                      tolerances=strict)
    assert trace.truncated
    assert len(trace.samples) == 1
    assert trace.branch_log[-1]["kind"] == "truncated"
    assert trace.branch_log[-1]["reason"] == "refinement-cap-exceeded"


def test_trace_refines_locally_when_steps_are_too_coarse():
    eager = dataclasses.replace(DEFAULT, branch_jump=0.4)
    trace = trace_ray(MIS, parse_address("2,0,(1)"), 3.0, 0.05, 40,
                      tolerances=eager)
    kinds = [entry["kind"] for entry in trace.branch_log]
    assert "refine" in kinds
    assert not trace.truncated
    assert len(trace.samples) > 40 - 1  # midpoints were inserted
    ims = [s.z.imag for s in trace.samples]
    steps = [abs(b - a) for a, b in zip(ims, ims[1:])]
    assert max(steps) <= 0.2 + 1e-9


# -- residuals -------------------------------------------------------------


def test_functional_residual_small():
    for p, text in ((ATT, "(0)"), (MIS, "0,(1)")):
        trace = trace_ray(p, parse_address(text), 5.0, 1.0, 50)
        report = functional_residual(trace)
        assert report.max_residual < 1e-9
        assert report.checked == len(trace.samples)
        assert report.skipped == 0
        assert float(report) == report.max_residual


def test_functional_residual_skips_overflowing_samples():
    trace = trace_ray(ATT, parse_address("(0)"), 12.0, 1.0, 40)
    report = functional_residual(trace)
    assert report.skipped > 0  # F^2(t) overflows for t above ~6.57
    assert report.checked + report.skipped == len(trace.samples)
    assert report.max_residual < 1e-9


def test_functional_residual_empty_trace():
    empty = RayTrace(ATT, parse_address("(0)"), 1e-12, ())
    with pytest.raises(PreconditionError):
        functional_residual(empty)


def test_asymptotic_margins_positive():
    for p, text in ((ATT, "(0)"), (MIS, "0,(1)"), (ATT, "3,(1)")):
        s = parse_address(text)
        threshold = big_tee(s, p.kappa)
        trace = trace_ray(p, s, threshold + 10.0, threshold, 11)
        report = asymptotic_residual(trace)
        assert report.excluded == 0
        assert len(report.margins) == len(trace.samples)
        assert report.all_positive, (text, report.min_margin)


def test_asymptotic_excludes_low_potentials():
    trace = trace_ray(ATT, parse_address("(0)"), 12.0, 1.0, 30)
    report = asymptotic_residual(trace)
    assert report.excluded > 0
    assert len(report.margins) + report.excluded == len(trace.samples)


def test_asymptotic_flags_corrupted_sample():
    trace = trace_ray(ATT, parse_address("(0)"), 12.0, 6.0, 20)
    bad = trace.samples[0]
    corrupted = dataclasses.replace(trace, samples=(
        RaySample(bad.t, bad.z + 0.1, bad.depth, bad.err_bound),
    ) + trace.samples[1:])
    report = asymptotic_residual(corrupted)
    assert not report.all_positive
    assert report.margins[0][1] < 0.0


# -- continuity between rays -----------------------------------------------


def perturbed_zero_address(n0: int):
    return parse_address(",".join(["0"] * n0) + ",(1)")


def test_continuity_gap_zero_for_equal_addresses():
    s = parse_address("(0)")
    assert continuity_gap(ATT, s, s, 2.0, bound=0, agree=5) == 0.0


def test_continuity_gap_decreases_with_agreement():
    s = parse_address("(0)")
    gaps = [
        continuity_gap(ATT, s, perturbed_zero_address(n0), 0.08,
                       bound=1, agree=n0)
        for n0 in (5, 10, 15, 20)
    ]
    assert all(b < a for a, b in zip(gaps, gaps[1:])), gaps
    assert all(g > 0.0 for g in gaps)


def test_continuity_gap_small_at_moderate_potential():
    s = parse_address("(0)")
    gap = continuity_gap(ATT, s, perturbed_zero_address(20), 2.0,
                         bound=1, agree=20)
    assert gap < 1e-6


def test_continuity_membership_checks():
    s = parse_address("(0)")
    with pytest.raises(PreconditionError):
        continuity_gap(ATT, s, parse_address("1,(0)"), 2.0, bound=1, agree=5)
    with pytest.raises(PreconditionError):
        continuity_gap(ATT, s, parse_address("5,(0)"), 2.0, bound=0, agree=0)
    with pytest.raises(PreconditionError):
        continuity_gap(ATT, s, s, 0.0)


# -- tail diagnostics ------------------------------------------------------


def test_attracting_ray_lands_at_the_repelling_fixed_point():
    repelling = brentq(lambda z: math.exp(z) - 2.0 - z, 1.0, 2.0, xtol=1e-14)
    trace = trace_ray(ATT, parse_address("(0)"), 12.0, 0.02, 220)
    report = tail_diagnostic(trace)
    assert report.verdict is Verdict.LANDS_FINITE
    assert report.z_star.imag == 0.0
    assert abs(report.z_star.real - repelling) < 1e-6


def test_tail_inconclusive_when_stopped_high():
    trace = trace_ray(ATT, parse_address("(0)"), 12.0, 0.5, 40)
    assert tail_diagnostic(trace).verdict is Verdict.INCONCLUSIVE


def test_tail_unbounded_other_for_far_strips():
    # |Im z| sits near 2 pi 160000 > 1e6 while Re z stays moderate
    s = parse_address("(160000)")
    trace = trace_ray(ATT, s, 5.0, 3.0, 25)
    report = tail_diagnostic(trace)
    assert report.verdict is Verdict.UNBOUNDED_OTHER
    assert set(report.strip_estimates) == {160000}


def test_tail_needs_enough_samples():
    trace = trace_ray(ATT, parse_address("(0)"), 12.0, 1.0, 19)
    with pytest.raises(PreconditionError):
        tail_diagnostic(trace)


# -- symmetries ------------------------------------------------------------


def test_vertical_translation_symmetry():
    lifted = parse_address("1,(1)")  # canonically (1): first entry raised
    base = parse_address("0,(1)")
    for t in (0.5, 1.0, 3.0, 8.0):
        za = trace_point(MIS, base, t).z
        zb = trace_point(MIS, parse_address("(1)"), t).z
        assert abs(zb - (za + TWO_PI * 1j)) < 1e-10
    assert lifted == parse_address("(1)")


def test_conjugation_symmetry_for_real_kappa():
    pos = parse_address("1,(2)")
    neg = parse_address("-1,(-2)")
    for t in (0.7, 2.0, 9.0):
        za = trace_point(ATT, pos, t).z
        zb = trace_point(ATT, neg, t).z
        assert abs(zb - za.conjugate()) < 1e-10


# -- serialization ---------------------------------------------------------


def test_trace_json_shape():
    trace = trace_ray(MIS, parse_address("0,(1)"), 12.0, 0.05, 60)
    doc = trace_to_json(trace)
    assert set(doc) == {"kappa", "address", "eps", "samples", "branchLog",
                        "tail"}
    assert doc["kappa"] == [MIS.kappa.real, MIS.kappa.imag]
    assert doc["address"] == "0,(1)"
    assert doc["eps"] == trace.eps
    assert len(doc["samples"]) == len(trace.samples)
    for item in doc["samples"]:
        assert set(item) == {"t", "z", "depth", "err"}
    assert doc["tail"]["verdict"] == "LANDS_FINITE"
    assert "zStar" in doc["tail"]["evidence"]
    rebuilt = json.loads(json.dumps(doc))
    assert rebuilt == doc


def test_trace_json_short_trace_tail_note():
    trace = trace_ray(ATT, parse_address("(0)"), 12.0, 6.0, 5)
    doc = trace_to_json(trace)
    assert doc["tail"]["verdict"] == "INCONCLUSIVE"
    assert "note" in doc["tail"]["evidence"]
