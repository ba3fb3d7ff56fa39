import math

import numpy as np
import pytest

from parisphere.chaos import (
    NotApplicable,
    cross_overlap_prediction,
    frsb_coupling_demo,
    q_zero,
    theorem1_check,
    theorem2_check,
)
from parisphere.mixture import MixtureSpec, parse_mixture
from parisphere.solver import frsb_solve, parisi_solve

SPEC4 = parse_mixture("4:1")
MIX07 = MixtureSpec({2: np.sqrt(0.93), 4: np.sqrt(0.07)})


def test_q_zero_identical_solutions():
    sol = parisi_solve(SPEC4, 2.0)
    assert q_zero(sol, 2.0, sol, 2.0) == 1.0


def test_q_zero_differing_masses_at_zero():
    s1 = parisi_solve(SPEC4, 2.0)
    s2 = parisi_solve(SPEC4, 3.0)
    # beta1 m1 != beta2 m2, so the scaled measures differ immediately past 0
    assert q_zero(s1, 2.0, s2, 3.0) == 0.0


def test_q_zero_frsb_pair():
    s1 = frsb_solve(MIX07, 1.0)
    s2 = frsb_solve(MIX07, 1.5)
    q0 = q_zero(s1, 1.0, s2, 1.5)
    assert q0 == pytest.approx(s1.measure.q, abs=1e-6)
    assert q0 > 0.0


def test_q_zero_symmetry():
    s1 = parisi_solve(SPEC4, 2.0)
    s2 = parisi_solve(SPEC4, 3.0)
    assert q_zero(s1, 2.0, s2, 3.0) == q_zero(s2, 3.0, s1, 2.0)
    f1 = frsb_solve(MIX07, 1.0)
    f2 = frsb_solve(MIX07, 1.5)
    assert q_zero(f1, 1.0, f2, 1.5) == pytest.approx(q_zero(f2, 1.5, f1, 1.0), abs=1e-10)


def test_theorem2_pure_even_applicable():
    rep = theorem2_check(SPEC4, 2.0, 3.0, assert_generic=True)
    assert rep.thm2_applicable is True
    assert rep.uncoupled is True
    assert rep.c1 == 0.0 and rep.c2 == 0.0
    assert rep.equivalence_ok is True
    assert rep.generic_asserted is True
    assert "scaled masses" in rep.thm2_reason
    m1, m2 = rep.witnesses["scaled_mass_at_zero"]
    assert abs(m1 - m2) > 1e-6


def test_theorem2_requires_generic_assertion():
    rep = theorem2_check(SPEC4, 2.0, 3.0, assert_generic=False)
    assert rep.thm2_applicable is False
    assert "genericity" in rep.thm2_reason


def test_theorem2_rejections():
    with pytest.raises(ValueError):
        theorem2_check(SPEC4, 2.0, 2.0, assert_generic=True)
    with pytest.raises(ValueError):
        theorem2_check(parse_mixture("3:1,2:0.5"), 2.0, 3.0, assert_generic=True)


def test_theorem2_frsb_pair_not_applicable():
    rep = theorem2_check(MIX07, 1.0, 1.5, assert_generic=True)
    assert rep.thm2_applicable is False
    assert rep.uncoupled is False
    assert rep.q0 > 0
    assert rep.equivalence_ok is True


def test_theorem1_examples():
    ok = theorem1_check(4, 2, 0.2, 2.0, 3.0)
    assert ok.thm1_applicable is True
    assert ok.witnesses["m1"] is not None
    assert ok.predicted_cross_support is not None and len(ok.predicted_cross_support) == 2

    bad_p0 = theorem1_check(3, 2, 0.2, 2.0, 3.0)
    assert bad_p0.thm1_applicable is False
    assert "p0 must be even >= 4" in bad_p0.thm1_reason

    bad_a = theorem1_check(4, 2, 0.3, 2.0, 3.0)
    assert bad_a.thm1_applicable is False
    assert "a must satisfy 0<a<1/4" in bad_a.thm1_reason

    same_beta = theorem1_check(4, 2, 0.2, 2.0, 2.0)
    assert same_beta.thm1_applicable is False


def test_theorem1_trivial_chaos_in_rs_regime():
    rep = theorem1_check(4, 2, 0.2, 0.3, 0.5)
    assert rep.thm1_applicable is True
    assert "trivially" in rep.thm1_reason
    assert rep.predicted_cross_support == (0.0,)


def test_theorem1_notes_fixed_amplitude_flag():
    rep = theorem1_check(4, 2, 0.2, 2.0, 3.0)
    assert any("illustrative" in n for n in rep.notes)


def test_cross_overlap_prediction():
    rs = parisi_solve(SPEC4, 0.5)
    one2 = parisi_solve(SPEC4, 2.0)
    one3 = parisi_solve(SPEC4, 3.0)
    assert cross_overlap_prediction(rs, one2) == (0.0,)
    pred = cross_overlap_prediction(one2, one3)
    q1 = one2.diagnostics["q"]
    q2 = one3.diagnostics["q"]
    assert pred == (0.0, pytest.approx(math.sqrt(q1 * q2), abs=1e-12))
    frsb = frsb_solve(MIX07, 1.0)
    with pytest.raises(NotApplicable):
        cross_overlap_prediction(frsb, one2)


def test_cross_overlap_arithmetic():
    from parisphere.measures import StepCDF
    from parisphere.solver import ParisiSolution
    from parisphere.functional import certify

    def fake(q):
        m = StepCDF(((0.0, 0.5), (q, 1.0)))
        return ParisiSolution(m, "1RSB", 0.0, certify(SPEC4, 2.0, m), {})

    pred = cross_overlap_prediction(fake(0.81), fake(0.64))
    assert pred[1] == pytest.approx(0.72, abs=1e-12)


def test_frsb_coupling_demo():
    rep = frsb_coupling_demo(0.07, 4, 1.0, 1.5)
    q1, q2 = rep.witnesses["q1"], rep.witnesses["q2"]
    assert 0.0 < q1 < q2
    assert rep.q0 == pytest.approx(q1, abs=1e-6)
    assert rep.uncoupled is False
    assert rep.c1 == 0.0 and rep.c2 == 0.0
    assert rep.witnesses["scaled_cdf_max_gap_below_q1"] <= 1e-10
    lhs, rhs = rep.witnesses["scaled_cdf_at_q1"]
    assert lhs > rhs
    assert any("conjecture" in n for n in rep.notes)


def test_frsb_coupling_demo_preconditions():
    from parisphere.solver import PreconditionFailed

    with pytest.raises(PreconditionFailed, match="concavity bound"):
        frsb_coupling_demo(0.2, 4, 1.0, 1.5)
    with pytest.raises(PreconditionFailed, match="beta1"):
        frsb_coupling_demo(0.07, 4, 0.5, 1.5)
    with pytest.raises(PreconditionFailed):
        frsb_coupling_demo(0.07, 3, 1.0, 1.5)


def test_scaled_cdfs_are_beta_free_below_q1():
    s1 = frsb_solve(MIX07, 1.0)
    s2 = frsb_solve(MIX07, 1.5)
    q1 = s1.measure.q
    for t in np.linspace(0.0, q1 * 0.999, 100):
        assert abs(1.0 * s1.measure.cdf_at(float(t)) - 1.5 * s2.measure.cdf_at(float(t))) <= 1e-10


def test_report_json_shape():
    rep = theorem2_check(SPEC4, 2.0, 3.0, assert_generic=True)
    data = rep.to_json_dict()
    assert set(data) >= {"beta1", "beta2", "c1", "c2", "q0", "uncoupled", "thm2_applicable"}
    import json

    json.dumps(data)  # serializable
