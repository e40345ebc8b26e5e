import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from tcenter.expr import parse_poly
from tcenter.field import boundary_point, formal_nilpotent_field, pair_factors, reduced_hamiltonian, rotation_field, strong_integral
from tcenter.flow import period
from tcenter.matrix import Jet2
from tcenter.shift import BranchConflict, FlowShift, LinearMap, MapSpec, PolyMap
from tcenter.jet import (
    JetClass,
    JetTag,
    MarginViolated,
    NotNF2,
    NumericalBreakdown,
    boundary_rotation_family,
    classify_jet,
    collect_jet_image,
    concatenate_families,
    jet_at_origin,
    jet_estimate,
    jet_of_flow_map,
    jet_report,
    normalize_family,
    normalize_to_kernel,
    rotation_number,
)

ROT, ROT_I = rotation_field()
PAIR = reduced_hamiltonian(pair_factors())
PAIR_I = strong_integral(pair_factors())
NIL = formal_nilpotent_field(1)

entries = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def invertible_linear():
    return st.tuples(entries, entries, entries, entries).filter(lambda m: m[0] * m[3] - m[1] * m[2] != 0)


def test_jet_examples():
    assert jet_at_origin(MapSpec.identity()) == Jet2.identity()
    M = LinearMap((("1/2", 3), (-1, 2)))
    assert jet_at_origin(MapSpec((M,))) == Jet2.of(M.m)
    est = jet_estimate(MapSpec.flow_shift(0.7), PAIR)
    assert est.matrix.max_abs_diff(Jet2.identity()) <= 1e-6
    assert est.error <= 1e-6


def test_poly_jet_is_exact():
    m = MapSpec((PolyMap(parse_poly("2*x + y^2 - x*y"), parse_poly("-y + x^3")),))
    assert jet_at_origin(m) == Jet2(2, 0, 0, -1)


@settings(max_examples=20, deadline=None)
@given(invertible_linear(), invertible_linear(), st.floats(-1, 1))
def test_chain_rule(m1, m2, tau):
    a = MapSpec((LinearMap(((m1[0], m1[1]), (m1[2], m1[3]))),))
    b = MapSpec((LinearMap(((m2[0], m2[1]), (m2[2], m2[3]))),))
    s = MapSpec.flow_shift(tau)
    comp = a.then(s).then(b)
    expect = jet_at_origin(b, ROT) @ jet_at_origin(s, ROT) @ jet_at_origin(a, ROT)
    assert jet_at_origin(comp, ROT).max_abs_diff(expect) <= 1e-5


def test_jet_of_flow_map_examples():
    assert jet_of_flow_map(Jet2(0, 1, 0, 0), 2) == Jet2(1, 2, 0, 1)
    assert jet_of_flow_map(Jet2.zero(), 3.7).max_abs_diff(Jet2.identity()) == 0
    r = jet_of_flow_map(Jet2(0, -2, 2, 0), math.pi / 4)
    assert r.max_abs_diff(Jet2(0, -1, 1, 0)) <= 1e-15


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(-3, 3))
def test_expm_matches_scipy(m, tau):
    N = Jet2(*m)
    got = jet_of_flow_map(N, tau).array()
    assert np.max(np.abs(got - expm(tau * N.array()))) <= 1e-10 * max(1.0, float(np.max(np.abs(got))))


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(-1, 1), st.floats(-1, 1))
def test_one_parameter_group(m, s, t):
    N = Jet2(*m)
    lhs = (jet_of_flow_map(N, s) @ jet_of_flow_map(N, t)).array()
    rhs = jet_of_flow_map(N, s + t).array()
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, float(np.max(np.abs(rhs))))


@pytest.mark.parametrize("fs", [PAIR, NIL, ROT], ids=["nf1", "nf2", "rotation"])
@pytest.mark.parametrize("tau", [0.3, -1.1])
def test_flow_jet_identity(fs, tau):
    fd = jet_at_origin(MapSpec.flow_shift(tau), fs)
    assert fd.max_abs_diff(jet_of_flow_map(fs.nabla, tau)) <= 1e-5


def test_classify_examples():
    assert classify_jet(Jet2(1, 5, 0, 1)) == JetClass(JetTag.APlus, 5)
    assert classify_jet(Jet2(-1, 3, 0, -1)) == JetClass(JetTag.AMinus, 3)
    assert classify_jet(Jet2(2, 0, 0, 2)).tag is JetTag.Other
    assert classify_jet(Jet2(1, 0, 0, -1)).tag is JetTag.APrimePlus
    assert classify_jet(Jet2(-1, 2, 0, 1)).tag is JetTag.APrimeMinus
    k = classify_jet(Jet2.identity())
    assert k.tag is JetTag.Kernel and JetTag.APlus in k.families


@given(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3), st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3))
def test_nilpotent_exponentials_are_aplus(a, tau):
    jc = classify_jet(jet_of_flow_map(Jet2(0, a, 0, 0), tau))
    assert jc.tag is JetTag.APlus and abs(jc.d - a * tau) <= 1e-5


def test_collect_jet_image():
    assert {c.tag for c in collect_jet_image(ROT, [MapSpec.identity()])} == {JetTag.Kernel}
    flows = [MapSpec.flow_shift(t) for t in (0.5, 1.0, -2.0)]
    tags = collect_jet_image(NIL, flows)
    assert {c.tag for c in tags} == {JetTag.APlus}
    assert sorted(c.d for c in tags) == [-2.0, 0.5, 1.0]


def test_collect_adds_mirror_class():
    mirror = PolyMap(parse_poly("x"), parse_poly("-y"))
    maps = [MapSpec.flow_shift(0.0), MapSpec((FlowShift(0.0), mirror))]
    tags = {c.tag for c in collect_jet_image(PAIR, maps)}
    assert JetTag.APrimePlus in tags


def test_jet_report_is_json_ready():
    rep = jet_report(MapSpec((LinearMap(((1, 2), (0, 1))),)))
    assert rep["class"] == "APlus" and rep["d"] == 2 and rep["error"] == 0


def test_breakdown_on_nonsmooth_map():
    from tcenter.shift import CallableMap

    kink = CallableMap(lambda Z: np.column_stack([Z[:, 0] + np.sign(Z[:, 0]) * 1e-3 * np.abs(Z[:, 0]) ** 0.5, Z[:, 1]]))
    with pytest.raises(NumericalBreakdown):
        jet_at_origin(MapSpec((kink,)))


# -- rotation number --------------------------------------------------------------

@pytest.fixture(scope="module")
def theta_b():
    return period(PAIR, PAIR_I, boundary_point(PAIR_I, angle=0.0)).theta


def test_rotation_number_examples(theta_b):
    full = boundary_rotation_family(theta_b)
    assert rotation_number(PAIR, PAIR_I, full) == 1
    assert rotation_number(PAIR, PAIR_I, lambda k: MapSpec.identity()) == 0
    assert rotation_number(PAIR, PAIR_I, concatenate_families(full, full)) == 2


def test_rotation_number_additive_with_reverse(theta_b):
    full = boundary_rotation_family(theta_b)
    back = boundary_rotation_family(theta_b, -1)
    assert rotation_number(PAIR, PAIR_I, back) == -1
    assert rotation_number(PAIR, PAIR_I, concatenate_families(full, back)) == 0


def test_rotation_number_errors(theta_b):
    with pytest.raises(MarginViolated):
        rotation_number(PAIR, PAIR_I, boundary_rotation_family(theta_b / 2))
    with pytest.raises(BranchConflict):
        rotation_number(PAIR, PAIR_I, boundary_rotation_family(theta_b, 3), K=5)


# -- normalization -------------------------------------------------------------------

def test_normalize_examples():
    member = MapSpec.flow_shift(0.8)
    assert jet_at_origin(normalize_to_kernel(NIL, member, 1.0), NIL).max_abs_diff(Jet2.identity()) <= 1e-6
    assert normalize_to_kernel(NIL, member, 0.0) is member
    half = jet_at_origin(normalize_to_kernel(NIL, member, 0.5), NIL)
    assert half.max_abs_diff(Jet2(1, 0.4, 0, 1)) <= 1e-6


def test_normalize_keeps_kernel_members():
    member = MapSpec.identity()
    for t in (0.0, 0.3, 1.0):
        assert normalize_to_kernel(NIL, member, t) is member


def test_normalize_family():
    fam = normalize_family(NIL, lambda k: MapSpec.flow_shift(2 * k), 1.0)
    for k in (0.25, 0.75):
        assert jet_at_origin(fam(k), NIL).max_abs_diff(Jet2.identity()) <= 1e-6


def test_normalize_requires_nf2():
    with pytest.raises(NotNF2):
        normalize_to_kernel(ROT, MapSpec.identity(), 1.0)
