import json

import numpy as np
import pytest

from conftest import random_linear, rot, warp_about
from trajsc.benchmark import shape_by_name
from trajsc.distance import DistanceCache
from trajsc.errors import TooFewSamples
from trajsc.groups import WarpGroup as G
from trajsc.pipeline import (
    EvalReport,
    ShapeFamily,
    evaluate_generation,
    evaluate_verification,
    prf,
    recover_family,
    select_generation,
    verify,
    verify_any,
)
from trajsc.trajectory import Trajectory

OTHERS = ["circle", "square", "parabola", "sine wave", "deltoid", "figure-8", "Archimedean spiral"]


def shape(name, id=None, L=np.eye(2), t=(0, 0)):
    return Trajectory(id or name, warp_about(shape_by_name(name).points(), L, t))


@pytest.fixture(scope="module")
def cache():
    return DistanceCache()


def test_majority_recovers_pentagon(cache):
    rng = np.random.default_rng(3)
    members = [
        shape("pentagon", f"p{i}", random_linear(G.SIM, rng) * (1.3 if i % 2 else 0.8), rng.uniform(-60, 60, 2))
        for i in range(12)
    ]
    others = [shape(n, f"o{i}", rot(0.3 * i)) for i, n in enumerate(OTHERS)]
    fam = recover_family(members + others, "majority", cache=cache)
    assert fam.group == G.SIM
    assert fam.prototype.id.startswith("p")
    assert set(fam.support) == {m.id for m in members}


def test_identical_pair_hierarchical(cache):
    a = shape("parabola", "a")
    fam = recover_family([a, Trajectory("b", a.points)], "hierarchical", cache=cache)
    assert fam.group == G.RIGID
    assert set(fam.support) == {"a", "b"}


def test_oracle_bypass(cache):
    ts = [shape("circle", "c0"), shape("circle", "c1", 1.5 * np.eye(2)), shape("square", "s")]
    fam = recover_family(ts, "oracle:SimRef", cache=cache)
    assert fam.group == G.SIM_REF
    assert set(fam.support) == {"c0", "c1"}


def test_multi_returns_list(cache):
    ts = [shape("circle", "c0"), shape("circle", "c1", rot(1.0))]
    fams = recover_family(ts, "hierarchical_multi", cache=cache)
    assert isinstance(fams, list) and len(fams) == 1


def test_too_few():
    with pytest.raises(TooFewSamples):
        recover_family([shape("circle")], "majority")


class TestSelectAndVerify:
    def test_singleton(self):
        t = shape("circle")
        assert select_generation(ShapeFamily(t, G.SIM)) == t

    def test_prototype_in_support(self):
        with pytest.raises(ValueError):
            ShapeFamily(shape("circle"), G.SIM, support=("other",))

    def test_prototype_matches(self):
        fam = ShapeFamily(shape("pentagon"), G.SIM_REF)
        v = verify(fam, fam.prototype)
        assert v.matched and v.distance < 1e-6

    def test_in_group_warp_matches(self):
        fam = ShapeFamily(shape("pentagon"), G.SIM_REF)
        q = shape("pentagon", "q", random_linear(G.SIM_REF, np.random.default_rng(5)), (20, 30))
        assert verify(fam, q).matched

    def test_sheared_query_rejected(self):
        fam = ShapeFamily(shape("pentagon"), G.SIM_REF)
        q = shape("pentagon", "q", np.array([[1.0, 0.4], [0.0, 1.0]]))
        v = verify(fam, q)
        assert not v.matched and v.distance > fam.tau

    def test_verify_any_prefers_match(self):
        circle = ShapeFamily(shape("circle"), G.SIM)
        square = ShapeFamily(shape("square"), G.SIM)
        v = verify_any([circle, square], shape("square", "q", 0.7 * np.eye(2)))
        assert v.matched and v.family is square

    def test_family_roundtrip(self):
        fam = ShapeFamily(shape("circle"), G.SIM, tau=0.75)
        assert ShapeFamily.from_dict(json.loads(json.dumps(fam.to_dict()))) == fam


class TestEvaluate:
    def test_purity_definition(self, cache):
        truth = ShapeFamily(shape("pentagon", "proto"), G.RIGID)
        true = [shape("pentagon", f"t{i}", rot(0.5 * i), (10 * i, 0)) for i in range(8)]
        scaled = [shape("pentagon", f"f{i}", 1.5 * rot(i)) for i in range(2)]
        strangers = [shape("circle", "x0"), shape("parabola", "x1")]
        rep = evaluate_generation([("task", true + scaled + strangers, truth)], "oracle:Sim", cache=cache)
        assert rep.accuracy == pytest.approx(0.8)
        assert rep.direct_accuracy == pytest.approx(8 / 12)
        assert rep.per_task[0].chosen_group == G.SIM

    def test_all_true(self, cache):
        truth = ShapeFamily(shape("square", "proto"), G.SIM)
        samples = [shape("square", f"s{i}", (1 + 0.2 * i) * rot(i)) for i in range(4)]
        for crit in ("majority", "hierarchical", "most", "least", "hierarchical_multi", "oracle"):
            rep = evaluate_generation([("sq", samples, truth)], crit, cache=cache)
            assert rep.accuracy == 1.0 and rep.direct_accuracy == 1.0

    def test_failures_recorded(self, cache):
        truth = ShapeFamily(shape("square", "proto"), G.SIM)
        rep = evaluate_generation([("bad", [shape("square")], truth)], "majority", cache=cache)
        assert rep.failures and "TooFewSamples" in rep.failures[0].error

    def test_verification_perfect(self, cache):
        samples = [shape("circle", f"c{i}", (1 + 0.3 * i) * np.eye(2)) for i in range(3)]
        pairs = [
            ("t", samples, shape("circle", "q0", 0.6 * np.eye(2)), True),
            ("t", samples, shape("square", "q1"), False),
        ]
        rep = evaluate_verification(pairs, "majority", cache=cache)
        assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)
        oracle = evaluate_verification(pairs, "oracle", cache=cache, oracle_groups={"t": G.SIM})
        assert oracle.f1 == 1.0

    def test_oracle_needs_groups(self, cache):
        samples = [shape("circle", "a"), shape("circle", "b")]
        rep = evaluate_verification([("t", samples, shape("circle", "q"), True)], "oracle", cache=cache)
        assert rep.failures

    def test_report_roundtrip(self, cache):
        truth = ShapeFamily(shape("square", "proto"), G.SIM)
        samples = [shape("square", f"s{i}", (1 + 0.2 * i) * np.eye(2)) for i in range(3)]
        rep = evaluate_generation([("sq", samples, truth)], "majority", cache=cache)
        assert EvalReport.from_dict(json.loads(json.dumps(rep.to_dict()))) == rep


class TestPrf:
    def test_all_correct(self):
        assert prf([True, False, True], [True, False, True]) == (1.0, 1.0, 1.0)

    def test_everything_true(self):
        p, r, f = prf([True] * 4, [True, False, True, False])
        assert (p, r) == (0.5, 1.0) and f == pytest.approx(2 / 3)

    def test_zero_conventions(self):
        assert prf([False, False], [True, False]) == (0.0, 0.0, 0.0)
        assert prf([], []) == (0.0, 0.0, 0.0)
