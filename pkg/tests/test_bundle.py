import json
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hptransfer.bundle import Bundle, BundleError, parse, serialize
from hptransfer.exactla import GF, QQ
from hptransfer.testkit import GenParams, random_collection, random_dg_quiver

P = GenParams(object_count=2, min_dim=1, max_dim=2, density=Fraction(2, 3))


def _doc(b):
    return json.loads(serialize(b))


class TestRoundTrip:
    def test_empty(self):
        b = Bundle()
        assert parse(serialize(b)) == b

    def test_quiver_only(self):
        b = Bundle()
        b.add_quiver("A", random_dg_quiver(P))
        back = parse(serialize(b))
        assert back == b
        assert back.quivers["A"].is_dg()

    @given(st.integers(0, 10**6), st.sampled_from(["hom", "multi"]), st.sampled_from(["structure", "morphism"]),
           st.sampled_from([QQ, GF(7), GF(11)]))
    @settings(max_examples=30, deadline=None)
    def test_collections(self, seed, kind, role, field):
        p = replace(P, seed=seed, field=field)
        C = random_collection(kind, role, p, nmax=3, lmax=2, d=seed % 3 - 1)
        b = Bundle(field)
        b.add("C", C)
        text = serialize(b)
        back = parse(text)
        assert serialize(back) == text
        assert back.collections["C"].equals(C)

    def test_pre_cy_seed_28(self):
        from hptransfer.testkit import SUITE_PARAMS, random_pcy_structure
        p = replace(SUITE_PARAMS, seed=28)
        A = random_dg_quiver(p)
        b = Bundle()
        b.add("M", random_pcy_structure(A, 1, 2, 4, p))
        once = serialize(parse(serialize(b)))
        assert once == serialize(b) and serialize(parse(once)) == once

    def test_serialization_is_stable(self):
        b = Bundle()
        b.add("C", random_collection("multi", "structure", P, nmax=3, lmax=2))
        assert serialize(b) == serialize(parse(serialize(b)))


def _collection_bundle(kind="hom"):
    b = Bundle()
    b.add("C", random_collection(kind, "structure", replace(P, density=Fraction(1)), nmax=3, lmax=2, d=1))
    return b


class TestErrors:
    def test_bad_json(self):
        with pytest.raises(BundleError, match="line"):
            parse("{not json")

    def test_schema(self):
        doc = _doc(Bundle())
        doc["schema"] = "other/2"
        with pytest.raises(BundleError) as exc:
            parse(json.dumps(doc))
        assert exc.value.where == "schema"

    def test_field(self):
        doc = _doc(Bundle())
        doc["field"] = "Fp:4"
        with pytest.raises(BundleError) as exc:
            parse(json.dumps(doc))
        assert exc.value.where == "field"

    def test_missing_field_named(self):
        doc = _doc(Bundle())
        del doc["quivers"]
        with pytest.raises(BundleError, match="quivers"):
            parse(json.dumps(doc))

    def test_non_homogeneous(self):
        doc = _doc(_collection_bundle())
        comps = doc["collections"]["C"]["components"]
        doc["collections"]["C"]["degree"] = 0
        with pytest.raises(BundleError) as exc:
            parse(json.dumps(doc))
        assert exc.value.where == "collections.C.components[0]"
        assert "homogeneous" in str(exc.value) and comps

    def test_non_invariant(self):
        doc = _doc(_collection_bundle("multi"))
        comps = doc["collections"]["C"]["components"]
        two = next(k for k, e in enumerate(comps) if len(e["index"]) == 2)
        comps[two]["coeff"] = str(int(comps[two]["coeff"].split("/")[0]) + 1) + "/1"
        with pytest.raises(BundleError) as exc:
            parse(json.dumps(doc))
        assert exc.value.where == "collections.C.components"

    def test_unknown_label(self):
        doc = _doc(_collection_bundle())
        doc["collections"]["C"]["components"][0]["output"] = "nope"
        with pytest.raises(BundleError) as exc:
            parse(json.dumps(doc))
        assert exc.value.where.startswith("collections.C.components[0]")

    def test_float_coefficient(self):
        doc = _doc(_collection_bundle())
        doc["collections"]["C"]["components"][0]["coeff"] = 0.5
        with pytest.raises(BundleError, match="coeff"):
            parse(json.dumps(doc))
