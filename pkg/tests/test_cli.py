import json

import pytest

from hptransfer import ainfty as ai
from hptransfer.bundle import Bundle, dump, load
from hptransfer.cli import main
from hptransfer.graded import DgQuiver, GradedSpace


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture
def gen(tmp_path, capsys):
    def make(what, *extra):
        path = tmp_path / f"{what}-{len(list(tmp_path.iterdir()))}.json"
        code, rep = run(capsys, "gen", what, "--out", path, *extra)
        assert code == 0 and rep["ok"]
        return path
    return make


class TestGen:
    def test_embedded_without_out(self, capsys):
        code, rep = run(capsys, "gen", "quiver", "--seed", 3)
        assert code == 0 and rep["bundle"]["schema"].startswith("hptransfer-bundle")

    def test_reproducible(self, gen):
        a, b = gen("ainf", "--seed", 5), gen("ainf", "--seed", 5)
        assert load(a) == load(b)

    def test_prime_field(self, gen):
        assert load(gen("pcy", "--field", "Fp:7", "--max-size", 3, "--max-length", 2)).field.name == "Fp:7"

    def test_bad_density(self, capsys):
        code, _ = run(capsys, "gen", "quiver", "--density", "half")
        assert code == 2


class TestChecks:
    def test_ainf(self, gen, capsys):
        path = gen("ainf", "--seed", 1)
        assert run(capsys, "check-ainf", path)[0] == 0

    def test_ainf_failure(self, gen, capsys):
        path = gen("collection", "--kind", "hom", "--density", "1", "--seed", 2)
        code, rep = run(capsys, "check-ainf", path)
        assert code == 1 and rep["failures"]

    def test_pcy(self, gen, capsys):
        path = gen("pcy", "--max-size", 3, "--max-length", 2, "--d", 1)
        code, rep = run(capsys, "check-pcy", path)
        assert code == 0 and rep["invariance_failures"] == []

    def test_morphism(self, gen, capsys):
        path = gen("ainf-iso", "--seed", 4)
        assert run(capsys, "check-morphism", path, "--source-structure", "mA", "--target-structure", "mB")[0] == 0
        code, _ = run(capsys, "check-morphism", path, "--source-structure", "mA", "--target-structure", "mA")
        assert code == 2   # mA lives on the wrong quiver

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "check-ainf", tmp_path / "nope.json")[0] == 2

    def test_malformed(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{")
        code, rep = run(capsys, "check-ainf", path)
        assert code == 2 and "line" in rep["error"]

    def test_field_mismatch(self, gen, capsys):
        assert run(capsys, "check-ainf", gen("ainf"), "--field", "Fp:5")[0] == 2

    def test_ambiguous_structure(self, gen, capsys):
        assert run(capsys, "check-ainf", gen("quiver"))[0] == 2


class TestConstructions:
    def test_invert_and_compose(self, gen, tmp_path, capsys):
        path = gen("ainf-iso", "--seed", 6)
        inv = tmp_path / "inv.json"
        assert run(capsys, "invert", path, "--morphism", "F", "--out", inv)[0] == 0
        b = load(path)
        G = load(inv).collections["inverse"]
        G.source, G.target = b.quivers["B"], b.quivers["A"]
        b.collections["G"] = G
        merged = tmp_path / "merged.json"
        dump(b, merged)
        comp = tmp_path / "comp.json"
        assert run(capsys, "compose", merged, "--first", "F", "--second", "G", "--out", comp)[0] == 0
        GF = load(comp).collections["composite"]
        assert GF.equals(ai.identity_morphism(GF.source, GF.nmax))

    def test_invert_failure(self, tmp_path, capsys):
        b = Bundle()
        A = DgQuiver.graded(("x",), {("x", "x"): GradedSpace((("e", 0),))})
        b.add("F", ai.HomCollection(A, A, {"x": "x"}, 0, 3))
        path = tmp_path / "zero.json"
        dump(b, path)
        assert run(capsys, "invert", path)[0] == 1

    @pytest.mark.parametrize("direction", ["to-source", "to-target"])
    def test_transfer(self, gen, tmp_path, capsys, direction):
        path = gen("ainf", "--seed", 7)
        b = load(path)
        A = b.quivers["A"]
        b.collections["f"] = ai.identity_morphism(A, 4)
        dump(b, path)
        out = tmp_path / f"{direction}.json"
        code, _ = run(capsys, "transfer", path, "--direction", direction, "--map", "f", "--structure", "m",
                      "--out", out)
        assert code == 0
        assert run(capsys, "check-morphism", out, "--morphism", "F", "--source-structure", "M_source",
                   "--target-structure", "M_target")[0] == 0

    @pytest.mark.parametrize("pcy", [False, True])
    def test_minimal_model(self, gen, tmp_path, capsys, pcy):
        path = gen("pcy" if pcy else "ainf", "--seed", 8, "--max-size", 3, "--max-length", 2)
        out = tmp_path / "mm.json"
        code, rep = run(capsys, "minimal-model", path, "--out", out, *(["--pcy"] if pcy else []))
        assert code == 0 and rep["cohomology_dims"]
        check = "check-pcy" if pcy else "check-ainf"
        assert run(capsys, check, out, "--structure", "MH")[0] == 0

    def test_quasi_inverse(self, gen, capsys):
        path = gen("ainf-iso", "--seed", 9, "--max-size", 3)
        code, rep = run(capsys, "quasi-inverse", path, "--source-structure", "mA", "--target-structure", "mB")
        assert code == 0 and rep["HG_HF_identity"] and rep["HF_HG_identity"]

    def test_cohomology(self, gen, tmp_path, capsys):
        out = tmp_path / "h.json"
        code, _ = run(capsys, "cohomology", gen("quiver", "--seed", 10), "--out", out)
        assert code == 0
        b = load(out)
        assert set(b.collections) == {"i", "p", "h"} and b.collections["h"].degree == -1

    def test_cohomology_not_dg(self, gen, capsys):
        path = gen("quiver", "--not-dg", "--seed", 7, "--min-dim", 3, "--max-dim", 3, "--objects", 1,
                   "--density", "1", "--min-degree", 0, "--max-degree", 2)
        assert not load(path).quivers["A"].is_dg()
        code, rep = run(capsys, "cohomology", path)
        assert code == 1 and rep["square_defects"]


class TestSuite:
    def test_small(self, capsys):
        code, rep = run(capsys, "suite", "--seeds", 2, "--max-size", 3, "--max-length", 2, "--ainf-size", 4)
        assert code == 0 and rep["checked"] == 2 * 7

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["suite", "--ainf-only", "--pcy-only"])
        assert exc.value.code == 2
