"""
Bundles on disk and the command line
====================================

Structures travel between runs as JSON bundles with exact coefficients.
This walks through generating an isomorphic pair, verifying it, and inverting
the isomorphism, through the same entry point the ``hptransfer`` command uses.
"""

import tempfile
from pathlib import Path

from hptransfer.bundle import load
from hptransfer.cli import main

work = Path(tempfile.mkdtemp())
pair = work / "pair.json"

# Two structures related by a random gauge F, over the field with 7 elements.
main(["gen", "ainf-iso", "--seed", "2", "--field", "Fp:7", "--out", str(pair)])
b = load(pair)
print("collections:", sorted(b.collections), "field:", b.field.name)

# Exit code 0 means the morphism equations hold exactly.
code = main(["check-morphism", str(pair), "--morphism", "F", "--source-structure", "mA",
             "--target-structure", "mB"])
print("check-morphism exit code", code)

# Inverting writes a new bundle holding the inverse.
code = main(["invert", str(pair), "--morphism", "F", "--out", str(work / "inverse.json")])
print("invert exit code", code, "->", sorted(load(work / "inverse.json").collections))

# Asking for a structure that does not exist is an input error (exit code 2).
print("bad request exit code", main(["check-ainf", str(pair), "--structure", "missing"]))
