"""
Minimal model of a matrix dg category
=====================================

A small dg category of upper-triangular matrices is pulled back to its
cohomology.  The result is a minimal A-infinity structure whose arity-three
part is compared with the familiar tree sum built from the homotopy.
"""

import itertools
from fractions import Fraction

from hptransfer import ainfty as ai
from hptransfer.graded import cohomology_contraction
from hptransfer.testkit import GenParams, matrix_dg_category, tree_formula_m3

# Five points with degrees in [-1, 1], dealt to two objects.
p = GenParams(object_count=2, degree_window=(-1, 1), seed=3, density=Fraction(2, 3))
B, product = matrix_dg_category(p, points=5)
mB = ai.dg_category_structure(B, product, 4)
print("total dimension", B.total_dim(), "Stasheff holds:", ai.is_ainf(mB).ok)

# A contraction onto cohomology, then the transfer along the inclusion.
C = cohomology_contraction(B)
assert not C.violations()
ident = {x: x for x in B.objects}
i = ai.chain_map_morphism(C.reduced, B, ident, C.include, 4)
mH, I = ai.transfer_from_target(i, mB, contraction=C)
H = C.reduced
print("cohomology dimensions", {xy: H.dim(*xy) for xy in H.pairs()})
print("transferred structure is A-infinity:", ai.is_ainf(mH).ok)
print("comparison is a morphism:", ai.is_morphism(I, mH, mB).ok)

# The arity-three component against the tree sum (our homotopy convention flips its sign).
agree, nonzero, total = 0, 0, 0
for xs in itertools.product(B.objects, repeat=4):
    for word in itertools.product(*[range(H.dim(xs[k], xs[k + 1])) for k in range(3)]):
        want = {k: -v for k, v in tree_formula_m3(C, product, xs, word).items()}
        nonzero += bool(want)
        total += 1
        agree += want == dict(mH.row(xs, word))
print(f"m3 matches the tree sum on {agree} of {total} words ({nonzero} nonzero)")

# Going back: the quasi-inverse of the comparison morphism.
q = ai.quasi_inverse(I, mH, mB)
print("H(G) o H(F) is the identity:",
      ai.compose_morphisms(q.HG, q.HF).equals(ai.identity_morphism(q.induced.source.contraction.reduced, 4)))
