"""
Transferring a pre-Calabi-Yau structure
=======================================

A pre-CY structure lives on cyclic words of hom spaces.  Starting from a
random one on a small dg quiver, push it to cohomology and check that the
result is still cyclically invariant and satisfies the Maurer-Cartan equation.
"""

from dataclasses import replace

from hptransfer import ainfty as ai
from hptransfer import precy as pc
from hptransfer.multi import is_cyclically_invariant
from hptransfer.testkit import SUITE_PARAMS, random_dg_quiver, random_pcy_structure

p = replace(SUITE_PARAMS, seed=11)
A = random_dg_quiver(p)
d, lmax, nmax = 1, 2, 4

# Components with one and two output groups, all moved by a random gauge.
M = random_pcy_structure(A, d, lmax, nmax, p)
lengths = sorted({len(k) for k in M.comps})
print("component lengths present:", lengths)
print("Maurer-Cartan:", pc.mc_defect(M).is_zero(), " invariant:", is_cyclically_invariant(M))

# Minimal model: the length-one, size-two part vanishes on cohomology.
H, MH, P = pc.pcy_minimal_model(A, M)
print("cohomology total dimension", H.total_dim(), "of", A.total_dim())
print("minimal:", not any(len(k) == 1 and len(k[0]) == 2 for k in MH.comps))
print("Maurer-Cartan:", pc.mc_defect(MH).is_zero(), " invariant:", is_cyclically_invariant(MH))
print("P is a pre-CY morphism:", pc.pcy_mi_defect(P, M, MH).is_zero())

# The single-group part is the ordinary A-infinity minimal model.
_, mH, _ = ai.minimal_model(A, pc.restrict_to_ainf(M))
print("agrees with the A-infinity transfer:", pc.restrict_to_ainf(MH).equals(mH))
