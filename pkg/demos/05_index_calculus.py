"""Composition of index families.

Index families record the leading behaviour of a kernel at each boundary
face of the blown-up double space.  Composition pulls back to the triple
space, multiplies, and pushes forward.

    python3 demos/05_index_calculus.py
"""
from ccscatter.errors import SymbolicOrderError
from ccscatter.indexset import (FAMILY_DATA, FAMILY_F, FAMILY_H, FAMILY_I, FAMILY_M,
                                FAMILY_PSI0, compose_families, contained_in,
                                mapping_on_functions)

# %% model resolvent composed with a residual family
print("M =\n" + FAMILY_M.table())
print("\nF =\n" + FAMILY_F.table())
print("\nM o F =\n" + compose_families(FAMILY_M, FAMILY_F).table())

# %% the residual family is (almost) closed under composition
ff = compose_families(FAMILY_F, FAMILY_F)
print("\nF o F =\n" + ff.table())
print("F o F contained in F:", all(contained_in(ff[f], FAMILY_F[f]) for f in ff.space.faces))
try:
    compose_families(compose_families(ff, FAMILY_F), FAMILY_F)
except SymbolicOrderError as exc:
    print("F^4:", exc)

# %% Poisson operators and action on functions
print("\nM o H == I:", compose_families(FAMILY_M, FAMILY_H) == FAMILY_I)
print("Psi0 o H == H:", compose_families(FAMILY_PSI0, FAMILY_H) == FAMILY_H)
print("M u:", mapping_on_functions(FAMILY_M, FAMILY_DATA))
