"""Built-in group catalog: Heisenberg, Engel, abelian R^n, free step-2."""

from __future__ import annotations

import numpy as np

from .algebra import GradedAlgebra
from .errors import InputError


def heisenberg() -> GradedAlgebra:
    """Three dimensional Heisenberg algebra, [X, Y] = Z."""
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    return GradedAlgebra("heisenberg", [2, 1], c, labels=["X", "Y", "Z"])


def engel() -> GradedAlgebra:
    """Four dimensional Engel algebra: [X1, X2] = X3, [X1, X3] = X4."""
    c = np.zeros((4, 4, 4))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    c[0, 2, 3] = 1.0
    c[2, 0, 3] = -1.0
    return GradedAlgebra("engel", [2, 1, 1], c, labels=["X1", "X2", "X3", "X4"])


def abelian(n) -> GradedAlgebra:
    """R^n with all brackets zero (a single layer)."""
    n = int(n)
    if n < 1:
        raise InputError("abelian dimension must be >= 1")
    c = np.zeros((n, n, n))
    return GradedAlgebra(f"abelian{n}", [n], c, labels=[f"e{i}" for i in range(n)])


def free_step2(rank) -> GradedAlgebra:
    """Free nilpotent algebra of step 2 on ``rank`` generators.

    Layer 1 has the generators, layer 2 one basis vector per unordered
    generator pair, [e_i, e_j] = e_{ij} for i < j.
    """
    r = int(rank)
    if r < 2:
        raise InputError("free step-2 rank must be >= 2")
    n2 = r * (r - 1) // 2
    n = r + n2
    c = np.zeros((n, n, n))
    labels = [f"X{i + 1}" for i in range(r)]
    idx = r
    for i in range(r):
        for j in range(i + 1, r):
            c[i, j, idx] = 1.0
            c[j, i, idx] = -1.0
            labels.append(f"Z{i + 1}{j + 1}")
            idx += 1
    return GradedAlgebra(f"free2-{r}", [r, n2], c, labels=labels)


def builtin_names():
    return ["heisenberg", "engel", "abelian<N>", "free2-<R>"]


def get(name) -> GradedAlgebra:
    """Look up a built-in algebra by name (e.g. "heisenberg", "abelian3")."""
    name = str(name).strip().lower()
    if name == "heisenberg":
        return heisenberg()
    if name == "engel":
        return engel()
    if name.startswith("abelian"):
        try:
            return abelian(int(name[len("abelian"):]))
        except ValueError:
            pass
    if name.startswith("free2-"):
        try:
            return free_step2(int(name[len("free2-"):]))
        except ValueError:
            pass
    raise InputError(
        f"unknown group {name!r}; built-ins: {', '.join(builtin_names())}"
    )
