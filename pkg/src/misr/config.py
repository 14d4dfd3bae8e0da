"""Tunable constants shared by the constructions.

The analysis only fixes these up to "large enough"; defaults are chosen so
the desk-scale constructions run, and every bound is checked against the
configured value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Constants:
    c_star: int = 200  # cells per unit of r in an r-good partition
    c1: int = 8  # boundary growth of the boundary-reducing split
    c2: int = 8  # boundary growth of the balancing split
    c3: int = 128  # loss constant of the triple decomposition
    c_tilde: int = 128  # loss constant of the grid-aligned decompositions
    retries: int = 64  # seeds tried by randomized constructions
    w: int = 64  # below this optimum the grid builder uses its exact branch
    exhaustive_cycles: int = 25  # dual size up to which cycles are enumerated
    strict: bool = False  # enforce the literal numeric preconditions

    @property
    def c_star_aligned(self) -> int:
        """Cell bound factor of grid-aligned partitions, in units of r."""
        return 4 * 144 * self.c_star * 8

    def with_(self, **kw) -> "Constants":
        return replace(self, **kw)


DEFAULT = Constants()
