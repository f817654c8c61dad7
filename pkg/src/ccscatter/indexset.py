"""Index sets and index families on the blown-up single, double and triple spaces.

Each boundary face carries one *dominant* entry:

* ``INF``                       - rapid vanishing (the empty index set),
* ``Regular(base, trunc, plus)`` - leading order ``base + trunc`` where base
  is linear in n and in the indicial roots sigma_v evaluated at a variable v,
* ``Bracket(offset, plus)``      - a half-step ladder [a] starting at a; the
  ``plus`` flag ([a]_+) allows a log at leading order.

``ABSENT`` marks a face of a product space that no pulled-back defining
function involves (printed ``--`` in the charts); it is the additive identity.

Pull-back adds entries, push-forward takes extended unions over preimages.
Composition of operator families pulls the left factor back by psi_LM, the
right one by psi_MR, adds face by face, checks the middle faces and pushes
forward by psi_LR.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import IntegrabilityError, SymbolicOrderError

__all__ = [
    "Lin", "IndexEntry", "Infinite", "Absent", "Regular", "Bracket", "INF", "ABSENT",
    "sig", "reg", "br", "Space", "IndexFamily", "LiftChart",
    "SINGLE", "DOUBLE", "PRODUCT", "TRIPLE", "REDUCED_TRIPLE",
    "PSI_LM", "PSI_MR", "PSI_LR", "PSI_LM_REDUCED", "PSI_MR_REDUCED", "PSI_LR_REDUCED",
    "FAMILY_M", "FAMILY_F", "FAMILY_E", "FAMILY_G", "FAMILY_H", "FAMILY_I", "FAMILY_M1",
    "FAMILY_PSI0", "FAMILY_DATA", "NAMED_FAMILIES",
    "extended_union", "add_entries", "is_positive", "compare_offsets",
    "pullback_family", "pushforward_family", "sum_families", "projection_charts", "compose_families", "composition_charts",
    "mapping_on_functions", "transpose_family", "contained_in",
]


# ---------------------------------------------------------------------------
# linear expressions c0 + cn*n + sum c_v sigma_v


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**6)


@dataclass(frozen=True)
class Lin:
    const: Fraction = Fraction(0)
    ncoef: Fraction = Fraction(0)
    syms: tuple = ()  # sorted ((var, coeff), ...), coeff != 0

    def __post_init__(self):
        object.__setattr__(self, "const", _frac(self.const))
        object.__setattr__(self, "ncoef", _frac(self.ncoef))
        merged = {}
        for v, c in self.syms:
            merged[v] = merged.get(v, Fraction(0)) + _frac(c)
        object.__setattr__(self, "syms", tuple(sorted((v, c) for v, c in merged.items() if c != 0)))

    def __add__(self, other: "Lin") -> "Lin":
        return Lin(self.const + other.const, self.ncoef + other.ncoef, self.syms + other.syms)

    def __sub__(self, other: "Lin") -> "Lin":
        return self + other.scale(-1)

    def scale(self, c) -> "Lin":
        c = _frac(c)
        return Lin(self.const * c, self.ncoef * c, tuple((v, k * c) for v, k in self.syms))

    def rename(self, f) -> "Lin":
        return Lin(self.const, self.ncoef, tuple((f(v), c) for v, c in self.syms))

    @property
    def is_numeric(self) -> bool:
        return not self.syms

    def value(self, n, sigmas: Mapping | None = None):
        s = float(self.const) + float(self.ncoef) * n
        for v, c in self.syms:
            s = s + float(c) * (sigmas or {})[v]
        return s

    def __str__(self):
        parts = []
        for v, c in self.syms:
            name = "σ" + (f"_{v}" if v else "")
            parts.append(name if c == 1 else f"{_fmt_frac(c)}{name}")
        num = _fmt_affine(self.const, self.ncoef)
        if num != "0" or not parts:
            parts.append(num)
        return "+".join(parts).replace("+-", "-")


def _fmt_frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _fmt_affine(c0: Fraction, cn: Fraction) -> str:
    if cn == 0:
        return _fmt_frac(c0)
    d = max(c0.denominator, cn.denominator)
    d = d * cn.denominator // _gcd(d, cn.denominator)
    d = d * c0.denominator // _gcd(d, c0.denominator)
    a, b = int(cn * d), int(c0 * d)
    ntxt = "n" if a == 1 else f"{a}n"
    body = ntxt if b == 0 else f"{ntxt}{'+' if b > 0 else '-'}{abs(b)}"
    if d == 1:
        return body
    return f"{body}/{d}" if b == 0 else f"({body})/{d}"


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def sig(var: str = "", coeff=1) -> Lin:
    """sigma evaluated at variable ``var`` (``""`` on the single space)."""
    return Lin(syms=((var, coeff),))


def lin(const=0, ncoef=0) -> Lin:
    return Lin(_frac(const), _frac(ncoef))


# ---------------------------------------------------------------------------
# entries


class IndexEntry:
    """Base class of the entry variants."""


@dataclass(frozen=True)
class Infinite(IndexEntry):
    def __str__(self):
        return "∞"


@dataclass(frozen=True)
class Absent(IndexEntry):
    def __str__(self):
        return "--"


@dataclass(frozen=True)
class Regular(IndexEntry):
    base: Lin
    trunc: int = 0
    plus: bool = False

    def __post_init__(self):
        if self.trunc < 0:
            raise ValueError("trunc must be >= 0")

    @property
    def order(self) -> Lin:
        return self.base + lin(self.trunc)

    def __str__(self):
        s = str(self.base)
        if self.trunc:
            s += f"|{self.trunc}"
        return s + ("_+" if self.plus else "")


@dataclass(frozen=True)
class Bracket(IndexEntry):
    offset: Lin
    plus: bool = False

    def __post_init__(self):
        if not self.offset.is_numeric:
            raise SymbolicOrderError("bracket offsets cannot involve sigma")

    def __str__(self):
        return f"[{self.offset}]" + ("_+" if self.plus else "")


INF = Infinite()
ABSENT = Absent()


def reg(base, trunc: int = 0, plus: bool = False) -> Regular:
    if not isinstance(base, Lin):
        base = lin(base)
    return Regular(base, trunc, plus)


def br(const=0, ncoef=0, plus: bool = False) -> Bracket:
    """Bracket [const + ncoef*n] (``plus`` for the _+ marker)."""
    return Bracket(lin(const, ncoef), plus)


def compare_offsets(a: Lin, b: Lin) -> int:
    """Sign of a - b for every integer n >= 1; raise if it is not constant."""
    d = a - b
    if d.syms:
        raise SymbolicOrderError(f"cannot order {a} and {b}: symbolic difference")
    if d.const == 0 and d.ncoef == 0:
        return 0
    at1 = d.const + d.ncoef
    if d.ncoef >= 0 and at1 > 0:
        return 1
    if d.ncoef <= 0 and at1 < 0:
        return -1
    raise SymbolicOrderError(f"cannot order {a} and {b} over n >= 1")


def _weak_order(a: Lin, b: Lin) -> int:
    d = a - b
    at1 = d.const + d.ncoef
    if not d.syms and d.ncoef <= 0 and at1 <= 0:
        return -1
    if not d.syms and d.ncoef >= 0 and at1 >= 0:
        return 1
    raise SymbolicOrderError(f"cannot order {a} and {b} over n >= 1")


def add_entries(a: IndexEntry, b: IndexEntry) -> IndexEntry:
    """Index set of a product (sum of exponents)."""
    if isinstance(a, Absent):
        return b
    if isinstance(b, Absent):
        return a
    if isinstance(a, Infinite) or isinstance(b, Infinite):
        return INF
    if isinstance(a, Regular) and isinstance(b, Regular):
        return Regular(a.base + b.base, a.trunc + b.trunc, a.plus or b.plus)
    if isinstance(a, Bracket) and isinstance(b, Bracket):
        return Bracket(a.offset + b.offset, a.plus or b.plus)
    r, k = (a, b) if isinstance(a, Regular) else (b, a)
    if not r.base.is_numeric:
        raise SymbolicOrderError(f"cannot add {r} to a half-step ladder")
    return Bracket(r.order + k.offset, r.plus or k.plus)


def extended_union(E: IndexEntry, F: IndexEntry) -> IndexEntry:
    """Extended union restricted to dominant entries.

    The smaller leading order wins and keeps its log marker; equal leading
    orders acquire an extra log (the ``(a, k+k'+1)`` term), i.e. ``plus``.
    """
    if isinstance(E, Absent):
        E = reg(0)
    if isinstance(F, Absent):
        F = reg(0)
    if isinstance(E, Infinite):
        return F
    if isinstance(F, Infinite):
        return E
    if isinstance(E, Bracket) and isinstance(F, Bracket):
        try:
            c = compare_offsets(E.offset, F.offset)
        except SymbolicOrderError:
            # a <= b with equality only at n = 1: exact when the lower ladder
            # already carries the log marker (equality would add it anyway)
            c = _weak_order(E.offset, F.offset)
            low = E if c < 0 else F
            if not low.plus:
                raise
            return low
        if c == 0:
            return Bracket(E.offset, True)
        return E if c < 0 else F
    if isinstance(E, Regular) and isinstance(F, Regular):
        d = E.order - F.order
        if not d.syms and d.const == 0 and d.ncoef == 0:
            return Regular(E.base, min(E.trunc, F.trunc), True)
        c = compare_offsets(E.order, F.order)
        return E if c < 0 else F
    raise SymbolicOrderError(f"cannot unite {E} and {F}: different entry kinds")


def is_positive(E: IndexEntry) -> bool:
    """Re E > 0 for all n >= 1, using Re sigma >= n/2 for every sigma symbol."""
    if isinstance(E, Infinite):
        return True
    if isinstance(E, Absent):
        return False
    o = E.offset if isinstance(E, Bracket) else E.order
    lower = lin(o.const, o.ncoef)
    for _, c in o.syms:
        if c < 0:
            return False
        lower = lower + lin(0, c / 2)
    try:
        return compare_offsets(lower, lin(0)) > 0
    except SymbolicOrderError:
        return False


def contained_in(E: IndexEntry, F: IndexEntry) -> bool:
    """Is the dominant set E contained in F (E decays at least as fast)?"""
    if isinstance(E, Infinite):
        return True
    if isinstance(F, Infinite):
        return False
    if isinstance(E, Bracket) and isinstance(F, Bracket):
        d = E.offset - F.offset
        if d.ncoef != 0 or (2 * d.const).denominator != 1:
            return False
        if d.const > 0:
            return True
        return d.const == 0 and (F.plus or not E.plus)
    if isinstance(E, Regular) and isinstance(F, Regular):
        d = E.order - F.order
        if d.syms or d.ncoef != 0 or d.const.denominator != 1:
            return False
        return d.const > 0 or (d.const == 0 and (F.plus or not E.plus))
    return False


# ---------------------------------------------------------------------------
# spaces, families, charts


@dataclass(frozen=True)
class Space:
    """Boundary faces of a (blown-up) space with their variable identifications.

    ``classes[face]`` lists groups of variables identified on that face; a
    symbol's variable is renamed to its group's label there.
    """

    name: str
    faces: tuple
    variables: tuple
    classes: Mapping = field(default_factory=dict)

    def canon(self, face: str, var: str) -> str:
        for members, label in self.classes.get(face, ()):
            if var in members or var == label:
                return label
        if var not in self.variables:
            raise SymbolicOrderError(f"variable {var!r} has no meaning on face {face} of {self.name}")
        return var

    def members(self, face: str, var: str) -> tuple:
        for members, label in self.classes.get(face, ()):
            if var in members or var == label:
                return tuple(members)
        return (var,)


def _front(face_list, members, label):
    return {f: ((members, label),) for f in face_list}


SINGLE = Space("X_lambda", ("reg", "cross"), ("",))
DOUBLE = Space("X x_lambda X", ("l", "r", "f", "cl", "cr", "cf"), ("l", "r"),
               _front(("f", "cf"), ("l", "r"), "f"))
PRODUCT = Space("X_lambda x X_lambda", ("l", "r", "cl", "cr"), ("l", "r"))

_TRIPLE_REG = ("L", "M", "R", "LM", "MR", "LR", "LMR")


def _triple_classes(faces):
    out = {}
    for f in faces:
        letters = f[1:] if f.startswith("c") else f
        if len(letters) > 1:
            members = tuple(letters)
            label = "R" if "R" in members else "M"
            out[f] = ((members, label),)
    return out


_TRIPLE_FACES = _TRIPLE_REG + tuple("c" + f for f in _TRIPLE_REG)
TRIPLE = Space("(X^3)_lambda", _TRIPLE_FACES, ("L", "M", "R"), _triple_classes(_TRIPLE_FACES))
_RED_FACES = ("L", "M", "R", "LM", "cL", "cM", "cR", "cLM")
REDUCED_TRIPLE = Space("(X x_lambda X) x X_lambda", _RED_FACES, ("L", "M", "R"),
                       _triple_classes(_RED_FACES))


@dataclass(frozen=True)
class IndexFamily:
    space: Space
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != len(self.space.faces):
            raise ValueError(f"{self.space.name} has {len(self.space.faces)} faces, "
                             f"got {len(self.entries)} entries")

    @classmethod
    def of(cls, space: Space, mapping: Mapping) -> "IndexFamily":
        return cls(space, tuple(mapping[f] for f in space.faces))

    def __getitem__(self, face: str) -> IndexEntry:
        return self.entries[self.space.faces.index(face)]

    def as_dict(self) -> dict:
        return dict(zip(self.space.faces, self.entries))

    def __str__(self):
        return "(" + ", ".join(str(e) for e in self.entries) + ")"

    def table(self) -> str:
        w = max(len(f) for f in self.space.faces)
        return "\n".join(f"{f:<{w}}  {e}" for f, e in zip(self.space.faces, self.entries))


@dataclass(frozen=True)
class LiftChart:
    """Exponent matrix of a b-map psi: domain -> codomain.

    ``lifts[i]`` lists the domain faces j with e(i, j) = 1 (the lift of the
    defining function of codomain face i).  ``var_map`` sends codomain
    variables to domain variables.
    """

    name: str
    domain: Space
    codomain: Space
    lifts: Mapping
    var_map: Mapping

    def e(self, i: str, j: str) -> int:
        return int(j in self.lifts.get(i, ()))

    def matrix(self):
        return [[self.e(i, j) for j in self.domain.faces] for i in self.codomain.faces]

    @property
    def is_b_fibration(self) -> bool:
        return all(sum(self.e(i, j) for i in self.codomain.faces) <= 1 for j in self.domain.faces)

    def image(self, j: str):
        """Codomain face that domain face j maps into, or None (interior)."""
        for i in self.codomain.faces:
            if self.e(i, j):
                return i
        return None

    def row(self, letter_of_face: Mapping | None = None) -> dict:
        """Chart row as printed: domain face -> codomain face name or '--'."""
        return {j: (self.image(j) or "--") for j in self.domain.faces}


def _rename_entry(E: IndexEntry, f) -> IndexEntry:
    if isinstance(E, Regular):
        return Regular(E.base.rename(f), E.trunc, E.plus)
    return E


def pullback_family(chart: LiftChart, family: IndexFamily) -> IndexFamily:
    if family.space != chart.codomain:
        raise ValueError(f"family lives on {family.space.name}, chart expects {chart.codomain.name}")
    out = {}
    for j in chart.domain.faces:
        total = ABSENT
        for i in chart.codomain.faces:
            if not chart.e(i, j):
                continue

            def ren(v, i=i, j=j):
                cod = chart.codomain
                # symbols on an identifying face may name the group label
                src = cod.members(i, v)[0] if v not in chart.var_map else v
                return chart.domain.canon(j, chart.var_map[src])

            total = add_entries(total, _rename_entry(family[i], ren))
        out[j] = total
    return IndexFamily.of(chart.domain, out)


def pushforward_family(chart: LiftChart, family: IndexFamily) -> IndexFamily:
    if family.space != chart.domain:
        raise ValueError(f"family lives on {family.space.name}, chart expects {chart.domain.name}")
    if not chart.is_b_fibration:
        raise IntegrabilityError(f"{chart.name} is not a b-fibration")
    inverse = {}
    for c, d in chart.var_map.items():
        inverse[d] = c
    for j in chart.domain.faces:
        if chart.image(j) is None and not is_positive(family[j]):
            raise IntegrabilityError(
                f"push-forward by {chart.name}: face {j} maps to the interior with entry "
                f"{family[j]}, which is not positive")
    out = {}
    for i in chart.codomain.faces:
        acc = INF
        for j in chart.lifts.get(i, ()):

            def ren(v, i=i, j=j):
                names = {chart.codomain.canon(i, inverse[m])
                         for m in chart.domain.members(j, v) if m in inverse}
                if len(names) != 1:
                    raise SymbolicOrderError(f"σ_{v} on face {j} does not descend to face {i}")
                return names.pop()

            acc = extended_union(acc, _rename_entry(family[j], ren))
        out[i] = acc
    return IndexFamily.of(chart.codomain, out)


def sum_families(a: IndexFamily, b: IndexFamily) -> IndexFamily:
    return IndexFamily(a.space, tuple(add_entries(x, y) for x, y in zip(a.entries, b.entries)))


def _crossover_lifts(regular: Mapping) -> dict:
    out = dict(regular)
    for i, js in regular.items():
        out["c" + i] = tuple("c" + j for j in js)
    return out


PSI_LM = LiftChart("psi_LM", TRIPLE, DOUBLE, _crossover_lifts(
    {"l": ("L", "LR"), "r": ("M", "MR"), "f": ("LM", "LMR")}), {"l": "L", "r": "M"})
PSI_MR = LiftChart("psi_MR", TRIPLE, DOUBLE, _crossover_lifts(
    {"l": ("M", "LM"), "r": ("R", "LR"), "f": ("MR", "LMR")}), {"l": "M", "r": "R"})
PSI_LR = LiftChart("psi_LR", TRIPLE, DOUBLE, _crossover_lifts(
    {"l": ("L", "LM"), "r": ("R", "MR"), "f": ("LR", "LMR")}), {"l": "L", "r": "R"})

PSI_LM_REDUCED = LiftChart("psi_LM", REDUCED_TRIPLE, DOUBLE, _crossover_lifts(
    {"l": ("L",), "r": ("M",), "f": ("LM",)}), {"l": "L", "r": "M"})
PSI_MR_REDUCED = LiftChart("psi_MR", REDUCED_TRIPLE, PRODUCT, _crossover_lifts(
    {"l": ("M", "LM"), "r": ("R",)}), {"l": "M", "r": "R"})
PSI_LR_REDUCED = LiftChart("psi_LR", REDUCED_TRIPLE, PRODUCT, _crossover_lifts(
    {"l": ("L", "LM"), "r": ("R",)}), {"l": "L", "r": "R"})

_TRIPLES = {
    "full": (PSI_LM, PSI_MR, PSI_LR),
    "reduced": (PSI_LM_REDUCED, PSI_MR_REDUCED, PSI_LR_REDUCED),
}


def composition_charts(A: IndexFamily, B: IndexFamily, triple: str = "full"):
    """Pulled-back rows (A_LM, B_MR) and their face-wise sum on the triple space."""
    lm, mr, _ = _TRIPLES[triple]
    a = pullback_family(lm, A)
    b = pullback_family(mr, B)
    return a, b, sum_families(a, b)


def compose_families(A: IndexFamily, B: IndexFamily, triple: str | None = None) -> IndexFamily:
    """Index family of the composition of kernels with families A and B."""
    if triple is None:
        triple = "reduced" if B.space == PRODUCT else "full"
    _, _, total = composition_charts(A, B, triple)
    return pushforward_family(_TRIPLES[triple][2], total)


def projection_charts(space: Space):
    if space == DOUBLE:
        right = {"reg": ("r", "f"), "cross": ("cr", "cf")}
        left = {"reg": ("l", "f"), "cross": ("cl", "cf")}
    elif space == PRODUCT:
        right = {"reg": ("r",), "cross": ("cr",)}
        left = {"reg": ("l",), "cross": ("cl",)}
    else:
        raise ValueError(f"no projections defined for {space.name}")
    beta_r = LiftChart("beta_R", space, SINGLE, right, {"": "r"})
    beta_l = LiftChart("beta_L", space, SINGLE, left, {"": "l"})
    return beta_l, beta_r


def mapping_on_functions(A: IndexFamily, u: IndexFamily) -> IndexFamily:
    """Index family of A u for a kernel family A and a function family u."""
    if u.space != SINGLE:
        raise ValueError("u must be a family on the single space")
    beta_l, beta_r = projection_charts(A.space)
    total = sum_families(A, pullback_family(beta_r, u))
    return pushforward_family(beta_l, total)


def transpose_family(A: IndexFamily) -> IndexFamily:
    """Swap left and right (faces and sigma variables)."""
    swap = {"l": "r", "r": "l", "cl": "cr", "cr": "cl"}
    d = A.as_dict()
    out = {}
    for f in A.space.faces:
        E = d[swap.get(f, f)]
        out[f] = _rename_entry(E, lambda v: swap.get(v, v))
    return IndexFamily.of(A.space, out)


# ---------------------------------------------------------------------------
# named families

_H = Fraction(1, 2)

FAMILY_M = IndexFamily(DOUBLE, (reg(sig("l")), reg(sig("r")), reg(0),
                                br(0, _H), br(0, _H), br(0)))
FAMILY_F = IndexFamily(DOUBLE, (INF, reg(sig("r")), INF,
                                br(_H, _H, plus=True), br(0, _H), br(_H, plus=True)))
FAMILY_E = IndexFamily(DOUBLE, (INF, reg(sig("r")), INF,
                                br(_H, _H, plus=True), br(0, _H), INF))
FAMILY_G = IndexFamily(DOUBLE, (reg(sig("l"), 1), reg(sig("r")), INF,
                                br(_H, _H, plus=True), br(0, _H), br(_H, plus=True)))
FAMILY_M1 = IndexFamily(DOUBLE, (reg(sig("l"), 1), reg(sig("r")), reg(0, 1),
                                 br(_H, _H, plus=True), br(0, _H), br(_H, plus=True)))
FAMILY_H = IndexFamily(PRODUCT, (INF, reg(sig("r")), br(_H, _H, plus=True), br(0, _H)))
FAMILY_I = IndexFamily(PRODUCT, (reg(sig("l")), reg(sig("r")), br(0, _H), br(0, _H)))
# small calculus: smooth up to the front faces, rapidly vanishing elsewhere
FAMILY_PSI0 = IndexFamily(DOUBLE, (INF, INF, reg(0), INF, INF, br(0)))
# compactly supported data away from the boundary, with the crossover ladder
FAMILY_DATA = IndexFamily(SINGLE, (INF, br(_H, _H, plus=True)))

NAMED_FAMILIES = {
    "M": FAMILY_M, "F": FAMILY_F, "E": FAMILY_E, "G": FAMILY_G, "M1": FAMILY_M1,
    "H": FAMILY_H, "I": FAMILY_I, "Psi0": FAMILY_PSI0, "u": FAMILY_DATA,
}
