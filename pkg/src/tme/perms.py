"""Replica permutations, built-in measure families, and surface topology.

A measure is specified by three permutations (pi_A, pi_B, pi_C) of the replica
set {1..R}; the outer region Lambda always carries the identity.  The phase of
the resulting overlap is universal and determined by the topology of the glued
surface, which this module characterizes combinatorially: boundary
permutations pi_IJ = pi_I pi_J^{-1} between adjacent regions, one cell per
replica, with cross-sections at the four junction vertices

    v1 = (A,B,C),   v2 = (B,C,L),   v3 = (A,C,L),   v4 = (A,B,L).

The glued surface is a (closed, orientable) manifold iff every vertex
cross-section is a sphere, i.e. its Euler characteristic 2R - 3R +
(|pi_IJ| + |pi_JK| + |pi_IK|) equals 2, where |.| counts cycles.  Summed over
the four vertices and counting each region pair twice (once per orientation)
this is the condition sum_{I != J} |pi_IJ| = 8 + 4R.  For a manifold the genus
follows from 1 - g = sum_v o_v - sum_{unordered pairs} |pi_IJ| with o_v the
number of orbits of the group generated by the two independent boundary
permutations at vertex v.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

REGIONS = ("A", "B", "C", "L")

# vertex name -> region triple whose boundaries meet there
VERTICES = {
    "v1": ("A", "B", "C"),
    "v2": ("B", "C", "L"),
    "v3": ("A", "C", "L"),
    "v4": ("A", "B", "L"),
}

UNORDERED_PAIRS = (
    ("A", "B"), ("A", "C"), ("A", "L"),
    ("B", "C"), ("B", "L"), ("C", "L"),
)


@dataclass(frozen=True)
class Permutation:
    """Permutation of {1..size}; image[i-1] is the image of i."""

    image: tuple
    size: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "size", len(self.image))
        if sorted(self.image) != list(range(1, self.size + 1)):
            raise ValueError(f"not a permutation of 1..{self.size}: {self.image}")

    @staticmethod
    def identity(size: int) -> "Permutation":
        return Permutation(tuple(range(1, size + 1)))

    @staticmethod
    def from_cycles(size: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        """Build from disjoint cycles in 1-based notation, e.g. [(1,2,3),(4,5)]."""
        image = list(range(1, size + 1))
        seen = set()
        for cyc in cycles:
            for x in cyc:
                if not 1 <= x <= size:
                    raise ValueError(f"cycle element {x} outside 1..{size}")
                if x in seen:
                    raise ValueError(f"element {x} repeated across cycles")
                seen.add(x)
            for a, b in zip(cyc, cyc[1:] + type(cyc)(cyc[:1])):
                image[a - 1] = b
        return Permutation(tuple(image))

    def __call__(self, x: int) -> int:
        return self.image[x - 1]

    def is_identity(self) -> bool:
        return all(self.image[i] == i + 1 for i in range(self.size))

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, y in enumerate(self.image):
            inv[y - 1] = i + 1
        return Permutation(tuple(inv))

    def cycles(self, include_fixed: bool = False) -> list:
        """Disjoint cycles, each rotated to start at its smallest element."""
        out, seen = [], set()
        for start in range(1, self.size + 1):
            if start in seen:
                continue
            cyc, x = [], start
            while x not in seen:
                seen.add(x)
                cyc.append(x)
                x = self.image[x - 1]
            if len(cyc) > 1 or include_fixed:
                out.append(tuple(cyc))
        return out

    def cycle_count(self) -> int:
        """Number of cycles, counting fixed points as 1-cycles."""
        return len(self.cycles(include_fixed=True))

    def transpositions(self) -> list:
        """A decomposition into transpositions: each k-cycle (a1..ak) becomes
        (a1,a2)(a2,a3)...(a_{k-1},a_k), rightmost factor applied first."""
        out = []
        for cyc in self.cycles():
            out.extend((cyc[i], cyc[i + 1]) for i in range(len(cyc) - 1))
        return out


def compose(p: Permutation, q: Permutation) -> Permutation:
    """(p o q)(x) = p(q(x))."""
    if p.size != q.size:
        raise ValueError("size mismatch")
    return Permutation(tuple(p.image[q.image[i] - 1] for i in range(p.size)))


def orbit_count(generators: Sequence[Permutation], size: int) -> int:
    """Number of orbits of <generators> acting on {1..size}.

    Orbits of the generated group coincide with connected components of the
    graph x -- g(x), so a union-find over the generators suffices.
    """
    parent = list(range(size + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in generators:
        if g.size != size:
            raise ValueError("generator size mismatch")
        for x in range(1, size + 1):
            rx, ry = find(x), find(g(x))
            if rx != ry:
                parent[rx] = ry
    return len({find(x) for x in range(1, size + 1)})


# ---------------------------------------------------------------------------
# measure specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChargeInsertion:
    """Marker for a charge factor exp(mu * Q_region) on one replica."""

    region: str = "AC"
    replica: int = 1
    strength: float = 0.0


@dataclass(frozen=True)
class MeasureSpec:
    name: str
    replicas: int
    pi_A: Permutation
    pi_B: Permutation
    pi_C: Permutation
    charge: Optional[ChargeInsertion] = None

    def __post_init__(self):
        for p in (self.pi_A, self.pi_B, self.pi_C):
            if p.size != self.replicas:
                raise ValueError("permutation size != replica count")

    def pi(self, region: str) -> Permutation:
        if region == "A":
            return self.pi_A
        if region == "B":
            return self.pi_B
        if region == "C":
            return self.pi_C
        if region == "L":
            return Permutation.identity(self.replicas)
        raise KeyError(region)

    def conjugated(self) -> "MeasureSpec":
        """Spec with all permutations inverted (Hermitian conjugate measure)."""
        return MeasureSpec(self.name + "_conj", self.replicas,
                           self.pi_A.inverse(), self.pi_B.inverse(),
                           self.pi_C.inverse(), self.charge)


def spec_jn(n: int) -> MeasureSpec:
    """Renyi commutator family: R = 2n+1, pi_A = (1..2n+1),
    pi_B = (n+1..2n+1), pi_C = (1..n+1); pi_A = pi_C o pi_B."""
    if n < 1:
        raise ValueError("n >= 1")
    R = 2 * n + 1
    pi_A = Permutation.from_cycles(R, [tuple(range(1, R + 1))])
    pi_B = Permutation.from_cycles(R, [tuple(range(n + 1, R + 1))])
    pi_C = Permutation.from_cycles(R, [tuple(range(1, n + 2))])
    return MeasureSpec(f"j{n}", R, pi_A, pi_B, pi_C)


def spec_phir(r: int) -> MeasureSpec:
    """Lens-space family on R = 2r replicas indexed (s,t), s in {1,2},
    t in {1..r}, flattened to (s-1)*r + t.

    pi_A: (1,t)->(1,t-1), (2,t)->(2,t+1);  pi_B: (s,t)->(s+1,t);
    pi_C: (1,t)->(2,t+1), (2,t)->(1,t-1);  t mod r, s mod 2.
    """
    if r < 2:
        raise ValueError("r >= 2")
    R = 2 * r

    def flat(s, t):
        return (s - 1) * r + ((t - 1) % r) + 1

    imA, imB, imC = [0] * R, [0] * R, [0] * R
    for s in (1, 2):
        for t in range(1, r + 1):
            i = flat(s, t)
            imA[i - 1] = flat(s, t - 1) if s == 1 else flat(s, t + 1)
            imB[i - 1] = flat(3 - s, t)
            imC[i - 1] = flat(2, t + 1) if s == 1 else flat(1, t - 1)
    return MeasureSpec(f"phi{r}", R, Permutation(tuple(imA)),
                       Permutation(tuple(imB)), Permutation(tuple(imC)))


def spec_kn(n: int) -> MeasureSpec:
    """Alternating-cycle family: R = 2n+1,
    pi_A = (2,4,...,2n,2n+1,2n-1,...,1), pi_B = (1,2)(3,4)...(2n-1,2n),
    pi_C = (2,3)(4,5)...(2n,2n+1); pi_A = pi_B o pi_C."""
    if n < 1:
        raise ValueError("n >= 1")
    R = 2 * n + 1
    cyc = tuple(range(2, R, 2)) + tuple(range(R, 0, -2))
    pi_A = Permutation.from_cycles(R, [cyc])
    pi_B = Permutation.from_cycles(R, [(k, k + 1) for k in range(1, R, 2)])
    pi_C = Permutation.from_cycles(R, [(k, k + 1) for k in range(2, R, 2)])
    return MeasureSpec(f"k{n}", R, pi_A, pi_B, pi_C)


def spec_smun(n: int, mu: float = 0.0) -> MeasureSpec:
    """Charged cyclic family: R = n+1, pi_A = pi_B = (1..n+1), pi_C = id,
    with a charge factor exp(mu Q_AC) on replica 1."""
    if n < 1:
        raise ValueError("n >= 1")
    R = n + 1
    cyc = Permutation.from_cycles(R, [tuple(range(1, R + 1))])
    return MeasureSpec(f"s{n}", R, cyc, cyc, Permutation.identity(R),
                       ChargeInsertion("AC", 1, mu))


_FAMILIES = {"jn": spec_jn, "phir": spec_phir, "kn": spec_kn, "smun": spec_smun}


def builtin_spec(family: str, parameter: int, mu: float = 0.0) -> MeasureSpec:
    """Dispatch by family name: jn, phir, kn, smun."""
    try:
        ctor = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(_FAMILIES)}")
    if family == "smun":
        return ctor(parameter, mu)
    return ctor(parameter)


# ---------------------------------------------------------------------------
# surface topology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TopologyReport:
    replicas: int
    boundary_cycle_counts: dict      # {("A","B"): |pi_AB|, ...} unordered pairs
    vertex_orbit_counts: dict        # {"v1": o_ABC, ...}
    vertex_euler: dict               # {"v1": chi, ...}
    ordered_cycle_sum: int           # sum over ordered pairs = 2 * unordered sum
    is_manifold: bool
    genus: Optional[int]             # None unless is_manifold


def topology_report(spec: MeasureSpec) -> TopologyReport:
    R = spec.replicas
    pi = {I: spec.pi(I) for I in REGIONS}
    bnd = {(I, J): compose(pi[I], pi[J].inverse()) for I, J in UNORDERED_PAIRS}

    counts = {p: bnd[p].cycle_count() for p in UNORDERED_PAIRS}
    unordered_sum = sum(counts.values())

    def pair_count(I, J):
        return counts[(I, J)] if (I, J) in counts else counts[(J, I)]

    def pair_perm(I, J):
        return bnd[(I, J)] if (I, J) in bnd else bnd[(J, I)].inverse()

    euler, orbits = {}, {}
    for v, (I, J, K) in VERTICES.items():
        c = pair_count(I, J) + pair_count(J, K) + pair_count(I, K)
        euler[v] = 2 * R - 3 * R + c
        # pi_IK = pi_IJ * pi_JK, so any two of the three generate the group
        orbits[v] = orbit_count([pair_perm(I, J), pair_perm(J, K)], R)

    manifold = all(chi == 2 for chi in euler.values())
    genus = None
    if manifold:
        genus = 1 + unordered_sum - sum(orbits.values())
    return TopologyReport(R, counts, orbits, euler, 2 * unordered_sum,
                          manifold, genus)


# ---------------------------------------------------------------------------
# plain-text serialization
# ---------------------------------------------------------------------------

def format_permutation(p: Permutation) -> str:
    cycs = p.cycles()
    if not cycs:
        return "id"
    return "".join("(" + " ".join(str(x) for x in c) + ")" for c in cycs)


def parse_permutation(text: str, size: int) -> Permutation:
    text = text.strip()
    if text in ("id", "()", ""):
        return Permutation.identity(size)
    if not re.fullmatch(r"(\(\s*\d+(\s+\d+)*\s*\))+", text):
        raise ValueError(f"bad cycle notation: {text!r}")
    cycles = [tuple(int(t) for t in grp.split())
              for grp in re.findall(r"\(([^)]*)\)", text)]
    return Permutation.from_cycles(size, cycles)


def format_spec(spec: MeasureSpec) -> str:
    lines = [f"name={spec.name}", f"replicas={spec.replicas}"]
    for I in ("A", "B", "C"):
        lines.append(f"pi_{I}={format_permutation(spec.pi(I))}")
    if spec.charge is not None:
        ch = spec.charge
        lines.append(f"charge=region:{ch.region} replica:{ch.replica} mu:{ch.strength!r}")
    return "\n".join(lines) + "\n"


def parse_spec(text: str) -> MeasureSpec:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()
    try:
        name = kv.get("name", "custom")
        R = int(kv["replicas"])
        pis = {I: parse_permutation(kv[f"pi_{I}"], R) for I in ("A", "B", "C")}
    except KeyError as e:
        raise ValueError(f"missing field in spec text: {e}")
    charge = None
    if "charge" in kv:
        m = re.fullmatch(r"region:(\w+)\s+replica:(\d+)\s+mu:(\S+)", kv["charge"])
        if not m:
            raise ValueError(f"bad charge line: {kv['charge']!r}")
        charge = ChargeInsertion(m.group(1), int(m.group(2)), float(m.group(3)))
    return MeasureSpec(name, R, pis["A"], pis["B"], pis["C"], charge)
