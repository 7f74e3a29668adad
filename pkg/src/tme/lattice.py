"""Honeycomb lattice on a torus and the pizza region partition.

Cells form an n_s x n_s torus with primitive vectors a1 = (1,0),
a2 = (1/2, sqrt3/2); each cell holds an even (sublattice 0) and an odd
(sublattice 1) site, so there are N = 2 n_s^2 sites, 3 n_s^2 nearest-neighbour
bonds (labels x,y,z) and 6 n_s^2 next-nearest-neighbour bonds.  Site indexing
is row-major over cells, sublattice-minor: site = (y*n_s + x)*2 + s.

The default regions realize the pizza partition A|B|C surrounded by L as a
non-wrapping rectangular patch: B and C occupy side-by-side bands of height
n_s/2 cell rows (the (sqrt3/4) n_s physical height), A sits below them, and L
is everything else.  This produces exactly the four junction vertex classes
(A,B,C), (B,C,L), (A,C,L), (A,B,L).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

# next-nearest-neighbour orientation: positive hop along these cell
# displacements (counterclockwise triple summing to zero), opposite sign on
# the odd sublattice.  Global orientation chosen so that the occupied band of
# the gapped phase carries Chern number +1 for K > 0 (see tests).
NNN_POSITIVE = ((1, 0), (-1, 1), (0, -1))
NNN_SUBLATTICE_SIGN = (-1, 1)

A1 = np.array([1.0, 0.0])
A2 = np.array([0.5, np.sqrt(3.0) / 2.0])
SUB_OFFSET = np.array([0.0, 1.0 / np.sqrt(3.0)])

LABELS = ("x", "y", "z")
REGION_CODES = {"A": 0, "B": 1, "C": 2, "L": 3}
REGION_NAMES = {v: k for k, v in REGION_CODES.items()}


@dataclass(frozen=True)
class HoneycombLattice:
    n_cells: int
    sites: int
    pos: np.ndarray        # (sites, 2) positions
    sublattice: np.ndarray  # (sites,)
    nn_bonds: np.ndarray   # (3 n^2, 5): even site, odd site, label, dx, dy
    nnn_bonds: np.ndarray  # (6 n^2, 5): i, j, nu, dx, dy  (positive dir i->j)

    def site(self, x: int, y: int, s: int) -> int:
        n = self.n_cells
        return ((y % n) * n + (x % n)) * 2 + s

    def cell_of(self, site: int):
        n = self.n_cells
        cell, s = divmod(site, 2)
        y, x = divmod(cell, n)
        return x, y, s

    def hexagons(self):
        """Ordered bond lists [(i, j, label), ...] around each plaquette.

        The hexagon of cell (x,y) visits e(x,y), o(x,y), e(x,y+1), o(x+1,y),
        e(x+1,y), o(x+1,y-1) with bond labels z,x,y,z,x,y.
        """
        out = []
        for y in range(self.n_cells):
            for x in range(self.n_cells):
                ring = [self.site(x, y, 0), self.site(x, y, 1),
                        self.site(x, y + 1, 0), self.site(x + 1, y, 1),
                        self.site(x + 1, y, 0), self.site(x + 1, y - 1, 1)]
                labels = "zxyzxy"
                out.append([(ring[k], ring[(k + 1) % 6], labels[k])
                            for k in range(6)])
        return out

    def loop_horizontal(self, y: int = 0):
        """Non-contractible loop winding in x: alternating y,x bonds."""
        bonds = []
        for x in range(self.n_cells):
            e = self.site(x, y, 0)
            o = self.site(x + 1, y - 1, 1)
            bonds.append((e, o, "y"))
            bonds.append((o, self.site(x + 1, y, 0), "x"))
        return bonds

    def loop_vertical(self, x: int = 0):
        """Non-contractible loop winding in y: alternating z,x bonds."""
        bonds = []
        for y in range(self.n_cells):
            e = self.site(x, y, 0)
            o = self.site(x, y, 1)
            bonds.append((e, o, "z"))
            bonds.append((o, self.site(x, y + 1, 0), "x"))
        return bonds


def build_lattice(n_s: int, allow_tiny: bool = False) -> HoneycombLattice:
    """Construct the periodic honeycomb lattice with n_s x n_s cells.

    n_s must be even (regions land on lattice lines cleanly) and >= 4 unless
    allow_tiny is set (tiny lattices are used by dense ground-truth tests;
    note the nnn structure cancels pairwise at n_s=2).
    """
    if n_s % 2 != 0:
        raise ValueError("n_s must be even")
    if n_s < 4 and not allow_tiny:
        raise ValueError("n_s >= 4 (use allow_tiny for dense-test lattices)")
    if n_s < 2:
        raise ValueError("n_s >= 2")

    n = n_s
    sites = 2 * n * n
    sub = np.tile([0, 1], n * n).astype(np.int8)
    pos = np.zeros((sites, 2))
    for y in range(n):
        for x in range(n):
            base = x * A1 + y * A2
            pos[(y * n + x) * 2 + 0] = base
            pos[(y * n + x) * 2 + 1] = base + SUB_OFFSET

    def site(x, y, s):
        return ((y % n) * n + (x % n)) * 2 + s

    nn = []
    for y in range(n):
        for x in range(n):
            e = site(x, y, 0)
            nn.append((e, site(x, y - 1, 1), 0, 0, -1))   # x-bond
            nn.append((e, site(x + 1, y - 1, 1), 1, 1, -1))  # y-bond
            nn.append((e, site(x, y, 1), 2, 0, 0))        # z-bond
    nn = np.array(nn, dtype=np.int64)

    nnn = []
    for y in range(n):
        for x in range(n):
            for s in (0, 1):
                i = site(x, y, s)
                for dx, dy in NNN_POSITIVE:
                    j = site(x + dx, y + dy, s)
                    nnn.append((i, j, NNN_SUBLATTICE_SIGN[s], dx, dy))
    nnn = np.array(nnn, dtype=np.int64)

    return HoneycombLattice(n, sites, pos, sub, nn, nnn)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionMap:
    region: np.ndarray  # (sites,) int8 codes: 0=A 1=B 2=C 3=L

    def sites_in(self, name: str) -> np.ndarray:
        return np.flatnonzero(self.region == REGION_CODES[name])

    def sites_in_union(self, names: str) -> np.ndarray:
        mask = np.zeros(self.region.shape, dtype=bool)
        for ch in names:
            mask |= self.region == REGION_CODES[ch]
        return np.flatnonzero(mask)

    def counts(self) -> dict:
        return {name: int(np.sum(self.region == code))
                for name, code in REGION_CODES.items()}


def default_regions(lat: HoneycombLattice) -> RegionMap:
    """Pizza patch: an A wedge above a C|B pair, L filling the rest.

    Large lattices (n_s >= 10) get sloped boundaries: A's lower edge is a
    tent peaked at the (A,B,C) junction, L's upper edge the mirror-image
    valley at the (B,C,L) junction, and the B|C seam zigzags so B and C are
    equal on average.  The mirror symmetry (y-reflection swapping A and L,
    x-reflection swapping B and C) pairs up the four junction classes,
    which measurably cuts the finite-size phase error of the replica
    overlaps.  All steps are two cell rows tall because cells bond only to
    the rows directly above and below, never sideways within a row -- a
    single-row protrusion would fall off as a disconnected dimer.  Smaller
    lattices (6 <= n_s < 10) use straight bands for the same reason; below
    n_s = 6 assign regions explicitly (regions_from_grid)."""
    n = lat.n_cells
    if n < 6:
        raise ValueError("default pizza regions need n_s >= 6; "
                         "use regions_from_grid for smaller lattices")
    margin = max(2, int(round(0.3 * n)))
    width = n - margin
    y0 = margin
    y1 = n - margin
    xc = margin
    slope = 0.5 if n >= 10 else 0.0

    region = np.full(lat.sites, REGION_CODES["L"], dtype=np.int8)
    for s in range(lat.sites):
        x, y, _ = lat.cell_of(s)
        if x >= width:
            continue
        cut_a = y0 - slope * abs(x - xc)
        cut_l = y1 + slope * abs(x - xc)
        if y < int(np.ceil(cut_a)):
            region[s] = REGION_CODES["A"]
        elif y < min(int(np.floor(cut_l)), n):
            seam = xc + (((y - y0) // 2) % 2 if slope else 0)
            region[s] = REGION_CODES["C"] if x < seam else REGION_CODES["B"]
    rm = RegionMap(region)
    for name in REGION_CODES:
        if rm.sites_in(name).size == 0:
            raise ValueError(f"region {name} empty at n_s={n}")
    return rm


def region_adjacency(lat: HoneycombLattice, rm: RegionMap):
    """Set of unordered region-code pairs sharing at least one nn bond."""
    pairs = set()
    r = rm.region
    for i, j, *_ in lat.nn_bonds:
        a, b = int(r[i]), int(r[j])
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    return pairs


def junction_classes(lat: HoneycombLattice, rm: RegionMap):
    """Multiset of region triples meeting around plaquettes.

    Returns a dict mapping a sorted tuple of >= 3 region codes to the number
    of plaquettes whose six sites span exactly those regions.
    """
    out = {}
    r = rm.region
    for hexa in lat.hexagons():
        regions = sorted({int(r[i]) for i, _, _ in hexa})
        if len(regions) >= 3:
            key = tuple(regions)
            out[key] = out.get(key, 0) + 1
    return out


def boundary_bond_count(lat: HoneycombLattice, rm: RegionMap) -> int:
    r = rm.region
    return int(np.sum(r[lat.nn_bonds[:, 0]] != r[lat.nn_bonds[:, 1]]))


def connected_components(lat: HoneycombLattice, sites) -> int:
    """Connected components of the given site set under nn bonds."""
    sites = set(int(s) for s in sites)
    if not sites:
        return 0
    adj = {s: [] for s in sites}
    for i, j, *_ in lat.nn_bonds:
        i, j = int(i), int(j)
        if i in sites and j in sites:
            adj[i].append(j)
            adj[j].append(i)
    seen, comps = set(), 0
    for s in sites:
        if s in seen:
            continue
        comps += 1
        stack = [s]
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(y for y in adj[x] if y not in seen)
    return comps


def regions_from_grid(lat: HoneycombLattice, rows) -> RegionMap:
    """Region map from a per-cell character grid, rows[y][x] in 'ABCL'.

    Both sites of cell (x, y) get the same region."""
    n = lat.n_cells
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"grid must be {n} rows of {n} characters")
    region = np.empty(lat.sites, dtype=np.int8)
    for y in range(n):
        for x in range(n):
            try:
                code = REGION_CODES[rows[y][x]]
            except KeyError:
                raise ValueError(f"unknown region label {rows[y][x]!r}") from None
            region[lat.site(x, y, 0)] = code
            region[lat.site(x, y, 1)] = code
    return RegionMap(region)


# ---------------------------------------------------------------------------
# CSV export of the region map
# ---------------------------------------------------------------------------

def region_map_to_csv(lat: HoneycombLattice, rm: RegionMap) -> str:
    buf = io.StringIO()
    buf.write("site,cell_x,cell_y,sublattice,region\n")
    for s in range(lat.sites):
        x, y, sub = lat.cell_of(s)
        buf.write(f"{s},{x},{y},{sub},{REGION_NAMES[int(rm.region[s])]}\n")
    return buf.getvalue()


def region_map_from_csv(text: str, sites: int) -> RegionMap:
    region = np.full(sites, -1, dtype=np.int8)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("site,"):
        raise ValueError("missing region-map header")
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 5:
            raise ValueError(f"bad region row: {ln!r}")
        region[int(parts[0])] = REGION_CODES[parts[4].strip()]
    if np.any(region < 0):
        raise ValueError("region map does not cover all sites")
    return RegionMap(region)
