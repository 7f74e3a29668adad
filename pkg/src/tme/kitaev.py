"""Honeycomb spin liquid evaluated through its free-Majorana representation.

Each spin fractionalizes into four Majoranas (b^x, b^y, b^z, c) per site with
the local constraint G_s = b^x_s b^y_s b^z_s c_s = 1.  The quadratic model

    H = sum_<ij>_a J_a (i c_i c_j)  +  K sum_<<ij>> nu_ij (i c_i c_j)
        - Delta sum_<ij>_a (i b^a_i b^a_j)

(i on the even sublattice) pins the bond gauge fields u_ij = i b^a_i b^a_j to
+1 and carries the physical ground state as its gauge projection
P |psi> = prod_s (1 + G_s)/2 |psi>.

Replica-permutation overlaps of the projected state reduce to a sum of free
fermion expectation values over "gauge sectors": region-by-replica flag
vectors x, each inserting prod G_{I,r} (a sign flip of every Majorana in
region I, replica r).  Provided the regions are connected and the total
parity <prod_s G_s> = +1, the overlap is exactly

    M = sum_x  < G_x  U_piA U_piB U_piC >

with no prefactor.  Most sectors vanish identically: the b Majoranas pair
across bonds, so for every adjacent region pair (I, J) and every orbit O of
pi_I pi_J^{-1}, the flips sum_{r in O} (x_{I,r} + x_{J,r}) must match the
parity offset of the rotated pinning (see sector_constraints); the surviving
set solves an affine GF(2) system and is enumerated exactly.  The offsets
matter: some measures have checks that force odd flip parity, so the
all-zero sector itself can vanish.

A dense spin-space route (exact diagonalization on tiny tori, with the ground
state selected by matching plaquette and loop eigenvalues to the fermionic
side) provides an independent check of the whole pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .gauss import (DegenerateSpectrumError, GroundBasis, QuadraticForm,
                    apply_forms, amplitude_from_gram, ground_basis,
                    wick_expectation)
from .lattice import (LABELS, REGION_CODES, REGION_NAMES, HoneycombLattice,
                      RegionMap, build_lattice, connected_components,
                      default_regions, region_adjacency)
from .perms import MeasureSpec, Permutation, compose

N_CHANNELS = 4          # per-site Majoranas: b^x, b^y, b^z, c
C_CHANNEL = 3


class EvaluationError(RuntimeError):
    """Raised when an overlap cannot be evaluated reliably."""


class DegenerateBandError(ValueError):
    """Band gap closes somewhere on the momentum grid."""


TWISTS = ("none", "h", "v", "vh")


@dataclass(frozen=True)
class KitaevParams:
    """Couplings plus the gauge (Wilson-line) sector of the pinned state.

    twist selects which non-contractible loops the bond gauge flips: "v"
    reverses all z-bonds of cell row 0 (vertical loop -> -1), "h" all y-bonds
    of cell column 0 (horizontal loop -> -1); both sets touch every hexagon
    an even number of times, so the state stays vortex-free.  "auto" picks
    the first sector whose fermion vacuum has even total parity, which the
    gauge projection requires."""

    n_s: int
    j: tuple = (1.0, 1.0, 1.0)
    k: float = 0.0
    delta: float = 1.0
    twist: str = "auto"
    allow_tiny: bool = False

    def __post_init__(self):
        if len(self.j) != 3:
            raise ValueError("j must be (jx, jy, jz)")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.twist not in TWISTS + ("auto",):
            raise ValueError(f"twist must be one of {TWISTS + ('auto',)}")


class KitaevModel:
    """Quadratic Majorana model on the honeycomb torus with pinned gauge."""

    def __init__(self, params: KitaevParams, lattice: HoneycombLattice,
                 A: np.ndarray, basis: GroundBasis, u: np.ndarray,
                 twist: str):
        self.params = params
        self.lattice = lattice
        self.A = A
        self.basis = basis
        self.u = u          # pinned gauge value per nn bond
        self.twist = twist
        self._cov = None
        self._zeta = None

    @property
    def dim(self) -> int:
        return N_CHANNELS * self.lattice.sites

    def maj(self, site: int, channel: int) -> int:
        return N_CHANNELS * site + channel

    @property
    def covariance(self) -> np.ndarray:
        if self._cov is None:
            self._cov = self.basis.covariance()
        return self._cov

    @property
    def zeta(self) -> float:
        """Total parity <prod_s G_s>; the gauge projection needs +1."""
        if self._zeta is None:
            val = wick_expectation(range(self.dim), self.covariance)
            if abs(abs(val) - 1.0) > 1e-6 or abs(val.imag) > 1e-6:
                raise EvaluationError(f"total parity not a sign: {val}")
            self._zeta = float(np.sign(val.real))
        return self._zeta


def bond_gauge(lat: HoneycombLattice, twist: str) -> np.ndarray:
    """Pinned gauge value per nn bond for the requested Wilson-line sector."""
    u = np.ones(len(lat.nn_bonds), dtype=np.int64)
    for bi, (e, o, label, _, _) in enumerate(lat.nn_bonds):
        x, y, _ = lat.cell_of(int(e))
        if "v" in twist and label == 2 and y == 0:
            u[bi] = -u[bi]
        if "h" in twist and label == 1 and x == 0:
            u[bi] = -u[bi]
    return u


def _assemble(params: KitaevParams, twist: str,
              gap_tol: float) -> KitaevModel:
    lat = build_lattice(params.n_s, allow_tiny=params.allow_tiny)
    u = bond_gauge(lat, twist)
    dim = N_CHANNELS * lat.sites
    A = np.zeros((dim, dim))

    def add(p, q, val):
        A[p, q] += val
        A[q, p] -= val

    pair_u = {}
    nbrs = {}
    for bi, (e, o, label, _, _) in enumerate(lat.nn_bonds):
        e, o, label = int(e), int(o), int(label)
        ue = float(u[bi])
        add(N_CHANNELS * e + C_CHANNEL, N_CHANNELS * o + C_CHANNEL,
            2.0 * params.j[label] * ue)
        add(N_CHANNELS * e + label, N_CHANNELS * o + label,
            -2.0 * params.delta * ue)
        pair_u[frozenset((e, o))] = ue
        nbrs.setdefault(e, set()).add(o)
        nbrs.setdefault(o, set()).add(e)
    if params.k != 0.0:
        # three-site terms inherit the gauge of the two-bond path i-k-j
        for i, j, nu, _, _ in lat.nnn_bonds:
            i, j = int(i), int(j)
            common = nbrs[i] & nbrs[j]
            if len(common) != 1:
                raise EvaluationError(
                    "ambiguous two-bond path; lattice too small for k != 0")
            (k,) = common
            g = pair_u[frozenset((i, k))] * pair_u[frozenset((k, j))]
            add(N_CHANNELS * i + C_CHANNEL, N_CHANNELS * j + C_CHANNEL,
                2.0 * params.k * nu * g)

    return KitaevModel(params, lat, A, ground_basis(A, gap_tol=gap_tol),
                       u, twist)


def build_model(params: KitaevParams, gap_tol: float = 1e-9) -> KitaevModel:
    if params.twist != "auto":
        return _assemble(params, params.twist, gap_tol)
    for twist in TWISTS:
        try:
            model = _assemble(params, twist, gap_tol)
            if model.zeta == 1.0:
                return model
        except DegenerateSpectrumError:
            continue
    raise EvaluationError(
        "no Wilson-line sector with an even-parity fermion vacuum")


def c_sector_matrix(model: KitaevModel) -> np.ndarray:
    """Restriction of the quadratic kernel to the itinerant c Majoranas."""
    idx = N_CHANNELS * np.arange(model.lattice.sites) + C_CHANNEL
    return model.A[np.ix_(idx, idx)]


def fermion_ground_energy(model: KitaevModel) -> float:
    """Physical (c-sector) ground energy; pinning terms excluded."""
    w = np.linalg.eigvalsh(1j * c_sector_matrix(model))
    return float(np.sum(w[w < 0]) / 2.0)


# ---------------------------------------------------------------------------
# loop operators (flux sector bookkeeping)
# ---------------------------------------------------------------------------

def loop_majorana_word(model: KitaevModel, bonds):
    """(prefactor, word) for the loop operator prod_bonds sigma_u^l sigma_v^l.

    The bond-ordered product is gauge invariant, so it represents the spin
    loop operator faithfully on the whole fermion space (the site-wise form
    prod sigma^(outward label) agrees only modulo the constraints G_s = 1).
    Each factor sigma^l = i b^l c contributes [b^l_u, c_u, b^l_v, c_v] and a
    factor i^2; the b's contract along the pinned loop bonds."""
    word = []
    for u, v, label in bonds:
        ch = LABELS.index(label)
        word.extend([model.maj(u, ch), model.maj(u, C_CHANNEL),
                     model.maj(v, ch), model.maj(v, C_CHANNEL)])
    return (-1.0) ** len(bonds), word


def loop_expectation(model: KitaevModel, bonds) -> complex:
    """Loop operator value in the quadratic (unprojected) ground state."""
    pref, word = loop_majorana_word(model, bonds)
    return pref * wick_expectation(word, model.covariance)


def flux_expectations(model: KitaevModel) -> np.ndarray:
    """Plaquette loop values; +1 on every hexagon in the pinned gauge."""
    return np.array([loop_expectation(model, hexa)
                     for hexa in model.lattice.hexagons()])


# ---------------------------------------------------------------------------
# band structure of the itinerant sector
# ---------------------------------------------------------------------------

def bloch_matrix(params: KitaevParams, k1: float, k2: float) -> np.ndarray:
    """Sublattice Bloch kernel of the c sector at reduced momentum (k1, k2).

    Built from the bond tables of a small reference lattice so the momentum-
    space and real-space conventions cannot drift apart."""
    lat = build_lattice(4)
    H = np.zeros((2, 2), dtype=complex)
    for e, o, label, dx, dy in lat.nn_bonds[:3]:
        t = 2j * params.j[label] * np.exp(1j * (k1 * dx + k2 * dy))
        H[0, 1] += t
        H[1, 0] += np.conj(t)
    for i, j, nu, dx, dy in lat.nnn_bonds[:6]:
        s = int(i % 2)
        t = 2j * params.k * nu * np.exp(1j * (k1 * dx + k2 * dy))
        H[s, s] += t + np.conj(t)
    return H


def chern_number(params: KitaevParams, grid: int = 36) -> int:
    """Chern number of the lower c-sector band (plaquette Berry flux)."""
    ks = 2.0 * np.pi * np.arange(grid) / grid
    u = np.empty((grid, grid, 2), dtype=complex)
    for a, k1 in enumerate(ks):
        for b, k2 in enumerate(ks):
            w, v = np.linalg.eigh(bloch_matrix(params, k1, k2))
            if w[1] - w[0] < 1e-10:
                raise DegenerateBandError(
                    f"band touching at k=({k1:.3f},{k2:.3f})")
            u[a, b] = v[:, 0]
    total = 0.0
    for a in range(grid):
        for b in range(grid):
            a2, b2 = (a + 1) % grid, (b + 1) % grid
            link = (np.vdot(u[a, b], u[a2, b]) * np.vdot(u[a2, b], u[a2, b2])
                    * np.vdot(u[a2, b2], u[a, b2]) * np.vdot(u[a, b2], u[a, b]))
            total += np.angle(link)
    c = total / (2.0 * np.pi)
    if abs(c - round(c)) > 1e-6:
        raise EvaluationError(f"Berry flux sum {c} not an integer")
    return int(round(c))


# ---------------------------------------------------------------------------
# replica permutation operators and gauge sectors
# ---------------------------------------------------------------------------

def permutation_forms(model: KitaevModel, rm: RegionMap,
                      spec: MeasureSpec) -> list:
    """Quadratic-form factors of U_piA U_piB U_piC on the replicated space.

    Each replica transposition acts site-wise as exp((pi/4) sum_ch
    gamma_{s,ch,r} gamma_{s,ch,r'}), a 90-degree rotation of the four
    Majorana channels between replicas r and r'."""
    R = spec.replicas
    dim1 = model.dim
    forms = []
    for name in ("A", "B", "C"):
        p = spec.pi(name)
        sites = rm.sites_in(name)
        if p.is_identity() or sites.size == 0:
            continue
        local = (N_CHANNELS * sites[:, None] + np.arange(N_CHANNELS)).ravel()
        for r1, r2 in p.transpositions():
            pairs = np.stack([local + dim1 * (r1 - 1),
                              local + dim1 * (r2 - 1)], axis=1)
            forms.append(QuadraticForm.pair_rotations(dim1 * R, pairs, np.pi / 2))
    return forms


def _gf2_affine_solve(rows: np.ndarray, consts: np.ndarray, nbits: int):
    """Solve the affine system rows . x = consts over GF(2).

    Returns (particular solution, null-space basis), or None when the
    system is inconsistent (no flag vector satisfies every parity check)."""
    if rows.size == 0:
        mat = np.zeros((0, nbits + 1), dtype=np.uint8)
    else:
        mat = np.concatenate([np.asarray(rows, dtype=np.uint8) % 2,
                              np.asarray(consts, dtype=np.uint8).reshape(-1, 1)
                              % 2], axis=1)
    pivots = []
    r = 0
    for col in range(nbits):
        sel = np.nonzero(mat[r:, col])[0]
        if sel.size == 0:
            continue
        mat[[r, r + sel[0]]] = mat[[r + sel[0], r]]
        for i in range(mat.shape[0]):
            if i != r and mat[i, col]:
                mat[i] ^= mat[r]
        pivots.append(col)
        r += 1
        if r == mat.shape[0]:
            break
    if np.any(mat[r:, nbits]):
        return None
    x0 = np.zeros(nbits, dtype=np.uint8)
    for pr, pc in enumerate(pivots):
        x0[pc] = mat[pr, nbits]
    free = [c for c in range(nbits) if c not in pivots]
    basis = np.zeros((len(free), nbits), dtype=np.uint8)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for pr, pc in enumerate(pivots):
            if mat[pr, fc]:
                basis[k, pc] = 1
    return x0, basis


def _signed_action(p: Permutation, replicas: int) -> np.ndarray:
    """Signs s_r with U a_r U^dag = s_r a_{p(r)} for the rotation product.

    U is the ordered product of pair rotations exp((pi/4) a_{r1} a_{r2})
    over p.transpositions() (leftmost factor first), exactly as emitted by
    permutation_forms; each factor conjugates a_{r1} -> -a_{r2},
    a_{r2} -> +a_{r1}.  Indexing is 1-based in position 1..replicas."""
    img = np.arange(replicas + 1)
    sgn = np.ones(replicas + 1, dtype=np.int8)
    for r1, r2 in reversed(p.transpositions()):
        for r in range(1, replicas + 1):
            if img[r] == r1:
                img[r], sgn[r] = r2, -sgn[r]
            elif img[r] == r2:
                img[r] = r1
    return sgn


def sector_constraints(spec: MeasureSpec, adjacent_pairs):
    """Affine parity checks over the 3R flags x_{I,r} (bit = I*R + r - 1).

    For a pinned bond between regions I and J, the R bra modes pair
    (b_I, b_J) replica-diagonally while the rotated ket pairs them along
    pi_I pi_J^{-1}; the union of the two pairings closes into one cycle
    per orbit of that relative permutation.  A sector's flips must restore
    the fermion-parity match on every cycle, so each orbit O of each
    nn-adjacent pair contributes one check

        sum_{r in O} (x_{I,r} + x_{J,r})
                =  |O| - 1 + #{r in pi_J^{-1}(O): s_r = -1}     (mod 2),

    where s_r are the conjugation signs of the rotation product
    (_signed_action of pi_I times that of pi_J); the r on the right run
    over the ket pairs whose endpoints lie in the cycle, and
    pi_I^{-1}(O) = pi_J^{-1}(O) since O is invariant under the relative
    permutation, so the check is symmetric in the pair.  The offset is
    the parity mismatch of the bra and ket pinnings themselves; it is
    independent of the bond's gauge value u, so one check per orbit covers
    every boundary bond of the pair at once.  Returns (rows, consts)."""
    R = spec.replicas
    region_idx = {"A": 0, "B": 1, "C": 2}
    rows, consts = [], []
    for I, J in adjacent_pairs:
        pi_i, pi_j = spec.pi(I), spec.pi(J)
        rel = compose(pi_i, pi_j.inverse())
        inv_j = pi_j.inverse()
        v = _signed_action(pi_i, R) * _signed_action(pi_j, R)
        for orbit in rel.cycles(include_fixed=True):
            row = np.zeros(3 * R, dtype=np.uint8)
            for r in orbit:
                if I != "L":
                    row[region_idx[I] * R + r - 1] ^= 1
                if J != "L":
                    row[region_idx[J] * R + r - 1] ^= 1
            kets = [inv_j(s) for s in orbit]
            c = (len(orbit) - 1 + int(np.sum(v[kets] < 0))) % 2
            if row.any() or c:
                rows.append(row)
                consts.append(c)
    return (np.array(rows, dtype=np.uint8).reshape(-1, 3 * R),
            np.array(consts, dtype=np.uint8))


def surviving_sectors(spec: MeasureSpec, adjacent_pairs,
                      cap: int = 4096) -> np.ndarray:
    """All flag vectors compatible with the parity checks (possibly none)."""
    R = spec.replicas
    rows, consts = sector_constraints(spec, adjacent_pairs)
    sol = _gf2_affine_solve(rows, consts, 3 * R)
    if sol is None:
        return np.zeros((0, 3 * R), dtype=np.uint8)
    x0, basis = sol
    k = basis.shape[0]
    if 2 ** k > cap:
        raise EvaluationError(f"{2 ** k} gauge sectors exceed cap {cap}")
    combos = ((np.arange(2 ** k)[:, None] >> np.arange(k)) & 1).astype(np.uint8)
    sectors = (combos @ basis + x0) % 2
    order = np.lexsort(sectors.T[::-1])
    return sectors[order]


def all_sectors(replicas: int) -> np.ndarray:
    """Full 2^(3R) flag enumeration (dense tests only)."""
    nbits = 3 * replicas
    combos = ((np.arange(2 ** nbits)[:, None] >> np.arange(nbits)) & 1)
    return combos.astype(np.uint8)


# ---------------------------------------------------------------------------
# overlap evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureResult:
    name: str
    replicas: int
    value: complex
    log_magnitude: float
    phase: float
    zeta: float
    sectors_evaluated: int
    sectors_pruned: int
    sector_flags: Optional[np.ndarray] = None
    sector_logmags: Optional[np.ndarray] = None
    sector_phases: Optional[np.ndarray] = None


def _validate_regions(lat: HoneycombLattice, rm: RegionMap) -> None:
    for name in ("A", "B", "C"):
        sites = rm.sites_in(name)
        if sites.size == 0:
            raise ValueError(f"region {name} is empty")
    for name in REGION_CODES:
        sites = rm.sites_in(name)
        if sites.size and connected_components(lat, sites) != 1:
            raise ValueError(
                f"region {name} is disconnected; whole-region gauge flips "
                "would not exhaust the projector expansion")


def sector_amplitudes(model: KitaevModel, rm: RegionMap, spec: MeasureSpec,
                      sectors: np.ndarray):
    """Per-sector amplitudes <G_x U_pi> as (log magnitudes, phases).

    Each amplitude is det(W_x)^(1/2) on its principal branch, where W_x is
    the occupied-mode Gram matrix with sign-flipped rows for flagged regions.
    """
    lat = model.lattice
    R = spec.replicas
    dim1 = model.dim
    U1 = model.basis.u_neg
    m = U1.shape[1]

    B = np.zeros((dim1 * R, m * R), dtype=complex)
    for r in range(R):
        B[r * dim1:(r + 1) * dim1, r * m:(r + 1) * m] = U1
    apply_forms(permutation_forms(model, rm, spec), B)

    W0 = np.empty((m * R, m * R), dtype=complex)
    for r in range(R):
        W0[r * m:(r + 1) * m] = U1.conj().T @ B[r * dim1:(r + 1) * dim1]

    local_rows = {}
    for idx, name in enumerate("ABC"):
        sites = rm.sites_in(name)
        local_rows[idx] = (N_CHANNELS * sites[:, None]
                           + np.arange(N_CHANNELS)).ravel()
    sectors = np.asarray(sectors, dtype=np.uint8).reshape(-1, 3 * R)
    needed = {(b // R, b % R) for b in np.flatnonzero(sectors.any(axis=0))}
    corr = {}
    for idx, r in needed:
        rows = local_rows[idx]
        corr[(idx, r)] = U1[rows].conj().T @ B[rows + dim1 * r]

    logmags = np.empty(sectors.shape[0])
    phases = np.empty(sectors.shape[0])
    for si, x in enumerate(sectors):
        W = W0.copy()
        for b in np.flatnonzero(x):
            idx, r = b // R, b % R
            W[r * m:(r + 1) * m] -= 2.0 * corr[(idx, r)]
        amp = amplitude_from_gram(W)
        logmags[si] = amp.log_magnitude
        phases[si] = amp.phase
    return logmags, phases


def combine_sectors(logmags: np.ndarray, phases: np.ndarray):
    """Sum amplitudes given in (log magnitude, phase) form."""
    finite = np.isfinite(logmags)
    if not np.any(finite):
        return 0.0j, -np.inf, 0.0
    lmax = np.max(logmags[finite])
    total = np.sum(np.exp(logmags[finite] - lmax + 1j * phases[finite]))
    if total == 0:
        return 0.0j, -np.inf, 0.0
    return (np.exp(lmax) * total, lmax + np.log(abs(total)),
            float(np.angle(total)))


def evaluate(model: KitaevModel, rm: RegionMap, spec: MeasureSpec, *,
             check_zeta: bool = True, sector_cap: int = 4096,
             return_sectors: bool = False) -> MeasureResult:
    """Replica-permutation overlap of the projected ground state."""
    if spec.charge is not None and spec.charge.strength != 0.0:
        raise ValueError("charge insertions need a conserved U(1); "
                         "use the band-insulator model")
    _validate_regions(model.lattice, rm)
    zeta = model.zeta if check_zeta else 0.0
    if check_zeta and zeta != 1.0:
        raise EvaluationError(
            f"total parity {zeta:+.0f}: gauge projection annihilates the "
            "quadratic ground state in this sector")

    adj_codes = region_adjacency(model.lattice, rm)
    adj = [(REGION_NAMES[a], REGION_NAMES[b]) for a, b in sorted(adj_codes)]
    sectors = surviving_sectors(spec, adj, cap=sector_cap)
    logmags, phases = sector_amplitudes(model, rm, spec, sectors)
    value, logmag, phase = combine_sectors(logmags, phases)
    n_total = 2 ** (3 * spec.replicas)
    return MeasureResult(
        spec.name, spec.replicas, value, logmag, phase, zeta,
        sectors_evaluated=sectors.shape[0],
        sectors_pruned=n_total - sectors.shape[0],
        sector_flags=sectors if return_sectors else None,
        sector_logmags=logmags if return_sectors else None,
        sector_phases=phases if return_sectors else None)


# ---------------------------------------------------------------------------
# dense spin-space ground truth (tiny tori)
# ---------------------------------------------------------------------------

ED_MAX_SITES = 12

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def spin_operator(n_sites: int, factors: dict) -> np.ndarray:
    """Dense product operator; factors maps site -> 'x'|'y'|'z'.

    Site 0 is the most significant qubit, matching a (2,)*n reshape."""
    if n_sites > ED_MAX_SITES:
        raise ValueError(f"dense spin space limited to {ED_MAX_SITES} sites")
    out = np.eye(1, dtype=complex)
    for s in range(n_sites):
        out = np.kron(out, _PAULI[factors[s]] if s in factors else np.eye(2))
    return out


def spin_hamiltonian(lat: HoneycombLattice, params: KitaevParams) -> np.ndarray:
    """H = -sum_<ij>_a J_a sigma_i^a sigma_j^a on the full spin space."""
    if params.k != 0.0:
        raise ValueError("dense ground truth supports k = 0 only")
    H = np.zeros((2 ** lat.sites, 2 ** lat.sites), dtype=complex)
    for e, o, label, _, _ in lat.nn_bonds:
        name = LABELS[label]
        H -= params.j[label] * spin_operator(lat.sites, {int(e): name,
                                                         int(o): name})
    return H


def spin_loop_operator(lat: HoneycombLattice, bonds) -> np.ndarray:
    """Ordered product of sigma_u^l sigma_v^l over the loop bonds (the same
    factor order as the fermionic word, since factors sharing a site
    anticommute)."""
    out = np.eye(2 ** lat.sites, dtype=complex)
    for u, v, label in bonds:
        name = LABELS[int(label)] if not isinstance(label, str) else label
        out = out @ spin_operator(lat.sites, {int(u): name, int(v): name})
    return out


def ed_ground_state(model: KitaevModel):
    """Lowest spin eigenstate in the flux/loop sector of the pinned gauge.

    Projects the dense Hamiltonian onto the joint eigenspace in which every
    plaquette loop and both non-contractible loops match their fermionic
    expectation values, then diagonalizes.  Returns (energy, state vector).
    """
    lat = model.lattice
    H = spin_hamiltonian(lat, model.params)
    proj = np.eye(2 ** lat.sites, dtype=complex)
    loops = list(lat.hexagons())
    loops.append(lat.loop_horizontal(0))
    loops.append(lat.loop_vertical(0))
    for bonds in loops:
        target = loop_expectation(model, bonds)
        if abs(abs(target.real) - 1.0) > 1e-8 or abs(target.imag) > 1e-8:
            raise EvaluationError(f"loop value {target} is not a sign")
        op = spin_loop_operator(lat, bonds)
        proj = proj @ (np.eye(2 ** lat.sites) + np.sign(target.real) * op) / 2.0
    Hp = proj.conj().T @ H @ proj
    w, v = np.linalg.eigh(Hp)
    norms = np.linalg.norm(proj @ v, axis=0)
    inside = np.flatnonzero(norms > 0.5)
    if inside.size == 0:
        raise EvaluationError("flux sector is empty")
    best = inside[np.argmin(w[inside])]
    vec = proj @ v[:, best]
    return float(w[best]), vec / np.linalg.norm(vec)


def _region_axes(rm: RegionMap):
    return [list(map(int, rm.sites_in(name))) for name in ("A", "B", "C", "L")]


def _grouped_tensor(psi: np.ndarray, rm: RegionMap) -> np.ndarray:
    n = rm.region.size
    axes = _region_axes(rm)
    t = psi.reshape((2,) * n).transpose([s for grp in axes for s in grp])
    return t.reshape([2 ** len(grp) for grp in axes])


def ed_overlap(psi: np.ndarray, rm: RegionMap, spec: MeasureSpec) -> complex:
    """<psi^R| U_piA U_piB U_piC |psi^R> by dense tensor contraction.

    The permutation operator routes replica r's region-I indices to replica
    pi_I^{-1}(r), matching the transposition convention of the fermionic
    route."""
    R = spec.replicas
    t = _grouped_tensor(psi, rm)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 4 * R > len(letters):
        raise ValueError("too many replicas for dense contraction")

    def sym(region, r):
        return letters[region * R + (r - 1)]

    inv = [spec.pi(name).inverse() for name in ("A", "B", "C")]
    operands, scripts = [], []
    for r in range(1, R + 1):
        scripts.append("".join(sym(i, r) for i in range(4)))
        operands.append(t.conj())
    for r in range(1, R + 1):
        idx = [sym(i, inv[i](r)) for i in range(3)] + [sym(3, r)]
        scripts.append("".join(idx))
        operands.append(t)
    expr = ",".join(scripts) + "->"
    return complex(np.einsum(expr, *operands, optimize=True))


def ed_purity(psi: np.ndarray, rm: RegionMap, names: str = "AB") -> float:
    """Tr rho_names^2 from a dense state."""
    n = rm.region.size
    keep = [int(s) for name in names for s in rm.sites_in(name)]
    rest = [s for s in range(n) if s not in keep]
    mat = psi.reshape((2,) * n).transpose(keep + rest)
    mat = mat.reshape(2 ** len(keep), 2 ** len(rest))
    rho = mat @ mat.conj().T
    return float(np.real(np.trace(rho @ rho)))
