"""Charged Renyi modular commutator S_{mu,n} on a lattice Chern insulator.

The model is two decoupled copies of the gapped honeycomb c sector (uniform
bond gauge, no b Majoranas).  The copies combine into one complex fermion per
site, f_i = (c_i^(1) + i c_i^(2))/2, and the copy-rotation U(1) acts as
f -> e^{i phi} f; the filled band inherits the c sector's unit Chern number,
so the state carries Hall conductance sigma_xy = 1/(2 pi).

S_{mu,n} = <Psi| exp(mu Q_AC) pi_AB |Psi> on n+1 replica copies of the ground
state is a single Gaussian expectation -- no gauge sectors, no sum.  The
square-root branch of the Gaussian formula is chained along an ascending mu
grid from the mu=0 anchor, whose value equals Tr rho_AB^{n+1} > 0.

Majorana layout: index = 2*N*r + 2*i + f for replica r, site i, copy f.

Convention contract (frozen once against the dense Fock oracle on <= 16
Majoranas; see tests): each replica transposition acts per site and copy as a
pair rotation at angle +pi/2, applied in `Permutation.transpositions()` order
with the first transposition leftmost; the charge factor is a pair rotation
of the two copies at imaginary angle i*mu, realizing exp(mu Q) with
Q_i = (i/2) c_i^(1) c_i^(2) = f_i^dag f_i - 1/2.  With these choices the mu=0
value is +Tr rho_AB^{n+1} with no sign correction for any replica count.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .gauss import (QuadraticForm, amplitude_from_gram, apply_forms,
                    ground_basis)
from .lattice import HoneycombLattice, RegionMap, build_lattice, default_regions
from .perms import Permutation


@dataclass(frozen=True)
class ChernParams:
    """Couplings of the doubled free-Majorana model (both copies identical)."""

    n_s: int
    j: float = 1.0
    k: float = 0.3

    def __post_init__(self):
        if self.n_s < 2:
            raise ValueError("n_s >= 2")
        if self.k == 0.0:
            raise ValueError("k = 0 closes the gap (Dirac cones survive)")


@dataclass(frozen=True)
class ChernResult:
    mu: float
    n: int
    value: complex
    log_magnitude: float
    phase: float


def single_copy_matrix(params: ChernParams,
                       lat: Optional[HoneycombLattice] = None) -> np.ndarray:
    """c-sector kernel with uniform gauge: one Majorana per site, A real
    antisymmetric, H = (1/4) c^T (iA) c."""
    if lat is None:
        lat = build_lattice(params.n_s)
    A = np.zeros((lat.sites, lat.sites))

    def add(p, q, val):
        A[p, q] += val
        A[q, p] -= val

    for e, o, _, _, _ in lat.nn_bonds:
        add(int(e), int(o), 2.0 * params.j)
    for i, j, nu, _, _ in lat.nnn_bonds:
        add(int(i), int(j), 2.0 * params.k * nu)
    return A


def copy_rotation_generator(n_sites: int) -> np.ndarray:
    """Antisymmetric generator Omega of the copy U(1); [A_doubled, Omega] = 0."""
    omega = np.zeros((2 * n_sites, 2 * n_sites))
    for i in range(n_sites):
        omega[2 * i, 2 * i + 1] = 1.0
        omega[2 * i + 1, 2 * i] = -1.0
    return omega


def doubled_matrix(A1: np.ndarray) -> np.ndarray:
    """Two identical copies of A1 in the (site, copy) interleaved layout."""
    n = A1.shape[0]
    A = np.zeros((2 * n, 2 * n), dtype=A1.dtype)
    for f in (0, 1):
        idx = 2 * np.arange(n) + f
        A[np.ix_(idx, idx)] = A1
    return A


def build_chern(params: ChernParams) -> np.ndarray:
    """Single-replica quadratic kernel of the doubled model (2N x 2N)."""
    return doubled_matrix(single_copy_matrix(params))


def charge_form(mu: float, sites_ac: Sequence[int], n_sites: int,
                replicas: int) -> QuadraticForm:
    """exp(mu Q_AC) acting on replica 1 (layout index r=0)."""
    sites_ac = np.asarray(sites_ac, dtype=np.int64)
    pairs = np.stack([2 * sites_ac, 2 * sites_ac + 1], axis=1)
    return QuadraticForm.pair_rotations(2 * n_sites * replicas, pairs,
                                        1j * mu)


def replica_swap_forms(n: int, sites_ab: Sequence[int],
                       n_sites: int) -> List[QuadraticForm]:
    """Cyclic permutation of n+1 replicas over AB, leftmost factor first."""
    if n < 1:
        raise ValueError("n >= 1")
    replicas = n + 1
    cyc = Permutation.from_cycles(replicas, [tuple(range(1, replicas + 1))])
    sites_ab = np.asarray(sites_ab, dtype=np.int64)
    dim = 2 * n_sites * replicas
    forms = []
    for r1, r2 in cyc.transpositions():
        p = ((r1 - 1) * 2 * n_sites + 2 * sites_ab[:, None]
             + np.array([0, 1])[None, :]).ravel()
        q = ((r2 - 1) * 2 * n_sites + 2 * sites_ab[:, None]
             + np.array([0, 1])[None, :]).ravel()
        forms.append(QuadraticForm.pair_rotations(
            dim, np.stack([p, q], axis=1), 0.5 * np.pi))
    return forms


def _replica_negative_basis(A1: np.ndarray, replicas: int) -> np.ndarray:
    """Negative-energy basis of the replicated doubled model, assembled from
    the single-copy diagonalization (block structure; column order is free)."""
    gb = ground_basis(A1)
    u1 = gb.u_neg                      # (N, N/2)
    n = A1.shape[0]
    half = u1.shape[1]
    dim = 2 * n * replicas
    u_neg = np.zeros((dim, 2 * replicas * half), dtype=complex)
    col = 0
    for r in range(replicas):
        for f in (0, 1):
            rows = r * 2 * n + 2 * np.arange(n) + f
            u_neg[rows, col:col + half] = u1
            col += half
    return u_neg


def _charged_gram_updater(u_neg: np.ndarray, Y: np.ndarray,
                          sites_ac: Sequence[int]):
    """Closure mu -> W(mu) = u_neg^dag exp(mu Q) Y as a rank-2|AC| update."""
    sites_ac = np.asarray(sites_ac, dtype=np.int64)
    rows = np.stack([2 * sites_ac, 2 * sites_ac + 1], axis=1).ravel()
    W0 = u_neg.conj().T @ Y
    Uc = u_neg[rows].conj()            # (2|AC|, m)
    Yc = Y[rows]

    def gram(mu: float) -> np.ndarray:
        if mu == 0.0:
            return W0
        ch, sh = np.cosh(mu), np.sinh(mu)
        delta = np.empty_like(Yc)
        delta[0::2] = (ch - 1.0) * Yc[0::2] + (1j * sh) * Yc[1::2]
        delta[1::2] = (-1j * sh) * Yc[0::2] + (ch - 1.0) * Yc[1::2]
        return W0 + Uc.T @ delta

    return gram


def smun_from_matrix(A1: np.ndarray, sites_ab: Sequence[int],
                     sites_ac: Sequence[int], mus: Sequence[float], n: int,
                     mu_step: float = 0.25) -> List[ChernResult]:
    """S_{mu,n} for every mu in `mus` on the doubled model of A1.

    The branch sign is chained along the ascending union of `mus`, inserted
    intermediate points (spacing <= mu_step), and the mu=0 anchor, at which
    the value is pinned real positive (= Tr rho_AB^{n+1})."""
    mus = np.asarray(list(mus), dtype=float)
    if np.any(mus < 0):
        raise ValueError("mu >= 0 (the phase is even in mu; see tests)")
    grid = {0.0}
    for mu in mus:
        grid.add(float(mu))
        k = int(np.ceil(mu / mu_step))
        grid.update(float(mu) * i / k for i in range(1, k))
    path = sorted(grid)

    replicas = n + 1
    u_neg = _replica_negative_basis(A1, replicas)
    Y = u_neg.copy()
    apply_forms(replica_swap_forms(n, sites_ab, A1.shape[0]), Y)
    gram = _charged_gram_updater(u_neg, Y, sites_ac)

    values = {}
    prev = None
    for mu in path:
        amp = amplitude_from_gram(gram(mu))
        if not np.isfinite(amp.log_magnitude):
            raise FloatingPointError(f"vanishing Gram determinant at mu={mu}")
        val = amp.value
        if prev is None:
            if abs(val.imag) > 1e-8 * abs(val):
                raise FloatingPointError(
                    f"mu=0 anchor not real: {val:.3e} (convention broken)")
            val = complex(abs(val.real))
        else:
            if abs(np.angle(val / prev)) > np.pi / 2:
                val = -val
            if abs(np.angle(val / prev)) > np.pi / 2 - 1e-9:
                raise FloatingPointError(
                    f"branch ambiguous at mu={mu}; refine mu_step")
        values[mu] = val
        prev = val
    return [ChernResult(float(mu), n, values[float(mu)],
                        float(np.log(abs(values[float(mu)]))),
                        float(np.angle(values[float(mu)])))
            for mu in mus]


def smun_grid(params: ChernParams, mus: Sequence[float], n: int,
              rm: Optional[RegionMap] = None) -> List[ChernResult]:
    """S_{mu,n} over a mu grid on the honeycomb pizza regions."""
    lat = build_lattice(params.n_s)
    if rm is None:
        rm = default_regions(lat)
    for mu in mus:
        if mu > params.n_s / 4.0:
            warnings.warn(f"mu={mu} outside the validity window mu << L/xi "
                          f"(heuristic bound n_s/4 = {params.n_s / 4.0})")
    A1 = single_copy_matrix(params, lat)
    return smun_from_matrix(A1, rm.sites_in_union("AB"),
                            rm.sites_in_union("AC"), mus, n)


def evaluate_smun(params: ChernParams, mu: float, n: int,
                  rm: Optional[RegionMap] = None) -> ChernResult:
    """Single-point S_{mu,n}; grids should use smun_grid (shared basis)."""
    return smun_grid(params, [mu], n, rm)[0]
