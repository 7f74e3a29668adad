"""Gaussian (free-Majorana) operator algebra and expectation values.

Operators are exponentials of quadratic forms exp(c^T M c / 4) in Majorana
operators with {c_p, c_q} = 2 delta_pq and M antisymmetric (complex allowed).
Products map to single-particle matrix products, exp(A)exp(B) = exp(M) with
e^A e^B = e^M, so a product of operators is represented by the product of the
(2m x 2m) matrix exponentials and no matrix logarithms are ever taken.

For |psi0> the ground state of H = (1/4) c^T H c with H = i A (A real
antisymmetric) diagonalized as H = U D U^dagger, D = diag(-E_N..-E_1,
E_1..E_N), the expectation of a Gaussian operator with total matrix E is

    <psi0| exp(c^T M c / 4) |psi0> = +- sqrt(det (U^dag E U)_11)

with the subscript the negative-eigenvalue block.  The square-root branch is
undetermined; `sign_resolve` fixes it by continuity along a parameter path
from a reference value.

A dense Fock-space oracle (Jordan-Wigner construction, <= 16 Majoranas) and a
Pfaffian-based Wick evaluator for Majorana monomials provide independent
routes used throughout the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm


class BranchError(RuntimeError):
    """Square-root branch could not be resolved along the given path."""


class DegenerateSpectrumError(ValueError):
    """Single-particle spectrum has an eigenvalue within tolerance of zero."""


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticForm:
    """Exponent of a Gaussian operator exp(c^T M c / 4), block-local layout.

    The form touches `idx[b]` (one row of Majorana indices per block b) and
    places the same k x k antisymmetric `block` on each; blocks are disjoint.
    M is the (dim x dim) matrix with `block` scattered on every index row.
    A fully dense form is the special case idx = [range(dim)].
    """

    dim: int
    idx: np.ndarray    # (nb, k) int
    block: np.ndarray  # (k, k) complex antisymmetric

    def __post_init__(self):
        idx = np.atleast_2d(np.asarray(self.idx, dtype=np.int64))
        block = np.asarray(self.block, dtype=complex)
        object.__setattr__(self, "idx", idx)
        object.__setattr__(self, "block", block)
        k = block.shape[0]
        if block.shape != (k, k) or idx.shape[1] != k:
            raise ValueError("block/index shape mismatch")
        if np.max(np.abs(block + block.T)) > 1e-12:
            raise ValueError("block must be antisymmetric")
        flat = idx.ravel()
        if flat.size != np.unique(flat).size:
            raise ValueError("blocks must touch disjoint Majorana indices")
        if flat.min() < 0 or flat.max() >= self.dim:
            raise ValueError("Majorana index out of range")

    @staticmethod
    def dense(matrix: np.ndarray) -> "QuadraticForm":
        matrix = np.asarray(matrix, dtype=complex)
        dim = matrix.shape[0]
        return QuadraticForm(dim, np.arange(dim)[None, :], matrix)

    @staticmethod
    def pair_rotations(dim: int, pairs, angle: complex) -> "QuadraticForm":
        """exp(sum_pairs (angle/2) c_p c_q): per-pair Givens by `angle`."""
        pairs = np.atleast_2d(np.asarray(pairs, dtype=np.int64))
        block = np.array([[0.0, angle], [-angle, 0.0]], dtype=complex)
        return QuadraticForm(dim, pairs, block)

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=complex)
        for row in self.idx:
            m[np.ix_(row, row)] += self.block
        return m

    def exp_block(self) -> np.ndarray:
        k = self.block.shape[0]
        if k == 2:
            a = self.block[0, 1]
            c, s = np.cos(a), np.sin(a)
            return np.array([[c, s], [-s, c]], dtype=complex)
        return expm(self.block)

    def apply_exp(self, B: np.ndarray) -> None:
        """B <- exp(M) @ B in place (B tall: rows indexed by Majoranas)."""
        e = self.exp_block()
        k = self.idx.shape[1]
        rows = B[self.idx.ravel()].reshape(self.idx.shape[0], k, -1)
        B[self.idx.ravel()] = np.einsum("ab,nbc->nac", e, rows).reshape(
            self.idx.size, -1)


def gaussian_product(forms: Sequence[QuadraticForm], dim: int) -> np.ndarray:
    """Single-particle matrix prod_k exp(M_k), forms[0] leftmost."""
    E = np.eye(dim, dtype=complex)
    for f in reversed(forms):
        if f.dim != dim:
            raise ValueError("dimension mismatch")
        f.apply_exp(E)
    return E


def apply_forms(forms: Sequence[QuadraticForm], B: np.ndarray) -> None:
    """B <- (prod_k exp(M_k)) @ B, forms[0] leftmost."""
    for f in reversed(forms):
        f.apply_exp(B)


# ---------------------------------------------------------------------------
# ground basis and expectations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroundBasis:
    """Eigenbasis of H = iA; columns of u_neg span the negative-energy modes."""

    spectrum: np.ndarray   # ascending eigenvalues of iA
    u_neg: np.ndarray      # (2m, m) negative-eigenvalue columns
    u_full: np.ndarray     # (2m, 2m) full unitary

    @property
    def dim(self) -> int:
        return self.u_full.shape[0]

    def covariance(self) -> np.ndarray:
        """Two-point function C_pq = <c_p c_q> = delta_pq + off-diagonal part."""
        p = self.u_neg @ self.u_neg.conj().T
        return 2.0 * p.conj()

    def ground_energy(self) -> float:
        return float(np.sum(self.spectrum[self.spectrum < 0]) / 2.0)


def ground_basis(A: np.ndarray, gap_tol: float = 1e-9) -> GroundBasis:
    A = np.asarray(A)
    if np.max(np.abs(A + A.T)) > 1e-10:
        raise ValueError("A must be antisymmetric")
    if A.shape[0] % 2:
        raise ValueError("odd Majorana count")
    w, u = np.linalg.eigh(1j * A)
    if np.min(np.abs(w)) <= gap_tol:
        raise DegenerateSpectrumError(
            f"eigenvalue {np.min(np.abs(w)):.3e} within gap tolerance of zero")
    m = A.shape[0] // 2
    return GroundBasis(w, np.ascontiguousarray(u[:, :m]), u)


@dataclass(frozen=True)
class SignedAmplitude:
    value: complex
    log_magnitude: float
    phase: float
    branch_resolved: bool = False
    path_steps: int = 0


def amplitude_from_gram(W: np.ndarray) -> SignedAmplitude:
    """Principal square root of det(W), W = (U^dag E U)_11, in log form."""
    sign, logabs = np.linalg.slogdet(W)
    if sign == 0 or not np.isfinite(logabs):
        return SignedAmplitude(0.0j, -np.inf, 0.0)
    phase = np.angle(sign) / 2.0
    logmag = logabs / 2.0
    return SignedAmplitude(np.exp(logmag + 1j * phase), logmag, phase)


def expectation(basis: GroundBasis, E: np.ndarray) -> SignedAmplitude:
    """<psi0| O |psi0> for the Gaussian operator with matrix E (up to branch)."""
    W = basis.u_neg.conj().T @ (E @ basis.u_neg)
    return amplitude_from_gram(W)


def sign_resolve(compute: Callable[[float], complex],
                 reference_value: complex,
                 steps: int = 8,
                 max_steps: int = 1024) -> SignedAmplitude:
    """Resolve the +-sqrt branch of an amplitude path t in [0,1].

    `compute(t)` returns the principal-branch amplitude; the true amplitude is
    +-compute(t) and continuous, with compute(0) = +-reference_value known.
    Signs are chained so successive phases jump by < 90 degrees; the grid is
    refined (doubled) until that holds everywhere or max_steps is exceeded.
    """
    if abs(reference_value) == 0:
        raise BranchError("reference value must be nonzero")
    n = steps
    while True:
        ts = np.linspace(0.0, 1.0, n + 1)
        vals = [complex(compute(t)) for t in ts]
        if any(abs(v) == 0 for v in vals):
            raise BranchError("amplitude vanishes on the path")
        ok = True
        cur = vals[0]
        if abs(np.angle(cur / reference_value)) > np.pi / 2:
            cur = -cur
        if abs(np.angle(cur / reference_value)) > np.pi / 2 - 1e-12:
            raise BranchError("amplitude at t=0 incompatible with reference")
        for v in vals[1:]:
            # a jump that lands close to neither branch means the grid is
            # too coarse to know which sign to chain; refine instead of
            # guessing (the wrong guess would silently negate everything)
            jump = abs(np.angle(v / cur))
            if min(jump, np.pi - jump) > np.pi / 3:
                ok = False
                break
            cur = v if jump <= np.pi / 2 else -v
        if ok:
            return SignedAmplitude(cur, np.log(abs(cur)), np.angle(cur),
                                   branch_resolved=True, path_steps=n)
        n *= 2
        if n > max_steps:
            raise BranchError(f"branch not resolved within {max_steps} steps")


# ---------------------------------------------------------------------------
# dense Fock-space oracle (Jordan-Wigner), <= 16 Majoranas
# ---------------------------------------------------------------------------

FOCK_MAX_MAJORANAS = 16

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I = np.eye(2, dtype=complex)


@lru_cache(maxsize=8)
def majorana_matrices(dim: int):
    """Dense gamma_0..gamma_{dim-1}; mode k pairs (gamma_2k, gamma_2k+1),
    f_k = (gamma_2k + i gamma_2k+1)/2, occupation bit k is the k-th most
    significant bit of the Fock index."""
    if dim % 2 or dim > FOCK_MAX_MAJORANAS:
        raise ValueError(f"need even dim <= {FOCK_MAX_MAJORANAS}")
    m = dim // 2
    gammas = []
    for k in range(m):
        for op in (_X, _Y):
            mat = np.eye(1, dtype=complex)
            for j in range(m):
                mat = np.kron(mat, _Z if j < k else (op if j == k else _I))
            gammas.append(mat)
    return tuple(gammas)


def fock_operator(form: QuadraticForm) -> np.ndarray:
    """Dense matrix of exp(c^T M c / 4)."""
    g = majorana_matrices(form.dim)
    M = form.to_dense()
    h = np.zeros_like(g[0])
    for p in range(form.dim):
        for q in range(form.dim):
            if M[p, q] != 0:
                h += 0.25 * M[p, q] * (g[p] @ g[q])
    return expm(h)


def fock_product(forms: Sequence[QuadraticForm],
                 dim: Optional[int] = None) -> np.ndarray:
    if not forms:
        if dim is None:
            raise ValueError("empty product needs an explicit dim")
        return np.eye(2 ** (dim // 2), dtype=complex)
    out = None
    for f in forms:
        op = fock_operator(f)
        out = op if out is None else out @ op
    return out


def fock_ground_state(A: np.ndarray, gap_tol: float = 1e-9):
    """(energy, vector) of the many-body ground state of (1/4) c^T (iA) c."""
    dim = A.shape[0]
    g = majorana_matrices(dim)
    H = np.zeros_like(g[0])
    iA = 1j * np.asarray(A, dtype=complex)
    for p in range(dim):
        for q in range(dim):
            if iA[p, q] != 0:
                H += 0.25 * iA[p, q] * (g[p] @ g[q])
    w, v = np.linalg.eigh(H)
    if w[1] - w[0] <= gap_tol:
        raise DegenerateSpectrumError("many-body ground state degenerate")
    return float(w[0]), v[:, 0]


def fock_expectation(A: np.ndarray, forms: Sequence[QuadraticForm]) -> complex:
    _, psi = fock_ground_state(A)
    return complex(psi.conj() @ (fock_product(forms) @ psi))


# ---------------------------------------------------------------------------
# Pfaffian and Wick evaluation of Majorana monomials
# ---------------------------------------------------------------------------

def pfaffian(A: np.ndarray) -> complex:
    """Pfaffian of an antisymmetric matrix (Parlett-Reid with pivoting)."""
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if n % 2:
        return 0.0j
    if n == 0:
        return 1.0 + 0.0j
    pf = 1.0 + 0.0j
    for k in range(0, n - 2, 2):
        pivot = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if pivot != k + 1:
            A[[k + 1, pivot]] = A[[pivot, k + 1]]
            A[:, [k + 1, pivot]] = A[:, [pivot, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0:
            return 0.0j
        pf *= A[k, k + 1]
        tau = A[k, k + 2:] / A[k, k + 1]
        col = A[k + 2:, k + 1]
        A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return pf * A[n - 2, n - 1]


def reduce_majorana_word(indices: Sequence[int]):
    """Sort a Majorana monomial to ascending index order.

    Returns (sign, reduced) where gamma_{i1}..gamma_{ik} = sign *
    prod_{j in reduced} gamma_j with `reduced` strictly ascending (repeated
    factors cancel via gamma^2 = 1)."""
    word = list(indices)
    sign = 1
    # insertion sort, counting transpositions of distinct anticommuting factors
    for i in range(1, len(word)):
        j = i
        while j > 0 and word[j - 1] > word[j]:
            word[j - 1], word[j] = word[j], word[j - 1]
            sign = -sign
            j -= 1
    out = []
    for x in word:
        if out and out[-1] == x:
            out.pop()
        else:
            out.append(x)
    return sign, out


def wick_expectation(indices: Sequence[int], covariance: np.ndarray) -> complex:
    """<gamma_{i1} ... gamma_{ik}> in a Gaussian state with C_pq = <c_p c_q>."""
    sign, word = reduce_majorana_word(indices)
    if not word:
        return complex(sign)
    if len(word) % 2:
        return 0.0j
    sub = covariance[np.ix_(word, word)].copy()
    np.fill_diagonal(sub, 0.0)
    return sign * pfaffian(sub)
