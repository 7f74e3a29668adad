"""Monte-Carlo evaluation of J_1 and S_{mu,1} on the bosonic nu=1/2 Laughlin
trial state on the sphere.

The wavefunction lives on N spins s_i = +-1 pinned at fixed points on the
sphere, Psi({s}) = delta_{sum s = 0} prod_{n<m} (z_n - z_m)^{s_n s_m / 2},
with z the stereographic image of each point.  The half-integer exponents
make Psi branch-dependent, but a branch change of any single pair log flips
every amplitude by the same sign, so all amplitude *ratios* at a fixed point
set -- the only things the estimators below consume -- are invariant.

Replica estimator: sampling {s^(r)} ~ prod_r |Psi(s^(r))|^2 independently per
replica, a permutation measure becomes

    M = E[ prod_r Psi(t^(r)) / Psi(s^(r)) ],    t^(r)_i = s^(pi_{I(i)}^{-1}(r))_i,

i.e. the permuted configuration t collects region blocks from the replicas
the spec routes there; samples whose t violates the neutrality constraint
contribute exactly zero.  S_{mu,1} carries the extra diagonal weight
exp(mu Q_AC(s^(1))) with the hard-core boson charge Q = sum (s_i + 1)/2.

Phases decay as |M| ~ e^{-alpha sqrt(N)}, so all amplitudes are handled in
log space and results carry binned error bars; region partitions are rotated
(Haar) and averaged to wash out finite-size anisotropy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit
from scipy.optimize import minimize
from scipy.stats import special_ortho_group

from .perms import MeasureSpec, Permutation, spec_jn, spec_smun

REGION_ORDER = "ABCL"


class ConvergenceError(RuntimeError):
    """Point distribution failed to reach the gradient tolerance."""


# ---------------------------------------------------------------------------
# sphere geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphereConfig:
    """N points on the unit sphere plus their stereographic images."""

    points: np.ndarray     # (N, 3) unit vectors
    theta: np.ndarray      # (N,) polar angles in [0, pi]
    phi: np.ndarray        # (N,) azimuths in [0, 2 pi)
    z: np.ndarray          # (N,) complex, tan(theta/2) e^{i phi}

    @property
    def n(self) -> int:
        return self.points.shape[0]


def _sphere_from_points(points: np.ndarray) -> SphereConfig:
    points = points / np.linalg.norm(points, axis=1, keepdims=True)
    theta = np.arccos(np.clip(points[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
    z = np.tan(theta / 2.0) * np.exp(1j * phi)
    return SphereConfig(points, theta, phi, z)


def _fibonacci_points(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    th = np.arccos(1.0 - 2.0 * k / n)
    ph = np.pi * (1.0 + np.sqrt(5.0)) * k
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph),
                     np.cos(th)], axis=1)


def _repulsion(x: np.ndarray, n: int):
    """Energy sum 1/|u_i - u_j| with u = x/|x| and its gradient in x."""
    p = x.reshape(n, 3)
    norm = np.linalg.norm(p, axis=1, keepdims=True)
    u = p / norm
    d = u[:, None, :] - u[None, :, :]
    r = np.sqrt(np.sum(d * d, axis=2))
    np.fill_diagonal(r, np.inf)
    e = 0.5 * np.sum(1.0 / r)
    # dE/du_i = -sum_j (u_i - u_j)/r^3; project to the sphere tangent, then
    # pull back through u = p/|p|
    g_u = -np.sum(d / r[:, :, None] ** 3, axis=1)
    g_u -= u * np.sum(g_u * u, axis=1, keepdims=True)
    return e, (g_u / norm).ravel()


def distribute_points(n: int, seed: int = 0, grad_tol: float = 1e-8,
                      max_iter: int = 5000) -> SphereConfig:
    """Thomson-style even distribution: repulsion minimization from a
    seeded-jitter Fibonacci start."""
    if n < 4 or n % 2:
        raise ValueError("need even N >= 4")
    rng = np.random.default_rng(seed)
    x0 = _fibonacci_points(n) + 1e-3 * rng.standard_normal((n, 3))
    res = minimize(_repulsion, x0.ravel(), args=(n,), jac=True,
                   method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": grad_tol * 1e-2,
                            "ftol": 0.0})
    # L-BFGS line searches stall once energy differences fall below float
    # resolution; polish by descending on the gradient norm itself, which
    # stays accurate (computed directly, not by differencing)
    x = res.x.reshape(n, 3)
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    _, grad = _repulsion(x.ravel(), n)
    gn = np.linalg.norm(grad)
    eta = 0.25
    for _ in range(max_iter):
        if gn <= grad_tol or eta < 1e-12:
            break
        x2 = x - eta * grad.reshape(n, 3)
        x2 /= np.linalg.norm(x2, axis=1, keepdims=True)
        _, g2 = _repulsion(x2.ravel(), n)
        gn2 = np.linalg.norm(g2)
        if gn2 < gn:
            x, grad, gn = x2, g2, gn2
            eta *= 1.1
        else:
            eta *= 0.5
    if gn > grad_tol:
        raise ConvergenceError(
            f"repulsion gradient {gn:.2e} > {grad_tol:.0e} after polish cap")
    return _sphere_from_points(x)


def regions_on_sphere(sphere: SphereConfig,
                      rotation: Optional[np.ndarray] = None,
                      cap_cos: float = 0.0) -> np.ndarray:
    """Region index (0=A, 1=B, 2=C, 3=Lambda) per point.

    The partition is fixed in space -- Lambda the southern hemisphere, A/B/C
    three equal longitude sectors of the north meeting at the pole -- and
    `rotation` rotates the partition relative to the points.  `cap_cos`
    moves the Lambda boundary off the equator (points with p_z < cap_cos
    fall in Lambda); cap_cos = -0.5 makes all four regions equal-area."""
    p = sphere.points
    if rotation is not None:
        p = p @ np.asarray(rotation)        # rows p_i -> R^T p_i per point
    out = np.empty(sphere.n, dtype=np.int64)
    south = p[:, 2] < cap_cos
    out[south] = 3
    az = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2.0 * np.pi)
    sector = np.minimum((az / (2.0 * np.pi / 3.0)).astype(np.int64), 2)
    out[~south] = sector[~south]
    return out


def pair_log_matrix(sphere: SphereConfig) -> np.ndarray:
    """Symmetric matrix of fixed-branch pair logs, M[n, m] = log(z_n - z_m)
    evaluated once for n < m and mirrored; log Psi(s) = (1/4) s^T M s."""
    z = sphere.z
    n = z.size
    M = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(a + 1, n):
            if z[a] == z[b]:
                raise ValueError("coincident stereographic points")
            M[a, b] = M[b, a] = np.log(z[a] - z[b])
    return M


def log_amplitude(s: np.ndarray, sphere: SphereConfig,
                  pair_logs: Optional[np.ndarray] = None) -> complex:
    """log Psi(s) at fixed branch; requires the neutrality constraint."""
    s = np.asarray(s, dtype=float)
    if int(round(s.sum())) != 0:
        raise ValueError("configuration violates sum(s) = 0")
    M = pair_log_matrix(sphere) if pair_logs is None else pair_logs
    return 0.25 * complex(s @ (M @ s))


# ---------------------------------------------------------------------------
# Monte-Carlo core (numba)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MCParams:
    sweeps: int = 100_000
    burnin: int = 10_000
    thin: int = 2
    bins: int = 64
    rotations: int = 24
    seed: int = 0


@dataclass(frozen=True)
class Estimate:
    mean: complex
    stderr: float
    samples: int
    acceptance_rate: float

    def __post_init__(self):
        if self.stderr < 0 or not (0.0 <= self.acceptance_rate <= 1.0):
            raise ValueError("malformed estimate")


@njit(cache=True)
def _attempt_exchanges(M, s, v, logpsi, pos, neg, n_moves):
    """n_moves single-replica exchange attempts; returns acceptances.

    v caches M @ s per replica and logpsi the running log amplitude, both
    updated incrementally (O(N) per accepted move)."""
    n_rep, n = s.shape
    half = n // 2
    acc = 0
    for _ in range(n_moves):
        r = np.random.randint(n_rep)
        ia = np.random.randint(half)
        ib = np.random.randint(half)
        a = pos[r, ia]
        b = neg[r, ib]
        # s_a: +1 -> -1, s_b: -1 -> +1
        delta = 0.5 * (-2.0 * v[r, a] + 2.0 * v[r, b] - 4.0 * M[a, b])
        if np.log(np.random.random()) < 2.0 * delta.real:
            logpsi[r] += delta
            for k in range(n):
                v[r, k] += -2.0 * M[k, a] + 2.0 * M[k, b]
            s[r, a] = -1
            s[r, b] = 1
            pos[r, ia] = b
            neg[r, ib] = a
            acc += 1
    return acc


@njit(cache=True)
def _permuted_weight(M, s, logpsi, src):
    """prod_r Psi(t^(r)) / Psi(s^(r)) in log space; 0 on charge violation."""
    n_rep, n = s.shape
    total = 0.0 + 0.0j
    for r in range(n_rep):
        q = 0
        for i in range(n):
            q += s[src[r, i], i]
        if q != 0:
            return 0.0 + 0.0j
    for r in range(n_rep):
        acc = 0.0 + 0.0j
        for a in range(n):
            ta = s[src[r, a], a]
            row = 0.0 + 0.0j
            for b in range(a + 1, n):
                row += s[src[r, b], b] * M[a, b]
            acc += ta * row
        total += 0.5 * acc - logpsi[r]
    return np.exp(total)


@njit(cache=True)
def _run_chain(M, s, pos, neg, src, qac, mus, seed, sweeps, burnin, thin,
               nbins):
    """One Metropolis chain; returns (bin_sums, bin_counts, acceptances).

    bin_sums[k, j]: sum over bin j of X * exp(mus[k] Q_AC(s^(1))); the plain
    permutation estimator rides along as mus[0] = 0 when requested upstream."""
    np.random.seed(seed)
    n_rep, n = s.shape
    v = np.zeros((n_rep, n), dtype=np.complex128)
    logpsi = np.zeros(n_rep, dtype=np.complex128)
    for r in range(n_rep):
        for a in range(n):
            row = 0.0 + 0.0j
            for b in range(n):
                row += M[a, b] * s[r, b]
            v[r, a] = row
            logpsi[r] += 0.25 * s[r, a] * row

    _attempt_exchanges(M, s, v, logpsi, pos, neg, burnin * n_rep * n)

    n_meas = sweeps // thin
    per_bin = max(1, n_meas // nbins)
    bin_sums = np.zeros((len(mus), nbins), dtype=np.complex128)
    bin_counts = np.zeros(nbins, dtype=np.int64)
    acc = 0
    for m in range(n_meas):
        acc += _attempt_exchanges(M, s, v, logpsi, pos, neg, thin * n_rep * n)
        x = _permuted_weight(M, s, logpsi, src)
        j = min(m // per_bin, nbins - 1)
        if x != 0.0 and len(qac) > 0:
            q = 0.0
            for i in qac:
                q += 0.5 * (s[0, i] + 1.0)
            for k in range(len(mus)):
                bin_sums[k, j] += x * np.exp(mus[k] * q)
        else:
            for k in range(len(mus)):
                bin_sums[k, j] += x
        bin_counts[j] += 1
    return bin_sums, bin_counts, acc


def _source_table(spec: MeasureSpec, regions: np.ndarray) -> np.ndarray:
    """src[q, i] = 0-based replica of the sample that feeds ket factor q at
    point i: <s| prod pi |Psi^R> = prod_q Psi(xi^(q)) with
    xi^(q)_i = s^(pi_{I(i)}(q))_i."""
    pis = [spec.pi(REGION_ORDER[k]) for k in range(4)]
    n_rep = spec.replicas
    src = np.empty((n_rep, regions.size), dtype=np.int64)
    for q in range(1, n_rep + 1):
        for i, reg in enumerate(regions):
            src[q - 1, i] = pis[reg](q) - 1
    return src


def _initial_state(n: int, n_rep: int, rng: np.random.Generator):
    s = np.empty((n_rep, n), dtype=np.int8)
    pos = np.empty((n_rep, n // 2), dtype=np.int64)
    neg = np.empty((n_rep, n // 2), dtype=np.int64)
    for r in range(n_rep):
        perm = rng.permutation(n)
        pos[r] = np.sort(perm[:n // 2])
        neg[r] = np.sort(perm[n // 2:])
        s[r] = -1
        s[r, pos[r]] = 1
    return s, pos, neg


def _combine_bins(bin_sums: np.ndarray, bin_counts: np.ndarray):
    means = bin_sums / bin_counts
    mean = complex(np.sum(bin_sums) / np.sum(bin_counts))
    nb = means.size
    stderr = float(np.sqrt(np.sum(np.abs(means - mean) ** 2)
                           / (nb * (nb - 1))))
    return mean, stderr


def _run_spec(spec: MeasureSpec, sphere: SphereConfig, mc: MCParams,
              mus: Sequence[float], charge_region: str,
              with_rotation_means: bool = False, cap_cos: float = 0.0):
    """Rotation-averaged chains; returns one Estimate per mu.

    with_rotation_means=True additionally returns the (n_mu, rotations)
    array of per-rotation chain means, for phase-error analysis."""
    M = pair_log_matrix(sphere)
    n = sphere.n
    mus = np.asarray(mus, dtype=float)
    rng = np.random.default_rng(mc.seed)
    per_rot = [[] for _ in mus]
    acc_total = 0
    moves_total = 0
    for k in range(mc.rotations):
        rot = np.eye(3) if k == 0 else special_ortho_group.rvs(
            3, random_state=rng)
        regions = regions_on_sphere(sphere, rot, cap_cos=cap_cos)
        src = _source_table(spec, regions)
        qac = np.where((regions == 0) | (regions == 2))[0] \
            if charge_region else np.empty(0, dtype=np.int64)
        s, pos, neg = _initial_state(n, spec.replicas, rng)
        chain_seed = int(rng.integers(2 ** 31 - 1))
        bin_sums, bin_counts, acc = _run_chain(
            M, s, pos, neg, src, qac, mus, chain_seed, mc.sweeps, mc.burnin,
            mc.thin, mc.bins)
        acc_total += acc
        moves_total += (mc.sweeps + mc.burnin) * spec.replicas * n
        for ki in range(len(mus)):
            per_rot[ki].append(_combine_bins(bin_sums[ki], bin_counts))
    if acc_total == 0:
        raise RuntimeError("no exchange move was ever accepted")

    samples = mc.rotations * (mc.sweeps // mc.thin)
    rate = acc_total / moves_total
    out = []
    for ki in range(len(mus)):
        vals = np.array([m for m, _ in per_rot[ki]])
        if mc.rotations == 1:
            mean, err = per_rot[ki][0]
        else:
            mean = complex(vals.mean())
            err = float(np.sqrt(np.sum(np.abs(vals - mean) ** 2)
                                / (len(vals) * (len(vals) - 1))))
        out.append(Estimate(mean, err, samples, rate))
    if with_rotation_means:
        rot_means = np.array([[m for m, _ in per_rot[ki]]
                              for ki in range(len(mus))])
        return out, rot_means
    return out


def estimate_j1(sphere: SphereConfig, mc: MCParams,
                spec: Optional[MeasureSpec] = None,
                with_rotation_means: bool = False):
    """Monte-Carlo J_1 (or any uncharged pizza measure via `spec`)."""
    out = _run_spec(spec if spec is not None else spec_jn(1),
                    sphere, mc, [0.0], charge_region="",
                    with_rotation_means=with_rotation_means)
    if with_rotation_means:
        return out[0][0], out[1][0]
    return out[0]


def estimate_smu1(mus: Sequence[float], sphere: SphereConfig,
                  mc: MCParams, with_rotation_means: bool = False):
    """S_{mu,1} on a mu grid, all values from the same chains."""
    return _run_spec(spec_smun(1), sphere, mc, mus, charge_region="AC",
                     with_rotation_means=with_rotation_means)


# ---------------------------------------------------------------------------
# exact enumeration oracle (small N)
# ---------------------------------------------------------------------------

def _neutral_configs(n: int) -> np.ndarray:
    from itertools import combinations
    out = []
    for ups in combinations(range(n), n // 2):
        s = -np.ones(n, dtype=np.int8)
        s[list(ups)] = 1
        out.append(s)
    return np.array(out)


def enumerate_measure(spec: MeasureSpec, sphere: SphereConfig,
                      rotation: Optional[np.ndarray] = None,
                      mu: float = 0.0, cap_cos: float = 0.0) -> complex:
    """Brute-force M = <Psi*R| (charge) prod pi |Psi*R> / <Psi|Psi>^R.

    Cost is C(N, N/2)^R log-amplitude evaluations; N=8 with three replicas
    (343k terms) is the intended anchor scale."""
    M = pair_log_matrix(sphere)
    regions = regions_on_sphere(sphere, rotation, cap_cos=cap_cos)
    src = _source_table(spec, regions)
    configs = _neutral_configs(sphere.n).astype(float)
    nc = configs.shape[0]
    n_rep = spec.replicas
    logs = 0.25 * np.einsum("ki,ij,kj->k", configs, M, configs)
    ref = logs.real.max()
    norm = np.exp(2.0 * (logs.real - ref)).sum()

    grids = np.meshgrid(*([np.arange(nc)] * n_rep), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)   # (nc^R, R)
    contrib = np.ones(idx.shape[0], dtype=complex)
    cols = np.arange(sphere.n)
    for r in range(n_rep):
        t = configs[idx[:, src[r]], cols]                # (nc^R, N)
        lt = 0.25 * np.einsum("ki,ij,kj->k", t, M, t)
        lt[np.abs(t.sum(axis=1)) > 0.5] = -np.inf        # charge-violating t
        contrib *= np.exp(lt - ref)
        contrib *= np.conj(np.exp(logs[idx[:, r]] - ref))
    if mu != 0.0:
        qac = np.where((regions == 0) | (regions == 2))[0]
        q = 0.5 * (configs[:, qac] + 1.0).sum(axis=1)
        contrib *= np.exp(mu * q[idx[:, 0]])
    return complex(contrib.sum() / norm ** n_rep)
