"""Closed-form predictions for the universal phases of the measures.

For a chiral topological phase with central charge c_- and anyon data
(d_a, theta_a), the built-in measure families have

    arg J_n   = -(2 pi c_-/24) * 2 n^2 / ((2n+1)(n+1))
    Phi_r    ~  exp(i 2 pi (c_-/24) (-r - 2/r)) * sum_a d_a^2 theta_a^r
    arg K_n   = +(2 pi c_-/24) * n (2n-1) / (2n+1)
    arg S_mun =  sigma_xy * n mu^2 / (2 (n+1))        (valid mu << L/xi)

together with the n->0 replica limit (i/n^2)(J_n - conj J_n) -> pi c_-/3 and
the charged analogue -2i sigma_xy.  A decorated-edge toy state produces a
spurious J_n phase of a different functional form, kept here as a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


def _wrap(angle: float) -> float:
    """Map to (-pi, pi]."""
    if -np.pi < angle <= np.pi:
        return float(angle)
    return float(np.angle(np.exp(1j * angle)))


@dataclass(frozen=True)
class AnyonModel:
    """Chiral central charge plus quantum dimensions / topological spins."""

    c_minus: float
    d: np.ndarray       # quantum dimensions, d[0] = 1 for the vacuum
    theta: np.ndarray   # unit-modulus topological spins

    def __post_init__(self):
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=complex))
        if self.d.shape != self.theta.shape or self.d.ndim != 1:
            raise ValueError("d and theta must be 1d arrays of equal length")
        if np.any(self.d < 1.0 - 1e-9):
            raise ValueError("quantum dimensions must be >= 1")
        if np.max(np.abs(np.abs(self.theta) - 1.0)) > 1e-9:
            raise ValueError("topological spins must be unit modulus")

    @property
    def total_dim_sq(self) -> float:
        return float(np.sum(self.d ** 2))


@dataclass(frozen=True)
class HallData:
    sigma_xy: float


def ising_model() -> AnyonModel:
    """c_- = 1/2; anyons 1, sigma, psi."""
    return AnyonModel(0.5, [1.0, np.sqrt(2.0), 1.0],
                      [1.0, np.exp(1j * np.pi / 8), -1.0])


def toric_code_model() -> AnyonModel:
    """c_- = 0; anyons 1, e, m, em."""
    return AnyonModel(0.0, [1.0] * 4, [1.0, 1.0, 1.0, -1.0])


def semion_model() -> AnyonModel:
    """c_- = 1; anyons 1, s with theta_s = i (nu=1/2 bosonic Laughlin)."""
    return AnyonModel(1.0, [1.0, 1.0], [1.0, 1j])


BUILTIN_MODELS = {"ising": ising_model, "toric_code": toric_code_model,
                  "semion": semion_model}


# ---------------------------------------------------------------------------
# phases
# ---------------------------------------------------------------------------

def arg_jn(c_minus: float, n: int) -> float:
    if n < 1:
        raise ValueError("n >= 1")
    return _wrap(-(TWO_PI * c_minus / 24.0) * 2.0 * n ** 2
                 / ((2 * n + 1) * (n + 1)))


def arg_kn(c_minus: float, n: int) -> float:
    if n < 1:
        raise ValueError("n >= 1")
    return _wrap((TWO_PI * c_minus / 24.0) * n * (2 * n - 1) / (2 * n + 1))


def phi_r_phase(model: AnyonModel, r: int) -> complex:
    """Unit-modulus phase of Phi_r, or 0j when the anyon sum vanishes.

    The sum sum_a d_a^2 theta_a^r can vanish identically (e.g. the semion
    model at even r), in which case the subleading, non-universal part
    dominates and no phase is predicted.
    """
    if r < 2:
        raise ValueError("r >= 2")
    s = np.sum(model.d ** 2 * model.theta ** r)
    if abs(s) < 1e-12 * model.total_dim_sq:
        return 0j
    framing = np.exp(1j * TWO_PI * (model.c_minus / 24.0) * (-r - 2.0 / r))
    phase = framing * s / abs(s)
    return complex(phase)


def arg_smun(sigma_xy: float, mu: float, n: int) -> float:
    if n < 1:
        raise ValueError("n >= 1")
    return _wrap(sigma_xy * n * mu ** 2 / (2.0 * (n + 1)))


def modular_commutator(c_minus: float) -> float:
    """J = pi c_- / 3 (not wrapped; it is a commutator value, not a phase)."""
    return np.pi * c_minus / 3.0


def charged_modular_commutator(sigma_xy: float) -> complex:
    """Charged analogue -2i sigma_xy."""
    return -2j * sigma_xy


def spurious_arg_jn(alpha: float, beta: float, gamma: float, n: int) -> float:
    """Spurious J_n phase of the decorated-edge toy state.

    tan(arg J_n) = gamma k_n(a) k_n(b)
                   / (l_n(a) l_n(b) + a l_n(b) k_n(a) + b l_n(a) k_n(b))
    with l_n(x) = ((1+x)^n + (1-x)^n)/2, k_n(x) = ((1+x)^n - (1-x)^n)/2.
    Functional form differs from arg_jn — a diagnostic for spurious
    (non-topological) contributions.
    """
    if n < 1:
        raise ValueError("n >= 1")

    def lam(x):
        return 0.5 * ((1 + x) ** n + (1 - x) ** n)

    def kap(x):
        return 0.5 * ((1 + x) ** n - (1 - x) ** n)

    num = gamma * kap(alpha) * kap(beta)
    den = (lam(alpha) * lam(beta) + alpha * lam(beta) * kap(alpha)
           + beta * lam(alpha) * kap(beta))
    return float(np.arctan2(num, den))


def replica_limit_check(c_minus: float, h0: float = 0.5, depth: int = 10):
    """Extrapolate (i/n^2)(J_n - conj J_n) to n -> 0 and compare to pi c_-/3.

    Treats n as a continuous parameter in the closed-form phase (the measure
    is unit-modulus for the ideal state), so the quantity is -2 sin(theta_n)/n^2
    with theta_n the raw (unwrapped) J_n exponent.  Richardson extrapolation
    with step halving; returns (limit, expected, abs_error).
    """
    def f(n):
        theta = -(TWO_PI * c_minus / 24.0) * 2.0 * n ** 2 / ((2 * n + 1) * (n + 1))
        return -2.0 * np.sin(theta) / n ** 2

    t = [[f(h0 / 2 ** k)] for k in range(depth)]
    for j in range(1, depth):
        for i in range(j, depth):
            t[i].append((2 ** j * t[i][j - 1] - t[i - 1][j - 1]) / (2 ** j - 1))
    limit = t[depth - 1][depth - 1]
    expected = modular_commutator(c_minus)
    return float(limit), float(expected), float(abs(limit - expected))


# ---------------------------------------------------------------------------
# anyon-table serialization:  header "c_minus=<v>", lines "d theta_re theta_im"
# ---------------------------------------------------------------------------

def format_anyon_table(model: AnyonModel) -> str:
    lines = [f"c_minus={float(model.c_minus)!r}"]
    for d, th in zip(model.d, model.theta):
        lines.append(f"{float(d)!r} {float(th.real)!r} {float(th.imag)!r}")
    return "\n".join(lines) + "\n"


def parse_anyon_table(text: str) -> AnyonModel:
    c_minus = None
    d, theta = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("c_minus="):
            c_minus = float(line.split("=", 1)[1])
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"bad anyon line: {line!r}")
        d.append(float(parts[0]))
        theta.append(float(parts[1]) + 1j * float(parts[2]))
    if c_minus is None:
        raise ValueError("missing c_minus header")
    if not d:
        raise ValueError("no anyon rows")
    return AnyonModel(c_minus, np.array(d), np.array(theta))
