"""Truncated Fock-space engine for a pair of bosonic modes.

States are density operators on the tensor basis |n_A> x |n_B| with mode A
listed first and a common per-mode photon-number cutoff ``n_max``. All
channels return new states; nothing is mutated in place. Every constructor
and channel re-checks the state invariants (trace, Hermiticity, positivity
and top-level truncation leakage), so a state that survives a pipeline is
guaranteed to be numerically trustworthy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import binom

DEFAULT_N_MAX = 8
DEFAULT_LEAK_TOL = 1e-8
TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-12
EIGENVALUE_TOL = -1e-10
N_FLOOR = 1e-12


class TruncationError(Exception):
    """The state leaks population into the top Fock level of a mode."""


class StateInvariantError(Exception):
    """Trace, Hermiticity or positivity of a density operator is broken."""


class UndefinedCorrelationError(Exception):
    """g2 requested for a mode whose mean occupation is below the floor."""


def destroy(n_max: int) -> np.ndarray:
    """Single-mode annihilation operator on the truncated space."""
    d = n_max + 1
    a = np.zeros((d, d), dtype=complex)
    ns = np.arange(1, d)
    a[ns - 1, ns] = np.sqrt(ns)
    return a


def thermal_probs(n_bar: float, n_max: int) -> np.ndarray:
    """Renormalized truncated geometric distribution with mean ~ n_bar."""
    if n_bar < 0:
        raise ValueError(f"n_bar must be >= 0, got {n_bar}")
    if n_bar == 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return p
    ns = np.arange(n_max + 1)
    p = np.exp(ns * np.log(n_bar / (1.0 + n_bar))) / (1.0 + n_bar)
    return p / p.sum()


def thermal_state(n_bar: float, n_max: int = DEFAULT_N_MAX,
                  leak_tol: float = DEFAULT_LEAK_TOL) -> np.ndarray:
    """Single-mode thermal density operator, diagonal in the Fock basis.

    Raises TruncationError when the (pre-normalization) population of the
    top level exceeds ``leak_tol``.
    """
    p = thermal_probs(n_bar, n_max)
    if p[-1] > leak_tol:
        raise TruncationError(
            f"thermal state n_bar={n_bar} leaks {p[-1]:.3e} into level "
            f"{n_max} (tolerance {leak_tol:.1e})")
    return np.diag(p).astype(complex)


def fock_state(n: int, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Projector onto |n> as a single-mode density operator."""
    if not 0 <= n <= n_max:
        raise ValueError(f"Fock index {n} outside [0, {n_max}]")
    rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    rho[n, n] = 1.0
    return rho


def vacuum_rho(n_max: int) -> np.ndarray:
    return fock_state(0, n_max)


@dataclass(frozen=True)
class TwoModeFockState:
    """Two-mode density operator with per-mode cutoff ``n_max``.

    ``rho`` has shape ((n_max+1)**2, (n_max+1)**2) in the kron ordering
    where mode A is the slow index.
    """

    rho: np.ndarray
    n_max: int
    leak_tol: float = DEFAULT_LEAK_TOL

    def __post_init__(self):
        object.__setattr__(self, "rho", np.array(self.rho, dtype=complex))
        validate_two_mode(self.rho, self.n_max, self.leak_tol)
        self.rho.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @classmethod
    def from_single_modes(cls, rho_a: np.ndarray, rho_b: np.ndarray,
                          leak_tol: float = DEFAULT_LEAK_TOL) -> "TwoModeFockState":
        if rho_a.shape != rho_b.shape:
            raise ValueError("mode cutoffs must match")
        n_max = rho_a.shape[0] - 1
        return cls(np.kron(rho_a, rho_b), n_max, leak_tol)

    @classmethod
    def vacuum(cls, n_max: int = DEFAULT_N_MAX,
               leak_tol: float = DEFAULT_LEAK_TOL) -> "TwoModeFockState":
        return cls.from_single_modes(vacuum_rho(n_max), vacuum_rho(n_max), leak_tol)

    def joint_number_distribution(self) -> np.ndarray:
        """P(n_A, n_B) as a real (d, d) array."""
        d = self.dim
        return np.real(np.diag(self.rho)).reshape(d, d)

    def reduced(self, mode: str) -> np.ndarray:
        """Partial trace down to a single-mode density operator."""
        d = self.dim
        r = self.rho.reshape(d, d, d, d)
        if mode == "A":
            return np.einsum("injn->ij", r)
        if mode == "B":
            return np.einsum("nink->ik", r)
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")

    def mean_occupation(self, mode: str) -> float:
        p = self.joint_number_distribution()
        ns = np.arange(self.dim)
        if mode == "A":
            return float(p.sum(axis=1) @ ns)
        if mode == "B":
            return float(p.sum(axis=0) @ ns)
        raise ValueError(f"mode must be 'A' or 'B', got {mode!r}")


def validate_two_mode(rho: np.ndarray, n_max: int, leak_tol: float) -> None:
    d = n_max + 1
    if rho.shape != (d * d, d * d):
        raise ValueError(f"rho shape {rho.shape} inconsistent with n_max={n_max}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateInvariantError(f"trace {tr} deviates from 1 by {abs(tr-1):.3e}")
    if np.abs(rho - rho.conj().T).max() > HERMITICITY_TOL:
        raise StateInvariantError("density operator not Hermitian within tolerance")
    w = np.linalg.eigvalsh(rho)
    if w.min() < EIGENVALUE_TOL:
        raise StateInvariantError(f"negative eigenvalue {w.min():.3e}")
    p = np.real(np.diag(rho)).reshape(d, d)
    leak_a = p[d - 1, :].sum()
    leak_b = p[:, d - 1].sum()
    if leak_a > leak_tol or leak_b > leak_tol:
        raise TruncationError(
            f"top-level population (A={leak_a:.3e}, B={leak_b:.3e}) exceeds "
            f"leak_tol={leak_tol:.1e}; state is truncation-unsafe")


def _apply_unitary(state: TwoModeFockState, generator: np.ndarray) -> TwoModeFockState:
    # generator is anti-Hermitian, so i*G is Hermitian and the truncated
    # propagator is exactly unitary (trace preserved by construction).
    h = 1j * generator
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w)) @ v.conj().T
    rho = u @ state.rho @ u.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return TwoModeFockState(rho, state.n_max, state.leak_tol)


def two_mode_squeeze(state: TwoModeFockState, r: float, phase: float = 0.0) -> TwoModeFockState:
    """Apply U = exp[r (e^{i phase} a_A^dag a_B^dag - h.c.)]."""
    if r < 0:
        raise ValueError(f"squeezing parameter must be >= 0, got {r}")
    if r == 0:
        return state
    a = destroy(state.n_max)
    eye = np.eye(state.dim)
    ab = np.kron(a, eye) @ np.kron(eye, a)
    g = r * (np.exp(1j * phase) * ab.conj().T - np.exp(-1j * phase) * ab)
    return _apply_unitary(state, g)


def beam_splitter(state: TwoModeFockState, transmittance: float,
                  phase: float = 0.0) -> TwoModeFockState:
    """Two-mode rotation that swaps a fraction ``transmittance`` of mode A
    into mode B (and vice versa): at transmittance 1 the modes exchange.
    """
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    if transmittance == 0:
        return state
    theta = np.arcsin(np.sqrt(transmittance))
    a = destroy(state.n_max)
    eye = np.eye(state.dim)
    cross = np.kron(a.conj().T, eye) @ np.kron(eye, a)
    g = theta * (np.exp(1j * phase) * cross - np.exp(-1j * phase) * cross.conj().T)
    return _apply_unitary(state, g)


def loss_kraus(eta: float, n_max: int) -> list[np.ndarray]:
    """Kraus decomposition of the single-mode loss channel."""
    d = n_max + 1
    ns = np.arange(d)
    ops = []
    for k in range(d):
        diag = np.zeros(d)
        idx = ns[ns >= k]
        diag[idx - k] = np.sqrt(binom(idx, k) * eta ** (idx - k) * (1 - eta) ** k)
        kk = np.zeros((d, d))
        kk[ns[: d - k], ns[: d - k] + k] = diag[: d - k]
        ops.append(kk)
    return ops


def attenuate_single(rho: np.ndarray, eta: float) -> np.ndarray:
    """Loss channel with transmissivity ``eta`` on a single-mode operator."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if eta == 1.0:
        return rho.copy()
    out = np.zeros_like(rho)
    for k in loss_kraus(eta, rho.shape[0] - 1):
        out += k @ rho @ k.conj().T
    return out


def attenuate(state: TwoModeFockState, mode: str, eta: float) -> TwoModeFockState:
    """Single-mode loss channel applied to mode A or B of a two-mode state."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if eta == 1.0:
        return state
    eye = np.eye(state.dim)
    out = np.zeros_like(state.rho)
    for k in loss_kraus(eta, state.n_max):
        full = np.kron(k, eye) if mode == "A" else np.kron(eye, k)
        out += full @ state.rho @ full.conj().T
    out = 0.5 * (out + out.conj().T)
    return TwoModeFockState(out, state.n_max, state.leak_tol)


def _number_moments(p_n: np.ndarray) -> tuple[float, float]:
    ns = np.arange(p_n.size)
    mean = float(p_n @ ns)
    pair = float(p_n @ (ns * (ns - 1)))
    return mean, pair


def g2_auto(state: TwoModeFockState, mode: str, n_floor: float = N_FLOOR) -> float:
    """<n(n-1)> / <n>^2 evaluated exactly on the truncated state."""
    p = state.joint_number_distribution()
    p_n = p.sum(axis=1) if mode == "A" else p.sum(axis=0)
    mean, pair = _number_moments(p_n)
    if mean <= n_floor:
        raise UndefinedCorrelationError(
            f"mode {mode} mean occupation {mean:.3e} below floor {n_floor:.1e}")
    return pair / mean ** 2


def g2_auto_single(rho: np.ndarray, n_floor: float = N_FLOOR) -> float:
    """Autocorrelation of a bare single-mode density operator."""
    p_n = np.real(np.diag(rho))
    mean, pair = _number_moments(p_n)
    if mean <= n_floor:
        raise UndefinedCorrelationError(
            f"mean occupation {mean:.3e} below floor {n_floor:.1e}")
    return pair / mean ** 2


def g2_cross(state: TwoModeFockState, n_floor: float = N_FLOOR) -> float:
    """<n_A n_B> / (<n_A><n_B>) evaluated exactly on the truncated state."""
    p = state.joint_number_distribution()
    ns = np.arange(state.dim)
    mean_a = float(p.sum(axis=1) @ ns)
    mean_b = float(p.sum(axis=0) @ ns)
    if mean_a <= n_floor or mean_b <= n_floor:
        raise UndefinedCorrelationError(
            f"mean occupations ({mean_a:.3e}, {mean_b:.3e}) below floor {n_floor:.1e}")
    cross = float(ns @ p @ ns)
    return cross / (mean_a * mean_b)


def add_thermal_noise(rho: np.ndarray, delta_n: float) -> np.ndarray:
    """Additive thermal noise on a single-mode state: <n> -> <n> + delta_n.

    Realized as a pure-loss channel with transmissivity 1/G followed by a
    quantum-limited amplifier of gain G = 1 + delta_n (the amplifier is a
    two-mode squeezer against a vacuum ancilla, traced out). The composite
    is the classical additive-noise Gaussian channel: unit transmissivity,
    covariance grows by delta_n per quadrature pair.
    """
    if delta_n < 0:
        raise ValueError(f"delta_n must be >= 0, got {delta_n}")
    if delta_n < 1e-15:
        return rho.copy()
    gain = 1.0 + delta_n
    n_max = rho.shape[0] - 1
    cooled = attenuate_single(rho, 1.0 / gain)
    # leak check deferred to the caller's final state; the intermediate
    # amplified joint state may legitimately populate the ancilla top level
    state = TwoModeFockState(np.kron(cooled, vacuum_rho(n_max)), n_max, leak_tol=1.0)
    amplified = two_mode_squeeze(state, np.arccosh(np.sqrt(gain)))
    return amplified.reduced("A")
