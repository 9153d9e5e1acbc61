"""Covariance-matrix representation of zero-mean Gaussian states.

Quadrature ordering is (x_1, p_1, x_2, p_2, ...) with the vacuum at
cov = I/2. This module is the independent cross-check for the Fock engine:
it evolves second moments under the same thermal / squeezing /
beam-splitter / loss circuits and produces exact mean occupations and
vacuum (no-click) probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-12
UNCERTAINTY_TOL = 1e-10

GAUSSIAN_OPS = ("thermal", "squeeze", "beam_splitter", "loss")


class NonGaussianOperationError(Exception):
    """A circuit contains an operation outside the Gaussian set."""


def symplectic_form(n_modes: int) -> np.ndarray:
    omega1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), omega1)


@dataclass(frozen=True)
class CovarianceState:
    """Zero-mean Gaussian state of ``n_modes`` bosonic modes."""

    cov: np.ndarray

    def __post_init__(self):
        cov = np.array(self.cov, dtype=float)
        object.__setattr__(self, "cov", cov)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance shape {cov.shape} is not (2m, 2m)")
        if np.abs(cov - cov.T).max() > SYMMETRY_TOL:
            raise ValueError("covariance matrix not symmetric within tolerance")
        omega = symplectic_form(cov.shape[0] // 2)
        w = np.linalg.eigvalsh(cov + 0.5j * omega)
        if w.min() < -UNCERTAINTY_TOL:
            raise ValueError(
                f"uncertainty relation violated (min eigenvalue {w.min():.3e})")
        cov.setflags(write=False)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    @classmethod
    def vacuum(cls, n_modes: int) -> "CovarianceState":
        return cls(0.5 * np.eye(2 * n_modes))

    def mean_occupation(self, mode: int) -> float:
        k = 2 * mode
        return 0.5 * (self.cov[k, k] + self.cov[k + 1, k + 1]) - 0.5

    def _submatrix(self, modes) -> np.ndarray:
        idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
        return self.cov[np.ix_(idx, idx)]

    def vacuum_probability(self, modes=None) -> float:
        """P(all listed modes measured in the vacuum), default all modes."""
        if modes is None:
            modes = range(self.n_modes)
        sub = self._submatrix(list(modes))
        return 1.0 / np.sqrt(np.linalg.det(sub + 0.5 * np.eye(sub.shape[0])))


def _embed(n_modes: int, block: np.ndarray, modes) -> np.ndarray:
    s = np.eye(2 * n_modes)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    s[np.ix_(idx, idx)] = block
    return s


def _rot(phi: float) -> np.ndarray:
    return np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])


def apply_symplectic(state: CovarianceState, s: np.ndarray) -> CovarianceState:
    return CovarianceState(s @ state.cov @ s.T)


def set_thermal(state: CovarianceState, mode: int, n_bar: float) -> CovarianceState:
    """Replace one mode by an uncorrelated thermal state."""
    if n_bar < 0:
        raise ValueError(f"n_bar must be >= 0, got {n_bar}")
    cov = np.array(state.cov)
    k = 2 * mode
    cov[k:k + 2, :] = 0.0
    cov[:, k:k + 2] = 0.0
    cov[k, k] = cov[k + 1, k + 1] = n_bar + 0.5
    return CovarianceState(cov)


def two_mode_squeeze(state: CovarianceState, mode_a: int, mode_b: int,
                     r: float, phase: float = 0.0) -> CovarianceState:
    c, s = np.cosh(r), np.sinh(r)
    # a -> cosh r * a + e^{i phase} sinh r * b^dag
    mix = s * (_rot(phase) @ np.diag([1.0, -1.0]))
    block = np.block([[c * np.eye(2), mix], [mix.T, c * np.eye(2)]])
    return apply_symplectic(state, _embed(state.n_modes, block, [mode_a, mode_b]))


def beam_splitter(state: CovarianceState, mode_a: int, mode_b: int,
                  transmittance: float, phase: float = 0.0) -> CovarianceState:
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    theta = np.arcsin(np.sqrt(transmittance))
    c, s = np.cos(theta), np.sin(theta)
    mix = s * _rot(phase)
    block = np.block([[c * np.eye(2), mix], [-mix.T, c * np.eye(2)]])
    return apply_symplectic(state, _embed(state.n_modes, block, [mode_a, mode_b]))


def loss(state: CovarianceState, mode: int, eta: float) -> CovarianceState:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    x = np.eye(2 * state.n_modes)
    y = np.zeros_like(x)
    k = 2 * mode
    x[k, k] = x[k + 1, k + 1] = np.sqrt(eta)
    y[k, k] = y[k + 1, k + 1] = 0.5 * (1.0 - eta)
    return CovarianceState(x @ state.cov @ x.T + y)


def to_covariance(n_modes: int, ops) -> CovarianceState:
    """Run a sequence of Gaussian ops on an all-vacuum register.

    Each op is a tuple: ("thermal", mode, n_bar), ("squeeze", a, b, r[, phase]),
    ("beam_splitter", a, b, transmittance[, phase]) or ("loss", mode, eta).
    """
    state = CovarianceState.vacuum(n_modes)
    for op in ops:
        name, *args = op
        if name == "thermal":
            state = set_thermal(state, *args)
        elif name == "squeeze":
            state = two_mode_squeeze(state, *args)
        elif name == "beam_splitter":
            state = beam_splitter(state, *args)
        elif name == "loss":
            state = loss(state, *args)
        else:
            raise NonGaussianOperationError(
                f"operation {name!r} is not in the Gaussian set {GAUSSIAN_OPS}")
    return state


def gaussian_click_stats(state: CovarianceState, etas) -> dict:
    """No-click statistics of threshold detectors with efficiencies ``etas``.

    Applies per-mode loss, then evaluates vacuum-projection probabilities.
    Returns per-mode no-click probabilities, the joint no-click probability
    and the (pre-loss) mean occupations.
    """
    etas = list(etas)
    if len(etas) != state.n_modes:
        raise ValueError("one efficiency per mode required")
    means = [state.mean_occupation(m) for m in range(state.n_modes)]
    lossy = state
    for m, eta in enumerate(etas):
        lossy = loss(lossy, m, eta)
    return {
        "no_click": [lossy.vacuum_probability([m]) for m in range(state.n_modes)],
        "joint_no_click": lossy.vacuum_probability(),
        "mean_occupation": means,
    }
