"""Threshold (click / no-click) detector models.

SNSPD-style detectors: a mode with n photons produces a click with
probability 1 - (1-eta)^n, independently convolved with dark counts
(per-window probability) and Poissonian leaked pump photons (mean photon
number per pulse reaching the detector, thinned by the same efficiency).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import TwoModeFockState


@dataclass(frozen=True)
class DetectorModel:
    """One threshold detector.

    efficiency: per-photon detection probability for photons in the
        monitored mode. When two detectors share one mode behind a
        beam-splitter, the split ratio is folded into each efficiency.
    dark_prob: probability of at least one dark count in the window.
    leak_mean: mean leaked pump photons reaching this detector per pulse.
    """

    efficiency: float
    dark_prob: float = 0.0
    leak_mean: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency {self.efficiency} outside [0, 1]")
        if not 0.0 <= self.dark_prob < 1.0:
            raise ValueError(f"dark_prob {self.dark_prob} outside [0, 1)")
        if self.leak_mean < 0.0:
            raise ValueError(f"leak_mean {self.leak_mean} must be >= 0")

    @property
    def background_silent_prob(self) -> float:
        """Probability that neither dark counts nor leak produce a click."""
        return (1.0 - self.dark_prob) * float(np.exp(-self.efficiency * self.leak_mean))

    def silent_probs(self, n_max: int) -> np.ndarray:
        """P(no click | n photons in the mode), n = 0..n_max."""
        ns = np.arange(n_max + 1)
        return (1.0 - self.efficiency) ** ns * self.background_silent_prob


def pair_click_matrix(n_max: int, det1: DetectorModel, det2: DetectorModel) -> np.ndarray:
    """Joint click POVM for two detectors watching one mode.

    Returns a (4, n_max+1) array q[pattern, n] with pattern index
    2*click1 + click2. Each photon independently reaches detector 1 with
    probability det1.efficiency, detector 2 with det2.efficiency
    (efficiencies include the splitting ratio, so their sum must be <= 1).
    """
    e1, e2 = det1.efficiency, det2.efficiency
    if e1 + e2 > 1.0 + 1e-12:
        raise ValueError(f"combined efficiencies {e1}+{e2} exceed 1")
    ns = np.arange(n_max + 1)
    b1 = det1.background_silent_prob
    b2 = det2.background_silent_prob
    s1 = (1.0 - e1) ** ns * b1            # detector 1 silent
    s2 = (1.0 - e2) ** ns * b2            # detector 2 silent
    s12 = np.maximum(1.0 - e1 - e2, 0.0) ** ns * b1 * b2   # both silent
    q = np.empty((4, n_max + 1))
    q[0] = s12               # 00
    q[1] = s1 - s12          # 01
    q[2] = s2 - s12          # 10
    q[3] = 1.0 - s1 - s2 + s12   # 11
    return q


def click_probabilities(state: TwoModeFockState, det_a: DetectorModel,
                        det_b: DetectorModel) -> np.ndarray:
    """Joint click table for independent detectors on modes A and B.

    Returns a (2, 2) array P[click_A, click_B]; the table sums to 1.
    """
    p = state.joint_number_distribution()
    sa = det_a.silent_probs(state.n_max)
    sb = det_b.silent_probs(state.n_max)
    p_a_marg = p.sum(axis=1)
    p_b_marg = p.sum(axis=0)
    p00 = float(sa @ p @ sb)
    pa_silent = float(sa @ p_a_marg)
    pb_silent = float(sb @ p_b_marg)
    table = np.array([
        [p00, pa_silent - p00],
        [pb_silent - p00, 1.0 - pa_silent - pb_silent + p00],
    ])
    return table
