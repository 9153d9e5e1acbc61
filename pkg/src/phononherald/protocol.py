"""Write/read pulse protocol: outcome tables and trial sampling.

For a given configuration and write->read delay, the full quantum pipeline
(thermal mechanics, two-mode squeezing write, write-side threshold
detection, absorption-heating rethermalization, beam-splitter read-out,
read-side detection) is collapsed into a 16-entry table of joint click
patterns (W1, W2, R1, R2). Trials are then O(1) categorical draws from
that table using counter-based deterministic random numbers, which makes
1e7+ trials cheap and embarrassingly parallel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng, tags
from .config import ExperimentConfig
from .detection import DetectorModel, pair_click_matrix
from .fock import (TwoModeFockState, add_thermal_noise, beam_splitter,
                   thermal_state, two_mode_squeeze, vacuum_rho)

PROB_SUM_TOL = 1e-9
SAMPLE_CHUNK = 1_000_000


def heating_occupation(delta_t_ns: float, heating) -> float:
    """Mechanical occupation a delay after the write pulse.

    Phenomenological rise (absorbed pump heat arriving with time constant
    tau_rise) times mechanical decay back to the bath (t_decay).
    """
    if delta_t_ns < 0:
        raise ValueError(f"delta_t must be >= 0, got {delta_t_ns}")
    t_us = delta_t_ns * 1e-3
    rise = 1.0 - np.exp(-t_us / heating.tau_rise_us)
    decay = np.exp(-t_us / heating.t_decay_us)
    return heating.n_base + heating.a_heat * rise * decay


def _window_detectors(config: ExperimentConfig, window_ns: float) -> tuple[DetectorModel, DetectorModel]:
    chain = config.chain
    leak = chain.leak_mean_photons(config.protocol.p_pair)
    dark = chain.dark_prob(window_ns)
    return (DetectorModel(chain.detector_efficiency(1), dark, leak),
            DetectorModel(chain.detector_efficiency(2), dark, leak))


@dataclass(frozen=True)
class OutcomeTable:
    """Joint click-pattern distribution for one (config, delay) point.

    ``probs[w1*8 + w2*4 + r1*2 + r2]`` is the probability of the pattern.
    ``herald_occupation_write`` / ``_read`` record the conditional
    mechanical occupation for each write pattern before and after the
    rethermalization step (bookkeeping for diagnostics and tests).
    """

    delta_t_ns: float
    probs: np.ndarray
    write_pattern_probs: np.ndarray
    herald_occupation_write: np.ndarray
    herald_occupation_read: np.ndarray

    def __post_init__(self):
        total = float(self.probs.sum())
        if abs(total - 1.0) > PROB_SUM_TOL or self.probs.min() < -1e-15:
            raise ValueError(f"outcome table sums to {total}, not 1")

    def _marginal(self, mask_fn) -> float:
        idx = np.arange(16)
        w1, w2 = (idx >> 3) & 1, (idx >> 2) & 1
        r1, r2 = (idx >> 1) & 1, idx & 1
        return float(self.probs[mask_fn(w1, w2, r1, r2)].sum())

    def p_write(self) -> float:
        return self._marginal(lambda w1, w2, r1, r2: (w1 | w2) == 1)

    def p_read(self) -> float:
        return self._marginal(lambda w1, w2, r1, r2: (r1 | r2) == 1)

    def p_write_and_read(self) -> float:
        return self._marginal(lambda w1, w2, r1, r2: ((w1 | w2) & (r1 | r2)) == 1)

    def g2_cross_implied(self) -> float:
        return self.p_write_and_read() / (self.p_write() * self.p_read())

    def g2_auto_write_implied(self) -> float:
        p1 = self._marginal(lambda w1, w2, r1, r2: w1 == 1)
        p2 = self._marginal(lambda w1, w2, r1, r2: w2 == 1)
        p12 = self._marginal(lambda w1, w2, r1, r2: (w1 & w2) == 1)
        return p12 / (p1 * p2)

    def g2_auto_read_implied(self) -> float:
        p1 = self._marginal(lambda w1, w2, r1, r2: r1 == 1)
        p2 = self._marginal(lambda w1, w2, r1, r2: r2 == 1)
        p12 = self._marginal(lambda w1, w2, r1, r2: (r1 & r2) == 1)
        return p12 / (p1 * p2)

    def classical_bound_implied(self) -> float:
        return float(np.sqrt(self.g2_auto_write_implied() * self.g2_auto_read_implied()))


def _conditional_mech_states(state: TwoModeFockState, q_patterns: np.ndarray):
    """Unnormalized mechanical states conditioned on optical click patterns.

    The POVM elements are diagonal in the optical number basis, so the
    conditional mode-A operator is a q-weighted partial trace over mode B.
    """
    d = state.dim
    r4 = state.rho.reshape(d, d, d, d)
    out = []
    for q in q_patterns:
        out.append(np.einsum("injn,n->ij", r4, q.astype(complex)))
    return out


def build_outcome_table(config: ExperimentConfig, delta_t_ns: float) -> OutcomeTable:
    """Run the write/heat/read pipeline into a 16-pattern click table."""
    n_max = config.numerics.n_max
    leak_tol = config.numerics.leak_tol
    proto = config.protocol
    heat = config.heating

    mech = thermal_state(heat.n_base, n_max, leak_tol)
    state = TwoModeFockState.from_single_modes(mech, vacuum_rho(n_max), leak_tol)
    state = two_mode_squeeze(state, np.arcsinh(np.sqrt(proto.p_pair)))

    det_w = _window_detectors(config, config.chain.window_write_ns)
    q_write = pair_click_matrix(n_max, *det_w)
    cond = _conditional_mech_states(state, q_write)
    weights = np.array([float(np.trace(c).real) for c in cond])

    delta_n = heating_occupation(delta_t_ns, heat) - heat.n_base + heat.read_heat
    delta_n = max(delta_n, 0.0)

    det_r = _window_detectors(config, config.chain.window_read_ns)
    q_read = pair_click_matrix(n_max, *det_r)

    ns = np.arange(n_max + 1)
    probs = np.empty(16)
    occ_write = np.empty(4)
    occ_read = np.empty(4)
    for wp, (rho_c, w) in enumerate(zip(cond, weights)):
        rho_m = rho_c / w
        occ_write[wp] = float(np.real(np.diag(rho_m)) @ ns)
        rho_m = add_thermal_noise(rho_m, delta_n)
        occ_read[wp] = float(np.real(np.diag(rho_m)) @ ns)
        pair = TwoModeFockState.from_single_modes(rho_m, vacuum_rho(n_max), leak_tol)
        pair = beam_splitter(pair, proto.eps_read)
        read_marginal = pair.joint_number_distribution().sum(axis=0)
        probs[wp * 4: wp * 4 + 4] = w * (q_read @ read_marginal)
    return OutcomeTable(delta_t_ns, probs, weights, occ_write, occ_read)


def _trial_layout(config: ExperimentConfig, trials_per_setting: int):
    """Global trial-index blocks: setting k owns [k*N, (k+1)*N)."""
    settings = config.protocol.delta_t_list_ns
    return [(k * trials_per_setting, delta_t) for k, delta_t in enumerate(settings)]


def read_window_start_ps(config: ExperimentConfig, delta_t_ns: float) -> int:
    return int(round((config.chain.window_write_ns + delta_t_ns) * 1000.0))


_SLOTS = (
    (3, 0, tags.WRITE_PULSE),   # bit, detector, pulse label
    (2, 1, tags.WRITE_PULSE),
    (1, 0, tags.READ_PULSE),
    (0, 1, tags.READ_PULSE),
)


def _sample_chunk(table: OutcomeTable, config: ExperimentConfig, seed: int,
                  start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.uint64)
    cdf = np.cumsum(table.probs)
    patterns = np.searchsorted(cdf, rng.uniforms(seed, idx, 0), side="right")
    patterns = np.minimum(patterns, 15)  # guard against cdf[-1] rounding below 1
    write_len = int(round(config.chain.window_write_ns * 1000.0))
    read_len = int(round(config.chain.window_read_ns * 1000.0))
    read_start = read_window_start_ps(config, table.delta_t_ns)
    parts = []
    for slot, (bit, detector, label) in enumerate(_SLOTS):
        mask = (patterns >> bit) & 1 == 1
        if not mask.any():
            continue
        hit = idx[mask]
        u = rng.uniforms(seed, hit, 1 + slot)
        if label == tags.WRITE_PULSE:
            time_ps = (u * write_len).astype(np.uint64)
        else:
            time_ps = np.uint64(read_start) + (u * read_len).astype(np.uint64)
        parts.append(tags.make_records(hit, detector, label, time_ps))
    if not parts:
        return np.zeros(0, dtype=tags.RECORD_DTYPE)
    records = np.concatenate(parts)
    order = np.lexsort((records["detector"], records["pulse_label"],
                        records["trial_index"]))
    return records[order]


def sample_trials(config: ExperimentConfig, tables, trials_per_setting=None,
                  seed=None, threads: int = 1) -> tags.TagStream:
    """Draw one click pattern per trial and emit a sorted tag stream.

    Identical (config, seed) produce byte-identical streams for any number
    of threads: every variate is a pure function of (seed, trial_index).
    """
    if trials_per_setting is None:
        trials_per_setting = config.protocol.trials
    if seed is None:
        seed = config.seed
    layout = _trial_layout(config, trials_per_setting)
    if len(tables) != len(layout):
        raise ValueError("one outcome table per delta_t setting required")

    jobs = []
    for (offset, delta_t), table in zip(layout, tables):
        if abs(table.delta_t_ns - delta_t) > 1e-9:
            raise ValueError("outcome tables out of order with delta_t_list")
        for start in range(offset, offset + trials_per_setting, SAMPLE_CHUNK):
            stop = min(start + SAMPLE_CHUNK, offset + trials_per_setting)
            jobs.append((table, start, stop))

    def run(job):
        table, start, stop = job
        return _sample_chunk(table, config, seed, start, stop)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    records = (np.concatenate(parts) if parts
               else np.zeros(0, dtype=tags.RECORD_DTYPE))
    total = trials_per_setting * len(layout)
    return tags.TagStream(config.config_hash(), total, records)


@dataclass(frozen=True)
class ThermometryResult:
    pulses_per_color: int
    clicks_blue: int
    clicks_red: int
    background_click_prob: float
    ideal_asymmetry: float

    @property
    def rate_blue(self) -> float:
        return self.clicks_blue / self.pulses_per_color

    @property
    def rate_red(self) -> float:
        return self.clicks_red / self.pulses_per_color

    @property
    def rate_blue_corrected(self) -> float:
        return max(self.rate_blue - self.background_click_prob, 0.0)

    @property
    def rate_red_corrected(self) -> float:
        return max(self.rate_red - self.background_click_prob, 0.0)


def _sideband_click_probs(config: ExperimentConfig, strength: float,
                          ideal: bool = False):
    """Write-window click-pattern probabilities for a blue (Stokes) and a
    red (anti-Stokes) pulse of equal interaction strength."""
    n_max = config.numerics.n_max
    leak_tol = config.numerics.leak_tol
    mech = thermal_state(config.heating.n_base, n_max, leak_tol)
    base = TwoModeFockState.from_single_modes(mech, vacuum_rho(n_max), leak_tol)
    blue = two_mode_squeeze(base, np.arcsinh(np.sqrt(strength)))
    red = beam_splitter(base, strength)
    if ideal:
        chain = config.chain
        dets = (DetectorModel(chain.detector_efficiency(1)),
                DetectorModel(chain.detector_efficiency(2)))
    else:
        dets = _window_detectors(config, config.chain.window_write_ns)
    q = pair_click_matrix(n_max, *dets)
    out = []
    for state in (blue, red):
        marginal = state.joint_number_distribution().sum(axis=0)
        out.append(q @ marginal)
    return out


def simulate_thermometry(config: ExperimentConfig, pulses: int,
                         seed=None) -> ThermometryResult:
    """Alternating blue/red pulse trains at the baseline occupation.

    Blue pulses run the two-mode-squeezing (Stokes) interaction, red pulses
    the beam-splitter (anti-Stokes) interaction at the same strength, so
    the ideal detected-rate asymmetry is (n+1)/n.
    """
    if pulses <= 0:
        raise ValueError(f"pulses must be > 0, got {pulses}")
    if seed is None:
        seed = config.seed
    per_color = pulses // 2
    p_blue, p_red = _sideband_click_probs(config, config.protocol.p_pair)
    p_blue_ideal, p_red_ideal = _sideband_click_probs(
        config, config.protocol.p_pair, ideal=True)
    ideal_asym = (1.0 - p_blue_ideal[0]) / (1.0 - p_red_ideal[0])

    def count_clicks(pattern_probs, offset):
        clicks = 0
        cdf = np.cumsum(pattern_probs)
        for start in range(0, per_color, SAMPLE_CHUNK):
            stop = min(start + SAMPLE_CHUNK, per_color)
            idx = np.arange(offset + start, offset + stop, dtype=np.uint64)
            pats = np.searchsorted(cdf, rng.uniforms(seed, idx, 0), side="right")
            clicks += int((pats > 0).sum())
        return clicks

    clicks_blue = count_clicks(p_blue, 0)
    clicks_red = count_clicks(p_red, per_color)
    det_w = _window_detectors(config, config.chain.window_write_ns)
    background = 1.0 - det_w[0].background_silent_prob * det_w[1].background_silent_prob
    return ThermometryResult(per_color, clicks_blue, clicks_red,
                             background, float(ideal_asym))


def simulate_pump_probe(config: ExperimentConfig, pump_heat_amplitude: float,
                        delta_t_us_grid) -> np.ndarray:
    """Expected read-window count rate versus pump-probe delay.

    Linearized anti-Stokes model: C_R = alpha * n_m(delta_t) + C_leak, with
    alpha set by the read transfer efficiency and the detector chain.
    """
    heat = config.heating.__class__(
        n_base=config.heating.n_base, a_heat=pump_heat_amplitude,
        tau_rise_us=config.heating.tau_rise_us,
        t_decay_us=config.heating.t_decay_us)
    chain = config.chain
    eta_sum = chain.detector_efficiency(1) + chain.detector_efficiency(2)
    alpha = config.protocol.eps_read * eta_sum
    leak = chain.leak_mean_photons(config.protocol.p_pair)
    c_leak = (eta_sum * leak + 2.0 * chain.dark_prob(chain.window_read_ns))
    grid = np.asarray(delta_t_us_grid, dtype=float)
    occ = np.array([heating_occupation(t * 1e3, heat) for t in grid])
    return alpha * occ + c_leak
