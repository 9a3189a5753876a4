"""Spiking neuronal agents that refine radial contour points.

Each contour point owns a 1D agent moving on the ray from the object
center through the point, with position p(lam) = lam * pc + (1 - lam) * p0.
An 8-neuron, 3-layer leaky integrate-and-fire network turns two local
stimulation fields into motion: the agent is attracted by the mask field E
and repulsed by the brightness field S, and settles where they balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contour import RadialContour
from .image import ScaleFactor, as_gray, gaussian_smooth

# neuron indices: sensory layer (LS, LE, RE, RS), inhibitory (LI, RI),
# motor (LM, RM)
LS, LE, RE, RS, LI, RI, LM, RM = range(8)

EXC_SYNAPSES = ((LS, LI), (LS, RM), (RS, RI), (RS, LM), (LE, LM), (RE, RM))
INH_SYNAPSES = ((LI, LM), (RI, RM))


@dataclass(frozen=True)
class AgentConfig:
    """All agent constants; defaults follow the reference values."""

    stim_intensity: float = 3000.0
    s_factor: float = 3.0 / 8.0
    sample_offset: float = 0.2
    speed_gain: float = 0.06
    lambda_init: float = 1.0
    lambda_min: float = 0.0
    lambda_max: float = 1.5
    window_ms: float = 5.0
    dt_ms: float = 0.1
    tau_m_ms: float = 10.0
    c_m_pf: float = 250.0
    v_rest_mv: float = -70.0
    v_th_mv: float = -55.0
    v_reset_mv: float = -70.0
    t_ref_ms: float = 0.5
    tau_syn_ms: float = 1.0
    delay_ms: float = 1.0
    w_exc: float = 1200.0
    w_inh: float = -600.0
    max_windows: int = 200
    zero_speed_windows: int = 3
    osc_band: float = 0.06
    osc_windows: int = 10
    mask_sigma: float | None = None  # None: derived as max(1, 6 * sd)


def _sat(arr: np.ndarray, sd: int) -> np.ndarray:
    """Summed-area table of the clamp-to-edge padded array."""
    pad = np.pad(arr, sd, mode="edge")
    table = np.zeros((pad.shape[0] + 1, pad.shape[1] + 1))
    np.cumsum(np.cumsum(pad, axis=0), axis=1, out=table[1:, 1:])
    return table


def _window_sums(table: np.ndarray, ys: np.ndarray, xs: np.ndarray, sd: int) -> np.ndarray:
    # window rows [y-sd, y+sd] map to padded rows [y, y+2sd]
    y1 = ys + 2 * sd + 1
    x1 = xs + 2 * sd + 1
    return table[y1, x1] - table[ys, x1] - table[y1, xs] + table[ys, xs]


class StimulationFields:
    """Window-summed stimulation fields around one object.

    E integrates mask_filt = (2 * mask_smooth + 0.1) / 1.1 over a
    (2sd+1)^2 window divided by 2 sd^2; S integrates the equalized image
    over the same window divided by sd^2 * gray_avg, scaled by 3/8. Both
    carry the stimulation intensity factor 3000.
    """

    def __init__(self, gray: np.ndarray, mask: np.ndarray, cfg: AgentConfig | None = None,
                 sd: int | None = None):
        self.cfg = cfg or AgentConfig()
        self.gray = as_gray(gray)
        h, w = self.gray.shape
        self.sd = sd if sd is not None else ScaleFactor.from_shape(h, w).sd
        sigma = self.cfg.mask_sigma
        if sigma is None:
            sigma = max(1.0, 6.0 * self.sd)
        self.mask_smooth = gaussian_smooth(np.asarray(mask, dtype=np.float64), sigma)
        self.mask_filt = (2.0 * self.mask_smooth + 0.1) / 1.1
        self.gray_avg = float(self.gray.mean())
        self._sat_mask = _sat(self.mask_filt, self.sd)
        self._sat_gray = _sat(self.gray, self.sd)
        self.shape = (h, w)

    def _clamp_points(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        h, w = self.shape
        xs = np.clip(np.rint(pts[:, 0]).astype(int), 0, w - 1)
        ys = np.clip(np.rint(pts[:, 1]).astype(int), 0, h - 1)
        return ys, xs

    def field_e(self, points: np.ndarray) -> np.ndarray:
        """Mask attraction field E at (x, y) points."""
        ys, xs = self._clamp_points(points)
        sums = _window_sums(self._sat_mask, ys, xs, self.sd)
        return self.cfg.stim_intensity * sums / (2.0 * self.sd**2)

    def field_s(self, points: np.ndarray) -> np.ndarray:
        """Brightness repulsion field S at (x, y) points; 0 on a black image."""
        if self.gray_avg == 0.0:
            return np.zeros(np.atleast_2d(points).shape[0])
        ys, xs = self._clamp_points(points)
        sums = _window_sums(self._sat_gray, ys, xs, self.sd)
        return (
            self.cfg.stim_intensity
            * self.cfg.s_factor
            * sums
            / (self.sd**2 * self.gray_avg)
        )


def field_E(fields: StimulationFields, p) -> float:
    return float(fields.field_e(np.asarray([p]))[0])


def field_S(fields: StimulationFields, p) -> float:
    return float(fields.field_s(np.asarray([p]))[0])


def agent_positions(lam: np.ndarray, p0: np.ndarray, pc: np.ndarray) -> np.ndarray:
    """p(lam) = lam * pc + (1 - lam) * p0, vectorized over agents."""
    lam = np.asarray(lam, dtype=np.float64)[:, None]
    return lam * pc + (1.0 - lam) * p0


def stimulate(
    lam: np.ndarray,
    p0: np.ndarray,
    pc: np.ndarray,
    fields: StimulationFields,
    cfg: AgentConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Currents (S_LS, S_RS, E_LE, E_RE) for each agent.

    Sample coordinates lam -/+ offset are clamped into the legal lambda
    range before evaluating the position.
    """
    lam = np.asarray(lam, dtype=np.float64)
    lam_l = np.clip(lam - cfg.sample_offset, cfg.lambda_min, cfg.lambda_max)
    lam_r = np.clip(lam + cfg.sample_offset, cfg.lambda_min, cfg.lambda_max)
    p_l = agent_positions(lam_l, p0, pc)
    p_r = agent_positions(lam_r, p0, pc)
    return (
        fields.field_s(p_l),
        fields.field_s(p_r),
        fields.field_e(p_l),
        fields.field_e(p_r),
    )


class SpikingNetwork:
    """Batch of identical 8-neuron LIF networks, one per agent.

    Sensory neurons are driven by constant currents over one window;
    spikes propagate through delayed exponential synaptic currents. State
    is reset at the start of every window (windows are memoryless).
    """

    def __init__(self, cfg: AgentConfig):
        self.cfg = cfg
        self.steps = int(round(cfg.window_ms / cfg.dt_ms))
        self.delay_steps = max(1, int(round(cfg.delay_ms / cfg.dt_ms)))
        self.ref_steps = int(round(cfg.t_ref_ms / cfg.dt_ms))
        self.alpha_m = math.exp(-cfg.dt_ms / cfg.tau_m_ms)
        self.alpha_syn = math.exp(-cfg.dt_ms / cfg.tau_syn_ms)
        self.r_m = cfg.tau_m_ms / cfg.c_m_pf  # pA -> mV

    def simulate_window(self, currents) -> tuple[np.ndarray, np.ndarray]:
        """Integrate one window; returns (spikes_LM, spikes_RM) per agent."""
        s_ls, s_rs, e_le, e_re = (np.atleast_1d(np.asarray(c, float)) for c in currents)
        n = s_ls.shape[0]
        cfg = self.cfg
        i_ext = np.zeros((n, 8))
        i_ext[:, LS] = s_ls
        i_ext[:, RS] = s_rs
        i_ext[:, LE] = e_le
        i_ext[:, RE] = e_re

        v = np.full((n, 8), cfg.v_rest_mv)
        refrac = np.zeros((n, 8), dtype=int)
        i_syn = np.zeros((n, 8))
        buf = np.zeros((self.delay_steps + 1, n, 8))
        counts = np.zeros((n, 8), dtype=int)
        drive = (1.0 - self.alpha_m) * self.r_m

        for step in range(self.steps):
            slot = step % (self.delay_steps + 1)
            i_syn = i_syn * self.alpha_syn + buf[slot]
            buf[slot] = 0.0
            i_total = i_ext + i_syn
            active = refrac == 0
            v = np.where(
                active,
                cfg.v_rest_mv + (v - cfg.v_rest_mv) * self.alpha_m + i_total * drive,
                cfg.v_reset_mv,
            )
            refrac = np.maximum(refrac - 1, 0)
            spiking = active & (v >= cfg.v_th_mv)
            if spiking.any():
                v = np.where(spiking, cfg.v_reset_mv, v)
                refrac = np.where(spiking, self.ref_steps, refrac)
                counts += spiking
                arrive = (step + self.delay_steps) % (self.delay_steps + 1)
                for pre, post in EXC_SYNAPSES:
                    buf[arrive, spiking[:, pre], post] += cfg.w_exc
                for pre, post in INH_SYNAPSES:
                    buf[arrive, spiking[:, pre], post] += cfg.w_inh
        return counts[:, LM], counts[:, RM]


def agent_speed(spikes_lm, spikes_rm, gain: float = 0.06):
    """Window speed: gain * (spikes_RM - spikes_LM)."""
    return gain * (np.asarray(spikes_rm, float) - np.asarray(spikes_lm, float))


@dataclass
class AgentResult:
    lam: np.ndarray
    converged: np.ndarray  # False where the window cap was hit
    windows: int


def run_agents(
    p0: np.ndarray,
    pc: np.ndarray,
    fields: StimulationFields,
    cfg: AgentConfig | None = None,
) -> AgentResult:
    """Run one agent per contour point until convergence.

    Terminates an agent on three consecutive zero-speed windows, on a
    lambda oscillation confined to a band of width osc_band for
    osc_windows windows (the band midpoint is returned), or at the window
    cap (flagged as non-converged).
    """
    cfg = cfg or AgentConfig()
    p0 = np.asarray(p0, dtype=np.float64)
    pc = np.atleast_2d(np.asarray(pc, dtype=np.float64))
    n = pc.shape[0]
    net = SpikingNetwork(cfg)
    lam = np.full(n, cfg.lambda_init)
    done = np.zeros(n, dtype=bool)
    converged = np.zeros(n, dtype=bool)
    zero_streak = np.zeros(n, dtype=int)
    history = np.full((cfg.osc_windows, n), np.nan)
    windows = 0
    for windows in range(1, cfg.max_windows + 1):
        currents = stimulate(lam, p0, pc, fields, cfg)
        spikes_lm, spikes_rm = net.simulate_window(currents)
        speed = agent_speed(spikes_lm, spikes_rm, cfg.speed_gain)
        speed = np.where(done, 0.0, speed)
        lam = np.clip(lam + speed, cfg.lambda_min, cfg.lambda_max)

        zero_streak = np.where(speed == 0.0, zero_streak + 1, 0)
        newly = ~done & (zero_streak >= cfg.zero_speed_windows)
        done |= newly
        converged |= newly

        history = np.roll(history, -1, axis=0)
        history[-1] = lam
        if windows >= cfg.osc_windows:
            band = history.max(axis=0) - history.min(axis=0)
            osc = ~done & (band <= cfg.osc_band)
            lam = np.where(osc, (history.max(axis=0) + history.min(axis=0)) / 2.0, lam)
            done |= osc
            converged |= osc
        if done.all():
            break
    return AgentResult(lam=lam, converged=converged, windows=windows)


def run_agent(p0, pc, fields: StimulationFields, cfg: AgentConfig | None = None):
    """Single-agent convenience wrapper; returns (lambda*, converged)."""
    res = run_agents(np.asarray(p0, float), np.asarray([pc], float), fields, cfg)
    return float(res.lam[0]), bool(res.converged[0])


def refine_contour(
    c: RadialContour,
    gray: np.ndarray,
    mask: np.ndarray,
    cfg: AgentConfig | None = None,
    sd: int | None = None,
) -> tuple[RadialContour, np.ndarray]:
    """Refine all 30 contour radii with independent agents.

    Returns the scaled contour (radius_b <- lambda*_b * radius_b) and the
    per-point non-convergence flags.
    """
    cfg = cfg or AgentConfig()
    fields = StimulationFields(gray, mask, cfg=cfg, sd=sd)
    p0 = np.asarray(c.center, dtype=np.float64)
    pc = c.points()
    res = run_agents(p0, pc, fields, cfg)
    refined = RadialContour(center=c.center, radii=c.radii * res.lam)
    return refined, ~res.converged
