"""dq-frame admittance/impedance models of the physical network elements.

Covers series RL branches (lines, transformers), pi-section cables,
grid-following inverters (analytic small-signal model or measured table),
and the shunt active damper in its proposed (current-feedforward) and
traditional variants.  All models are pure functions of (parameters,
frequency) and evaluate at s = j*2*pi*f in a global dq frame rotating at
omega0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Literal

import numpy as np

from .dq_core import (
    DqBlock,
    TransferElement,
    evaluate,
    freq_shift,
    multiply,
)

_J = np.array([[0.0, -1.0], [1.0, 0.0]])  # dq rotation generator
_I2 = np.eye(2)


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RlBranchParams:
    """Series R-L branch (line or transformer winding)."""

    r_ohm: float
    l_h: float

    def __post_init__(self):
        if self.r_ohm < 0 or self.l_h < 0:
            raise ValueError("R and L must be >= 0")
        if self.r_ohm == 0 and self.l_h == 0:
            raise ValueError("R and L cannot both be zero")


@dataclass(frozen=True)
class PiCableParams:
    """Pi-section cable: series R-L, total shunt capacitance split half per end."""

    r_ohm: float
    l_h: float
    c_f: float

    def __post_init__(self):
        if self.r_ohm < 0 or self.l_h < 0 or self.c_f < 0:
            raise ValueError("R, L, C must be >= 0")
        if self.c_f == 0:
            raise ValueError("pi cable needs C > 0 (use RlBranchParams otherwise)")


@dataclass(frozen=True)
class GridImpedanceParams:
    """Series R-L between a node and the ideal (small-signal short) source."""

    r_ohm: float
    l_h: float

    def __post_init__(self):
        if self.r_ohm < 0 or self.l_h < 0:
            raise ValueError("R and L must be >= 0")
        if self.r_ohm == 0 and self.l_h == 0:
            raise ValueError("grid impedance cannot be a dead short")


@dataclass(frozen=True)
class CapacitorParams:
    """Shunt capacitor to ground."""

    c_f: float

    def __post_init__(self):
        if self.c_f <= 0:
            raise ValueError("C must be > 0")


@dataclass(frozen=True)
class InverterParams:
    """Current-controlled, SRF-PLL-synchronized grid-following inverter.

    L filter in series, shunt C at the terminal, PI current loop with
    omega0*L decoupling, computation delay exp(-1.5*s/f_s) on the
    modulation path.  v_d0 is the operating-point terminal voltage on the
    d axis (the PLL loop gain scale); i_d / i_q the operating-point
    current.
    """

    v_dc: float           # DC-link voltage [V]
    l_h: float            # filter inductance [H]
    c_f: float            # filter capacitance [F]
    i_d: float            # d-axis operating current [A]
    i_q: float            # q-axis operating current [A]
    k_pi: float           # current PI proportional gain
    k_ii: float           # current PI integral gain [1/s]
    k_p_pll: float        # PLL proportional gain
    k_i_pll: float        # PLL integral gain [1/s]
    f_s_hz: float         # sampling frequency [Hz]
    v_d0: float = 311.0   # operating-point PCC voltage, d axis [V]

    def __post_init__(self):
        if self.f_s_hz <= 0:
            raise ValueError("f_s must be > 0")
        if self.l_h <= 0:
            raise ValueError("filter inductance must be > 0")
        if self.v_d0 <= 0:
            raise ValueError("v_d0 must be > 0")

    @property
    def delay_s(self) -> float:
        return 1.5 / self.f_s_hz


ADMode = Literal["proposed", "traditional"]


@dataclass(frozen=True)
class ADParams:
    """Shunt active damper parameters.

    The damping loop extracts the non-fundamental terminal voltage with a
    notch at omega0, phase-corrects it with a lag stage, low-passes it and
    scales by k_v.  In "proposed" mode the output-current feedforward
    reshapes the filter inductor so the closed current path behaves as a
    first-order low-pass gain_s * omega_c/(s + omega_c); "traditional"
    mode drops that feedforward.
    """

    v_dc: float           # DC-link voltage [V]
    l_f_h: float          # filter inductance [H]
    k_pi: float           # current PI proportional gain
    k_ii: float           # current PI integral gain [1/s]
    xi: float             # notch damping ratio
    tau_s: float          # lag time constant [s]
    beta: float           # lag pole/zero ratio
    omega_low_rad_s: float    # damping-path low-pass cut-off [rad/s]
    omega_c_rad_s: float      # intended current low-pass cut-off [rad/s]
    gain_s: float         # intended current low-pass gain [S]
    k_v: float            # damping compensation gain
    f_s_hz: float         # sampling frequency [Hz]
    mode: ADMode = "proposed"

    def __post_init__(self):
        positive = (self.v_dc, self.l_f_h, self.k_pi, self.k_ii, self.xi,
                    self.tau_s, self.beta, self.omega_low_rad_s,
                    self.omega_c_rad_s, self.gain_s, self.f_s_hz)
        if any(v <= 0 for v in positive):
            raise ValueError("all AD parameters except k_v must be > 0")
        if self.k_v < 0:
            raise ValueError("k_v must be >= 0")
        if self.mode not in ("proposed", "traditional"):
            raise ValueError(f"unknown AD mode: {self.mode!r}")

    @property
    def delay_s(self) -> float:
        return 1.5 / self.f_s_hz


# ---------------------------------------------------------------------------
# transfer-element builders
# ---------------------------------------------------------------------------

def notch(xi: float, omega0: float) -> TransferElement:
    """Band-rejection at omega0: (s^2 + w0^2) / (s^2 + 2*xi*w0*s + w0^2)."""
    return TransferElement((1.0, 0.0, omega0 ** 2),
                           (1.0, 2.0 * xi * omega0, omega0 ** 2))


def lag_compensator(tau: float, beta: float) -> TransferElement:
    """(tau*s + 1) / (beta*tau*s + 1)."""
    return TransferElement((tau, 1.0), (beta * tau, 1.0))


def lowpass(omega_c: float) -> TransferElement:
    """First-order low-pass omega_c / (s + omega_c)."""
    return TransferElement((omega_c,), (1.0, omega_c))


def pi_controller(k_p: float, k_i: float) -> TransferElement:
    """k_p + k_i/s as (k_p*s + k_i)/s."""
    return TransferElement((k_p, k_i), (1.0, 0.0))


def current_feedforward(gain_s: float, omega_c: float, l_f: float) -> TransferElement:
    """Feedforward that makes 1/(s*L_f + H(s)) a low-pass gain*wc/(s+wc).

    H(s) = (1/(gain*wc) - L_f)*s + 1/gain, the exact solution of that
    reshaping requirement.
    """
    return TransferElement((1.0 / (gain_s * omega_c) - l_f, 1.0 / gain_s), (1.0,))


# ---------------------------------------------------------------------------
# passive stamps
# ---------------------------------------------------------------------------

def _rl_block(r: float, l: float, f_hz, omega0: float) -> np.ndarray:
    """(..., 2, 2) series R-L impedance stamp at s = j*2*pi*f."""
    w = 2.0 * np.pi * np.asarray(f_hz, dtype=float)
    z = np.asarray(r + 1j * w * l)
    return z[..., None, None] * _I2 + (omega0 * l) * _J


def _cap_block(c: float, f_hz, omega0: float) -> np.ndarray:
    """(..., 2, 2) shunt capacitor admittance stamp."""
    w = 2.0 * np.pi * np.asarray(f_hz, dtype=float)
    y = np.asarray(1j * w * c)
    return y[..., None, None] * _I2 + (omega0 * c) * _J


def rl_series_dq(p: RlBranchParams, f_hz: float, omega0: float) -> DqBlock:
    """Impedance block [R+jwL, -w0*L; w0*L, R+jwL] of a series R-L branch."""
    if f_hz <= 0:
        raise ValueError("f must be > 0")
    return DqBlock.from_array(_rl_block(p.r_ohm, p.l_h, f_hz, omega0))


def capacitor_shunt_dq(c_f: float, f_hz: float, omega0: float) -> DqBlock:
    """Admittance block [jwC, -w0*C; w0*C, jwC] of a shunt capacitor."""
    if f_hz <= 0:
        raise ValueError("f must be > 0")
    return DqBlock.from_array(_cap_block(c_f, f_hz, omega0))


def pi_cable_stamps(p: PiCableParams, f_hz: float, omega0: float) -> tuple[DqBlock, DqBlock]:
    """(series impedance, per-end shunt admittance) of a pi-section cable.

    The shunt block holds half the total capacitance and is placed at
    both terminals.
    """
    if f_hz <= 0:
        raise ValueError("f must be > 0")
    series = DqBlock.from_array(_rl_block(p.r_ohm, p.l_h, f_hz, omega0))
    shunt_end = DqBlock.from_array(_cap_block(p.c_f / 2.0, f_hz, omega0))
    return series, shunt_end


# ---------------------------------------------------------------------------
# grid-following inverter
# ---------------------------------------------------------------------------

def _inverter_block(p: InverterParams, f_hz, omega0: float) -> np.ndarray:
    """(..., 2, 2) inverter output admittance at s = j*2*pi*f.

    Current balance in the system frame, with the control action rotated
    through the PLL's small-signal angle:

        A * dI = (I2 - [0 | b]) * dV,  Y = -dI/dV = A^-1 (I2 - [0 | b])

    A       = s*L + Gd*Gci on the diagonal, w0*L*(1 - Gd) cross terms
              (the controller's w0*L decoupling cancels the plant's
              rotation coupling up to the delay),
    b       = Gd * Tpll * [-Gci*i_q; Gci*i_d + v_d0]  (operating-point
              current and modulation voltage re-entering via the PLL
              frame rotation; the w0*L parts cancel exactly),
    Tpll    = Gpll / (s + v_d0*Gpll), the closed PLL phase transfer.

    The shunt filter capacitor adds in parallel at the terminal.
    """
    f = np.asarray(f_hz, dtype=float)
    s = 1j * 2.0 * np.pi * f
    gd = np.exp(-s * p.delay_s)
    gci = p.k_pi + p.k_ii / s
    gpll = p.k_p_pll + p.k_i_pll / s
    tpll = gpll / (s + p.v_d0 * gpll)

    a = np.asarray(s * p.l_h + gd * gci)[..., None, None] * _I2 \
        + np.asarray(omega0 * p.l_h * (1.0 - gd))[..., None, None] * _J
    b_d = gd * tpll * (-gci * p.i_q)
    b_q = gd * tpll * (gci * p.i_d + p.v_d0)
    rhs = np.broadcast_to(_I2, a.shape).astype(complex)
    rhs[..., 0, 1] -= b_d
    rhs[..., 1, 1] -= b_q

    y = np.linalg.solve(a, rhs)
    return y + _cap_block(p.c_f, f, omega0)


def inverter_admittance(p: InverterParams, f_hz: float, omega0: float) -> DqBlock:
    """Output admittance block of the analytic inverter model.

    Valid below the Nyquist band of the sampled control (f < f_s/2).
    """
    if f_hz <= 0:
        raise ValueError("f must be > 0")
    if f_hz >= p.f_s_hz / 2.0:
        raise ValueError(f"f={f_hz} Hz is not below f_s/2={p.f_s_hz / 2} Hz")
    return DqBlock.from_array(_inverter_block(p, f_hz, omega0))


# ---------------------------------------------------------------------------
# tabulated admittance
# ---------------------------------------------------------------------------

_TABLE_HEADER = ["f_hz", "re_dd", "im_dd", "re_dq", "im_dq",
                 "re_qd", "im_qd", "re_qq", "im_qq"]


class AdmittanceTable:
    """Measured (or pre-computed) dq admittance versus frequency.

    Interpolation is linear in log10(f), independently on the real and
    imaginary parts of each entry; queries must stay inside the tabulated
    range.
    """

    def __init__(self, f_hz, blocks):
        f = np.asarray(f_hz, dtype=float)
        y = np.asarray(blocks, dtype=complex)
        if f.ndim != 1 or len(f) < 2:
            raise ValueError("table needs at least 2 rows")
        if np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise ValueError("table frequencies must be positive and strictly increasing")
        if y.shape != (len(f), 2, 2):
            raise ValueError("blocks must have shape (n, 2, 2)")
        self._f = f
        self._y = y
        self._logf = np.log10(f)
        self._f.flags.writeable = False
        self._y.flags.writeable = False

    @property
    def f_hz(self) -> np.ndarray:
        return self._f

    @property
    def f_min(self) -> float:
        return float(self._f[0])

    @property
    def f_max(self) -> float:
        return float(self._f[-1])

    def __len__(self) -> int:
        return len(self._f)

    @classmethod
    def constant(cls, block: DqBlock, f_min: float = 1.0, f_max: float = 1e5) -> "AdmittanceTable":
        m = block.as_array()
        return cls([f_min, f_max], [m, m])

    @classmethod
    def from_rows(cls, rows) -> "AdmittanceTable":
        """rows of (f_hz, dd, dq, qd, qq) complex entries."""
        f = [r[0] for r in rows]
        y = [[[r[1], r[2]], [r[3], r[4]]] for r in rows]
        return cls(f, y)

    @classmethod
    def from_csv(cls, path) -> "AdmittanceTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != _TABLE_HEADER:
                raise ValueError(f"bad admittance table header in {path}: {header}")
            f, blocks = [], []
            for row in reader:
                vals = [float(v) for v in row]
                f.append(vals[0])
                re = vals[1::2]
                im = vals[2::2]
                blocks.append(np.array([[re[0] + 1j * im[0], re[1] + 1j * im[1]],
                                        [re[2] + 1j * im[2], re[3] + 1j * im[3]]]))
        return cls(f, blocks)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_TABLE_HEADER)
            for f, y in zip(self._f, self._y):
                flat = [y[0, 0], y[0, 1], y[1, 0], y[1, 1]]
                row = [format(f, ".9g")]
                for v in flat:
                    row += [format(v.real, ".9g"), format(v.imag, ".9g")]
                writer.writerow(row)

    def query(self, f_hz) -> np.ndarray:
        f = np.asarray(f_hz, dtype=float)
        if np.any(f < self.f_min) or np.any(f > self.f_max):
            raise ValueError(
                f"query {f} Hz outside tabulated range [{self.f_min}, {self.f_max}] Hz")
        x = np.log10(f)
        out = np.empty(f.shape + (2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                out[..., i, j] = (np.interp(x, self._logf, self._y[:, i, j].real)
                                  + 1j * np.interp(x, self._logf, self._y[:, i, j].imag))
        return out


def tabulated_admittance(t: AdmittanceTable, f_hz: float) -> DqBlock:
    """Interpolated admittance block at f_hz (must lie inside the table)."""
    return DqBlock.from_array(t.query(f_hz))


def tabulate(p: InverterParams, f_hz, omega0: float) -> AdmittanceTable:
    """Sample the analytic inverter model onto an AdmittanceTable."""
    f = np.asarray(f_hz, dtype=float)
    return AdmittanceTable(f, _inverter_block(p, f, omega0))


# ---------------------------------------------------------------------------
# active damper
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _ad_damping_path(p: ADParams, omega0: float) -> TransferElement:
    # notch * lag * low-pass, recomposed at s + j*omega0 (the damping loop
    # acts on the non-fundamental voltage seen in the stationary frame)
    chain = multiply(multiply(notch(p.xi, omega0), lag_compensator(p.tau_s, p.beta)),
                     lowpass(p.omega_low_rad_s))
    return freq_shift(chain, omega0)


def _ad_scalar(p: ADParams, f_hz, omega0: float) -> np.ndarray:
    """Scalar damper admittance (d and q are decoupled and identical)."""
    f = np.asarray(f_hz, dtype=float)
    s = 1j * 2.0 * np.pi * f
    gd = np.exp(-s * p.delay_s)
    g_low = evaluate(lowpass(p.omega_low_rad_s), s)
    g_i = p.k_pi + p.k_ii / s
    g_v = evaluate(_ad_damping_path(p, omega0), s)
    num = 1.0 + p.k_v * g_v * gd
    den = s * p.l_f_h + g_i * gd
    if p.mode == "proposed":
        h_i = evaluate(current_feedforward(p.gain_s, p.omega_c_rad_s, p.l_f_h), s)
        den = den + h_i * g_low * gd
    return num / den


def ad_admittance(p: ADParams, f_hz: float, omega0: float) -> DqBlock:
    """Damper admittance block diag(Y, Y); off-diagonals are exactly zero."""
    if f_hz <= 0:
        raise ValueError("f must be > 0")
    # single-element array keeps scalar queries bitwise-identical to sweeps
    return DqBlock.diagonal(complex(_ad_scalar(p, np.asarray([f_hz]), omega0)[0]))


@dataclass(frozen=True)
class AdCurve:
    """One damper admittance curve for one value of a swept parameter."""

    param: str
    value: float
    f_hz: np.ndarray
    y: np.ndarray  # complex scalar admittance per frequency


_SWEEPABLE = {"l_f_h", "gain_s", "k_v"}


def ad_curve_cluster(p: ADParams, param: str, values, grid) -> list[AdCurve]:
    """Damper admittance curves with one parameter swept, others held at p.

    param is one of l_f_h, gain_s, k_v; grid is a FrequencyGrid.
    """
    if param not in _SWEEPABLE:
        raise ValueError(f"sweepable parameters are {sorted(_SWEEPABLE)}, got {param!r}")
    values = list(values)
    if not values:
        raise ValueError("empty sweep value list")
    f = grid.hz
    curves = []
    for v in values:
        pv = replace(p, **{param: float(v)})
        curves.append(AdCurve(param, float(v), f, _ad_scalar(pv, f, grid.omega0)))
    return curves
