"""Electro-optic device models and their analytic sideband series.

The Mach-Zehnder model has one driven arm (phase ``m*sin(2*pi*f*t + phi)``
plus the bias phase) interfering with one static arm::

    out(t) = 1/2 * x(t) * [exp(i*(m*sin(2*pi*f*t + phi) + pi*bias/v_pi)) + r]

where ``r`` is the static-arm amplitude implied by the extinction ratio
(``r = 1`` for infinite extinction).  Expanding the exponential with the
Jacobi-Anger identity gives sideband ``n`` the coefficient
``1/2 * (J_n(m) * exp(i*(n*phi + pi*bias/v_pi)) + r*[n == 0])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .errors import AliasingError, GridMismatchError
from .signal_core import PI_EXT, ComplexEnvelope, check_grid

# Sidebands weaker than this are ignored when checking for aliasing.
SIDEBAND_FLOOR = 1e-12


@dataclass(frozen=True)
class MzmParams:
    v_pi: float = 1.0
    bias_v: float = 1.0
    extinction_ratio_db: float = 20.0

    def __post_init__(self):
        if not self.v_pi > 0:
            raise ValueError("v_pi must be positive")
        if not self.extinction_ratio_db > 0:
            raise ValueError("extinction_ratio_db must be positive (may be inf)")

    @property
    def bias_phase(self) -> float:
        return math.pi * self.bias_v / self.v_pi

    @property
    def static_arm(self) -> float:
        """Static-arm amplitude r; max/min transmission ratio equals the ER."""
        if math.isinf(self.extinction_ratio_db):
            return 1.0
        a = 10 ** (self.extinction_ratio_db / 20)
        return (a - 1) / (a + 1)

    @classmethod
    def with_static_arm(cls, r: float, v_pi: float = 1.0, bias_v: float = 1.0) -> "MzmParams":
        """Inverse of :attr:`static_arm`."""
        if not 0.0 <= r <= 1.0:
            raise ValueError("static arm amplitude must lie in [0, 1]")
        er = math.inf if r == 1.0 else 20 * math.log10((1 + r) / (1 - r))
        if er == 0.0:
            raise ValueError("static arm amplitude 0 gives no extinction")
        return cls(v_pi=v_pi, bias_v=bias_v, extinction_ratio_db=er)


@dataclass(frozen=True)
class RfDrive:
    freq_hz: float
    mod_index: float = 1.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if not self.freq_hz > 0:
            raise ValueError("freq_hz must be positive")
        if self.mod_index < 0:
            raise ValueError("mod_index must be non-negative")

    def with_phase(self, phase_rad: float) -> "RfDrive":
        return replace(self, phase_rad=float(phase_rad))


@dataclass(frozen=True)
class SidebandTable:
    orders: dict

    def __getitem__(self, n: int) -> complex:
        return self.orders[n]

    @property
    def n_max(self) -> int:
        return max(self.orders)


def bessel_j(n: int, m: float) -> float:
    return float(special.jv(n, m))


def significant_order(m: float, floor: float = SIDEBAND_FLOOR) -> int:
    """Highest sideband order with |J_n(m)| above ``floor``."""
    if m == 0:
        return 0
    n = int(math.ceil(m)) + 1
    while abs(special.jv(n, m)) > floor or n <= m:
        n += 1
    return n - 1


def sideband_coefficients(p: MzmParams, d: RfDrive, n_max: int) -> SidebandTable:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    orders = {}
    for n in range(-n_max, n_max + 1):
        c = 0.5 * special.jv(n, d.mod_index) * np.exp(1j * (n * d.phase_rad + p.bias_phase))
        if n == 0:
            c += 0.5 * p.static_arm
        orders[n] = complex(c)
    return SidebandTable(orders)


def _drive_cycles(x: ComplexEnvelope, freq_hz: float) -> np.ndarray:
    """Drive phase in cycles, reduced exactly modulo one period of the window."""
    k = freq_hz * x.duration_s
    kr = round(k)
    if abs(k - kr) > 1e-6:
        raise GridMismatchError(
            f"RF drive {freq_hz:g} Hz does not complete an integer number of cycles "
            f"in the {x.duration_s:g} s window")
    frac = (int(kr) * np.arange(x.n, dtype=np.int64)) % x.n
    if x.extended:
        return frac.astype(np.longdouble) / x.n
    return frac / x.n


def check_sideband_aliasing(x: ComplexEnvelope, d: RfDrive) -> None:
    n_max = significant_order(d.mod_index)
    lo, hi = x.occupied_band_hz()
    reach = max(abs(lo), abs(hi)) + n_max * d.freq_hz
    if reach >= x.sample_rate_hz / 2:
        raise AliasingError(
            f"sideband order {n_max} of a {d.freq_hz:g} Hz drive reaches {reach:g} Hz, "
            f"beyond Nyquist {x.sample_rate_hz / 2:g} Hz")


def mzm_modulate(x: ComplexEnvelope, p: MzmParams, d: RfDrive) -> ComplexEnvelope:
    check_sideband_aliasing(x, d)
    cycles = _drive_cycles(x, d.freq_hz)
    if x.extended:
        ld = np.longdouble
        pi = PI_EXT
        arg = ld(d.mod_index) * np.sin(2 * pi * cycles + ld(d.phase_rad)) + pi * ld(p.bias_v) / ld(p.v_pi)
    else:
        arg = d.mod_index * np.sin(2 * np.pi * cycles + d.phase_rad) + p.bias_phase
    arm = np.exp(1j * arg)
    return x.with_samples(0.5 * x.samples * (arm + p.static_arm))


def iq_modulate(carrier: ComplexEnvelope, data: ComplexEnvelope) -> ComplexEnvelope:
    """Ideal I/Q modulator: the field is multiplied by the complex drive."""
    check_grid(carrier, data)
    return carrier.with_samples(carrier.samples * data.samples)
