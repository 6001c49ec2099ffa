"""Energy bookkeeping and transient-response spectra.

Work is accumulated trapezoidally from nodal forces; the energy balance
error is reported in percent as 100 |(W_ext - W_int - W_kin) / W_ext|.
Natural frequencies come from FFT peaks of displacement histories (the
system is never eigen-analyzed directly).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import DiagMass


@dataclass
class EnergyLedger:
    """Accumulated work of external and internal forces plus the current
    kinetic energy, in mJ (N mm)."""
    w_kin: float = 0.0
    w_int: float = 0.0
    w_ext: float = 0.0
    w_ext_floor: float = 1e-12    # below this, the balance error is flagged 0
    flagged: bool = False


def kinetic_energy(velocity, mass: DiagMass) -> float:
    v = np.asarray(velocity, float)
    return 0.5 * float(np.dot(mass.values * v, v))


def accumulate_work(ledger: EnergyLedger, f_ext_start, f_ext_end,
                    f_int_start, f_int_end, dq) -> EnergyLedger:
    """Trapezoidal work increment over one step; exact for forces linear in
    the displacement.  The external forces passed here must include the
    reactions on prescribed DoFs."""
    dq = np.asarray(dq, float)
    ledger.w_ext += 0.5 * float(np.dot(np.asarray(f_ext_start, float)
                                       + np.asarray(f_ext_end, float), dq))
    ledger.w_int += 0.5 * float(np.dot(np.asarray(f_int_start, float)
                                       + np.asarray(f_int_end, float), dq))
    return ledger


def energy_balance_error(ledger: EnergyLedger) -> float:
    """Percent imbalance; 0 (flagged) while the external work is still below
    the floor."""
    if abs(ledger.w_ext) < ledger.w_ext_floor:
        ledger.flagged = True
        return 0.0
    ledger.flagged = False
    return 100.0 * abs((ledger.w_ext - ledger.w_int - ledger.w_kin)
                       / ledger.w_ext)


@dataclass
class Spectrum:
    frequencies: np.ndarray       # full magnitude-spectrum axis, Hz
    amplitudes: np.ndarray
    peaks: list = field(default_factory=list)  # (frequency, amplitude)

    def peak_frequencies(self) -> np.ndarray:
        return np.array([p[0] for p in self.peaks])


def fft_peaks(series, dt: float, n_peaks: int = 5) -> Spectrum:
    """Magnitude spectrum of the mean-removed, Hann-windowed series with the
    `n_peaks` strongest local maxima refined by 3-point parabolic
    interpolation, returned in ascending frequency."""
    y = np.asarray(series, float)
    if len(y) < 16:
        raise ValueError("series too short for a spectrum (need >= 16 samples)")
    y = y - y.mean()
    w = np.hanning(len(y))
    mag = np.abs(np.fft.rfft(y * w))
    freqs = np.fft.rfftfreq(len(y), d=dt)

    interior = np.arange(1, len(mag) - 1)
    is_peak = (mag[interior] > mag[interior - 1]) & \
              (mag[interior] >= mag[interior + 1]) & (mag[interior] > 0)
    candidates = interior[is_peak]
    candidates = candidates[np.argsort(mag[candidates])[::-1][:n_peaks]]

    df = freqs[1] - freqs[0]
    peaks = []
    for i in sorted(candidates):
        a, b, c = mag[i - 1], mag[i], mag[i + 1]
        denom = a - 2.0 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
        peaks.append((freqs[i] + shift * df,
                      float(b - 0.25 * (a - c) * shift)))
    return Spectrum(freqs, mag, peaks)
