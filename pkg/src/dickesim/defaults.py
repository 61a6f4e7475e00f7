"""Canonical reference configuration and its calibration chain.

The numbers here encode one specific rubidium cavity-QED setup:
``(g, kappa, gamma) = 2*pi*(1.1, 0.07, 3.0) MHz``, a cavity-atom
detuning of ``-2*pi*127 GHz``, a ground hyperfine splitting of
``2*pi*6.8347 GHz`` and a linear Zeeman shift of ``2*pi*4.0 MHz``.

The free quantities are fixed by a single-anchor calibration:

* the atom number comes from a dispersive shift of ``-2*pi*0.5 MHz``,
* the Rabi-per-root-power constant is chosen so that 18 mW in the
  single coupling beam reproduces a collective coupling magnitude of
  ``2*pi*0.173 MHz`` at that atom number,
* the two-photon offset ``zeta`` of the splitting configuration places
  the effective spin frequency on the shifted cavity resonance.

The shipped ``configs/paper.cfg`` freezes the same numbers; a test keeps
file and code in sync.
"""

from __future__ import annotations

from dataclasses import replace

from . import params
from .params import PhysicalConfig, PowerCalibration
from .units import mhz

#: Dispersive-shift anchor at which the coupling was measured.
ANCHOR_OMEGA_D = mhz(-0.5)

#: Measured collective coupling magnitude at the anchor.
ANCHOR_LAMBDA = mhz(0.173)

#: Beam power of the splitting measurement, single beam.
ANCHOR_POWER_MW = 18.0

#: Detection chain of the ramp experiments.
DETECTION_PHOTONS = 10.0
DETECTION_BIN_US = 5.0
DETECTION_COUNTS_PER_BIN = 7.8


def base_physical_config(eta: float = 0.0, zeta: float = 0.0) -> PhysicalConfig:
    """Reference setup with beams off and a placeholder atom number."""
    return PhysicalConfig(
        g=mhz(1.1),
        kappa=mhz(0.07),
        gamma=mhz(3.0),
        Delta_c=mhz(-127e3),
        omega_hf=mhz(6834.7),
        omega_Z=mhz(4.0),
        eta=eta,
        zeta=zeta,
        N_total=1,
    )


def anchor_atom_number() -> int:
    """Atom number implied by the anchor dispersive shift.

    Inferred once in the bare frame (zero offsets); the MHz-scale
    offsets would move the inferred count by only a few atoms in 1e5,
    and pinning one convention keeps every shipped quantity consistent.
    """
    return params.atoms_from_shift(ANCHOR_OMEGA_D, base_physical_config())


def paper_calibration() -> PowerCalibration:
    """Power calibration fixed by the splitting-measurement anchor."""
    cfg = replace(base_physical_config(), N_total=anchor_atom_number())
    return params.calibrate_rabi(cfg, ANCHOR_LAMBDA, ANCHOR_POWER_MW)


def splitting_zeta(calib: PowerCalibration | None = None) -> float:
    """Two-photon offset placing the spin resonance at the anchor shift.

    Solves ``omega0(zeta) == ANCHOR_OMEGA_D`` for the single-beam
    configuration at the anchor power.  ``omega0`` depends on ``zeta``
    both explicitly and weakly through the detunings entering the light
    shift, so the solve is iterated to convergence.
    """
    if calib is None:
        calib = paper_calibration()
    n_anchor = anchor_atom_number()
    zeta = 0.0
    for _ in range(4):
        cfg = base_physical_config(eta=0.0, zeta=zeta)
        cfg = replace(cfg, N_total=n_anchor)
        cfg = cfg.with_powers(calib, ANCHOR_POWER_MW, 0.0)
        omega_ds = params.differential_stark_shift(cfg)
        zeta = omega_ds - 3.0 * cfg.omega_Z - ANCHOR_OMEGA_D
    return zeta


def splitting_config(calib: PowerCalibration | None = None) -> PhysicalConfig:
    """Single-beam configuration of the splitting measurement."""
    if calib is None:
        calib = paper_calibration()
    cfg = base_physical_config(eta=0.0, zeta=splitting_zeta(calib))
    cfg = replace(cfg, N_total=anchor_atom_number())
    return cfg.with_powers(calib, ANCHOR_POWER_MW, 0.0)


def ramp_config(calib: PowerCalibration | None = None,
                eta: float = mhz(-0.1),
                zeta: float = mhz(-11.90)) -> PhysicalConfig:
    """Two-beam configuration of the power-ramp experiment.

    ``eta`` and ``zeta`` are chosen so that at the anchor atom number
    the static threshold sits comfortably inside the shipped
    3.6 mW to 36 mW ramp.
    """
    if calib is None:
        calib = paper_calibration()
    cfg = base_physical_config(eta=eta, zeta=zeta)
    cfg = replace(cfg, N_total=anchor_atom_number())
    half = 0.5 * (3.6 + 36.0) / 2.0
    return cfg.with_powers(calib, half, half)
