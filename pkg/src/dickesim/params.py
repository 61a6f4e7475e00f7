"""Map lab-level parameters onto the effective two-mode model.

Two far-detuned laser beams drive cavity-assisted Raman transitions
between a pair of hyperfine ground states.  Adiabatic elimination of the
excited manifold leaves an effective model of one cavity mode coupled to
a collective spin, with a cavity frequency ``omega``, spin frequency
``omega0``, a dispersive cross term ``delta``, and two Raman coupling
strengths ``lambda_r`` and ``lambda_s``.  This module computes those
effective quantities from the physical configuration, together with the
derived diagnostics used by the experiments: the critical coupling of
the superradiant instability, the atom-number/dispersive-shift
relation, the beam-power calibration and an off-resonant scattering
estimate.

All angular frequencies are in rad/us (see :mod:`dickesim.units`);
algebraic signs are retained throughout, so red detunings give negative
detunings and negative couplings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import (
    DegenerateDetuning,
    NegativePower,
    OutsideValidity,
    SignMismatch,
)
from .units import TWO_PI

#: Smallest Raman denominator accepted before the configuration is
#: declared degenerate.  All sensible detunings are GHz scale; anything
#: below 1 MHz indicates a configuration error upstream.
DENOMINATOR_FLOOR = TWO_PI * 1.0

#: Ratio of the far-detuned line strength seen by the linearly polarized
#: Raman beams to the stretched-transition strength in which the Rabi
#: frequencies are quoted.  Enters only the scattering diagnostic.
LINE_STRENGTH_FACTOR = 2.0 / 3.0

_COUPLING_PREFACTOR = math.sqrt(3.0) / 12.0


@dataclass(frozen=True)
class PhysicalConfig:
    """Lab-level parameters in rad/us, counts and pure numbers.

    Attributes
    ----------
    g : float
        Single-atom cavity coupling, half the single-photon Rabi
        frequency on the stretched transition.
    kappa : float
        Cavity half linewidth (HWHM).
    gamma : float
        Atomic half linewidth (HWHM).
    Delta_c : float
        Cavity-atom detuning, cavity minus atom.
    omega_hf : float
        Ground-state hyperfine splitting.
    omega_Z : float
        Linear Zeeman shift.
    eta : float
        Small common offset of both beams from the cavity frame.
    zeta : float
        Small two-photon offset; tunes the effective spin frequency.
    Omega_r, Omega_s : float
        Rabi frequencies of the two Raman beams, stretched-transition
        convention.
    N_total : int
        Total trapped atom number.
    alpha : float
        Spatial averaging factor for the cavity coupling.
    beta : float
        Spatial averaging factor for the Raman coupling.
    f_lambda : float
        Fraction of atoms in the pair of coupled states.
    """

    g: float
    kappa: float
    gamma: float
    Delta_c: float
    omega_hf: float
    omega_Z: float
    eta: float = 0.0
    zeta: float = 0.0
    Omega_r: float = 0.0
    Omega_s: float = 0.0
    N_total: int = 1
    alpha: float = 0.66
    beta: float = 0.78
    f_lambda: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        for name in ("g", "kappa", "gamma", "omega_hf", "omega_Z"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.N_total < 1:
            raise ValueError("N_total must be at least 1")
        for name in ("alpha", "beta"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if not 0.0 < self.f_lambda <= 1.0:
            raise ValueError("f_lambda must lie in (0, 1]")

    @property
    def omega_1(self) -> float:
        """Splitting of the two coupled states in the applied field."""
        return self.omega_hf - 3.0 * self.omega_Z

    @property
    def N_lambda(self) -> int:
        """Number of atoms in the coupled pair of states."""
        return max(1, round(self.f_lambda * self.N_total))

    def with_powers(self, calib: "PowerCalibration", power_r: float,
                    power_s: float) -> "PhysicalConfig":
        """Copy of the config with Rabi frequencies set from beam powers."""
        return replace(
            self,
            Omega_r=rabi_from_power(power_r, calib),
            Omega_s=rabi_from_power(power_s, calib),
        )


@dataclass(frozen=True)
class EffectiveParams:
    """Effective model parameters, all in rad/us except the atom count."""

    omega: float
    omega0: float
    delta: float
    lambda_r: float
    lambda_s: float
    omega_dS: float
    Delta_r: float
    Delta_s: float
    N_lambda: int
    kappa: float

    def __post_init__(self) -> None:
        if self.N_lambda < 1:
            raise ValueError("N_lambda must be at least 1")
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")

    @property
    def omega_eff(self) -> float:
        """Cavity frequency seen by the normal phase, ``omega - delta/2``."""
        return self.omega - 0.5 * self.delta

    @property
    def coupling_asymmetry(self) -> float:
        """``(lambda_s - lambda_r) / (lambda_s + lambda_r)``."""
        return (self.lambda_s - self.lambda_r) / (self.lambda_s + self.lambda_r)


@dataclass(frozen=True)
class PowerCalibration:
    """Rabi frequency per square root of beam power.

    ``Omega = c_rabi * sqrt(P)`` with ``P`` in mW and ``Omega`` in
    rad/us; the square-root law follows from ``Omega**2`` tracking beam
    intensity.
    """

    c_rabi: float

    def __post_init__(self) -> None:
        if self.c_rabi <= 0.0:
            raise ValueError("c_rabi must be positive")


def _check_denominator(value: float, label: str, floor: float) -> None:
    if abs(value) < floor:
        raise DegenerateDetuning(
            f"|{label}| = {abs(value):.3g} rad/us is below the floor "
            f"{floor:.3g} rad/us"
        )


def derive_detunings(cfg: PhysicalConfig) -> tuple[float, float]:
    """Detunings of the two Raman beams from the atomic resonance.

    Substituting the beam frequencies into their detuning definitions
    gives closed forms in terms of the cavity detuning and the small
    offsets::

        Delta_r = Delta_c + eta - zeta - 3*omega_Z
        Delta_s = Delta_c + eta + omega_hf + zeta
    """
    Delta_r = cfg.Delta_c + cfg.eta - cfg.zeta - 3.0 * cfg.omega_Z
    Delta_s = cfg.Delta_c + cfg.eta + cfg.omega_hf + cfg.zeta
    return Delta_r, Delta_s


def differential_stark_shift(cfg: PhysicalConfig,
                             floor: float = DENOMINATOR_FLOOR) -> float:
    """Differential light shift between the two coupled ground states.

    Each beam shifts both states through the far-detuned excited
    manifold; the shifts nearly cancel, leaving::

        omega_dS = (1/6) * ( Omega_r**2 / Delta_r
                           + Omega_s**2 / (Delta_r - omega_1)
                           - (Omega_s**2 / Delta_s
                              + Omega_r**2 / (Delta_r - omega_1)) )

    Raises
    ------
    DegenerateDetuning
        If any denominator magnitude falls below ``floor``.
    """
    Delta_r, Delta_s = derive_detunings(cfg)
    shifted = Delta_r - cfg.omega_1
    _check_denominator(Delta_r, "Delta_r", floor)
    _check_denominator(Delta_s, "Delta_s", floor)
    _check_denominator(shifted, "Delta_r - omega_1", floor)
    return (
        cfg.Omega_r**2 / Delta_r
        + cfg.Omega_s**2 / shifted
        - (cfg.Omega_s**2 / Delta_s + cfg.Omega_r**2 / shifted)
    ) / 6.0


def effective_params(cfg: PhysicalConfig,
                     floor: float = DENOMINATOR_FLOOR) -> EffectiveParams:
    """Assemble the full effective parameter set.

    Signs are retained: negative detunings yield negative couplings and
    a negative dispersive cross term.  ``omega`` contains the common
    index shift of all atoms minus the frame offset ``eta``; it obeys
    ``omega - delta/2 == dispersive_shift(N_total) - eta`` identically.
    """
    Delta_r, Delta_s = derive_detunings(cfg)
    _check_denominator(Delta_r, "Delta_r", floor)
    _check_denominator(Delta_s, "Delta_s", floor)
    omega_dS = differential_stark_shift(cfg, floor=floor)

    N_lam = cfg.N_lambda
    N_rest = cfg.N_total - N_lam
    g2_r = cfg.g**2 / Delta_r
    g2_s = cfg.g**2 / Delta_s

    omega = (
        cfg.alpha / 3.0 * cfg.N_total * (g2_s + g2_r)
        - cfg.alpha / 3.0 * N_rest * (g2_s - g2_r)
        - cfg.eta
    )
    omega0 = omega_dS - (cfg.omega_hf + cfg.zeta - cfg.omega_1)
    delta = cfg.alpha * (2.0 / 3.0) * N_lam * (g2_s - g2_r)
    root_n = math.sqrt(N_lam)
    lambda_r = cfg.beta * _COUPLING_PREFACTOR * root_n * cfg.g * cfg.Omega_r / Delta_r
    lambda_s = cfg.beta * _COUPLING_PREFACTOR * root_n * cfg.g * cfg.Omega_s / Delta_s

    return EffectiveParams(
        omega=omega,
        omega0=omega0,
        delta=delta,
        lambda_r=lambda_r,
        lambda_s=lambda_s,
        omega_dS=omega_dS,
        Delta_r=Delta_r,
        Delta_s=Delta_s,
        N_lambda=N_lam,
        kappa=cfg.kappa,
    )


def critical_coupling_from(omega0: float, omega_eff: float,
                           kappa: float) -> float:
    """Critical coupling of the damped superradiant instability.

    ``lambda_c = (1/2) * sqrt( omega0/omega_eff * (kappa**2 + omega_eff**2) )``

    The closed form holds for ``omega0, omega_eff > 0``.  Flipping the
    sign of every model frequency conjugates the equations of motion, so
    a configuration with both frequencies negative maps onto the
    positive case; the formula is therefore evaluated on magnitudes
    after this global sign normalization.

    Raises
    ------
    OutsideValidity
        If the two frequencies have mixed signs (no global flip fixes
        that) or either vanishes.
    """
    if omega0 * omega_eff <= 0.0:
        raise OutsideValidity(
            "critical coupling requires omega0 and omega - delta/2 to be "
            f"nonzero with equal signs; got {omega0:.4g} and {omega_eff:.4g}"
        )
    w0, we = abs(omega0), abs(omega_eff)
    return 0.5 * math.sqrt(w0 / we * (kappa**2 + we**2))


def critical_coupling(eff: EffectiveParams) -> float:
    """Critical coupling for an effective parameter set."""
    return critical_coupling_from(eff.omega0, eff.omega_eff, eff.kappa)


def dispersive_shift(N: int, cfg: PhysicalConfig,
                     floor: float = DENOMINATOR_FLOOR) -> float:
    """Cavity resonance shift from ``N`` atoms in the lower manifold."""
    Delta_r, _ = derive_detunings(cfg)
    _check_denominator(Delta_r, "Delta_r", floor)
    return cfg.alpha * (2.0 / 3.0) * N * cfg.g**2 / Delta_r


def atoms_from_shift(omega_d: float, cfg: PhysicalConfig,
                     floor: float = DENOMINATOR_FLOOR) -> int:
    """Invert the dispersive shift into an atom number.

    Rounds to the nearest integer; round-tripping through
    :func:`dispersive_shift` recovers the shift to within one atom.

    Raises
    ------
    SignMismatch
        If the shift and the beam detuning have opposite signs.
    """
    if omega_d == 0.0:
        return 0
    Delta_r, _ = derive_detunings(cfg)
    _check_denominator(Delta_r, "Delta_r", floor)
    if omega_d * Delta_r < 0.0:
        raise SignMismatch(
            "dispersive shift and detuning must share a sign; got "
            f"{omega_d:.4g} and {Delta_r:.4g}"
        )
    return round(omega_d * Delta_r * 3.0 / (2.0 * cfg.alpha * cfg.g**2))


def rabi_from_power(P: float, calib: PowerCalibration) -> float:
    """Rabi frequency of a beam carrying ``P`` mW."""
    if P < 0.0:
        raise NegativePower(f"beam power must be >= 0, got {P:.4g} mW")
    return calib.c_rabi * math.sqrt(P)


def calibrate_rabi(cfg: PhysicalConfig, lambda_target: float,
                   power_mw: float) -> PowerCalibration:
    """Fix the power calibration from a measured coupling strength.

    Solves ``|lambda_r(Omega(P))| = lambda_target`` at the given beam
    power, using the atom number already stored in ``cfg``.  This is the
    single-anchor calibration used by all shipped configurations.
    """
    Delta_r, _ = derive_detunings(cfg)
    omega_rabi = (
        abs(lambda_target * Delta_r)
        / (cfg.beta * _COUPLING_PREFACTOR * math.sqrt(cfg.N_lambda) * cfg.g)
    )
    return PowerCalibration(c_rabi=omega_rabi / math.sqrt(power_mw))


def scattering_rate_estimate(cfg: PhysicalConfig,
                             line_strength_factor: float = LINE_STRENGTH_FACTOR,
                             floor: float = DENOMINATOR_FLOOR) -> float:
    """Per-atom off-resonant scattering rate in 1/ms.

    Far-detuned two-level estimate with the full linewidth ``2*gamma``,
    summed over both beams and scaled by the line-strength ratio of the
    beams' polarization to the stretched-transition convention::

        R = 2*gamma * f * ( Omega_r**2/(4*Delta_r**2)
                          + Omega_s**2/(4*Delta_s**2) )

    This is an order-of-magnitude diagnostic, not a dynamical term; the
    model equations contain no spontaneous emission.
    """
    Delta_r, Delta_s = derive_detunings(cfg)
    _check_denominator(Delta_r, "Delta_r", floor)
    _check_denominator(Delta_s, "Delta_s", floor)
    rate_per_us = (
        2.0 * cfg.gamma * line_strength_factor
        * (cfg.Omega_r**2 / (4.0 * Delta_r**2)
           + cfg.Omega_s**2 / (4.0 * Delta_s**2))
    )
    return rate_per_us * 1e3
