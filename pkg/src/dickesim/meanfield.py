"""Large-atom-number semiclassical dynamics and threshold protocols.

Factorizing operator products into products of expectations and scaling

* ``a_c = <a> / sqrt(N_lambda)``,
* ``s_minus = <J_-> / N_lambda``,
* ``s_z = <J_z> / N_lambda``

turns the master equation into three coupled complex ODEs::

    d a_c / dt = -(kappa + i omega) a_c - i delta a_c s_z
                 - i lambda_r s_minus - i lambda_s conj(s_minus)
    d s_minus / dt = -i (omega0 + delta |a_c|^2) s_minus
                     + 2i (lambda_r a_c + lambda_s conj(a_c)) s_z
    d s_z / dt = 2 lambda_r Im(a_c conj(s_minus))
                 + 2 lambda_s Im(conj(a_c) conj(s_minus))

Photon loss damps only the cavity; the spin length
``|s_minus|^2 + s_z^2`` is an exact flow invariant.  The normal state
``(0, 0, -1/2)`` is a fixed point for every parameter set; it
destabilizes at the critical coupling, and locating that instability by
bisection on the linearization of this right-hand side is the primary
cross-check against the closed-form critical coupling.

Long integrations renormalize the spin length after every accepted step
(a numerical regularizer: float64 cannot hold the invariant to 1e-8
over millions of steps otherwise); the unprojected drift over short
runs is covered by the invariant test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import params as params_mod
from .errors import NonStationary, NotDetected, StepSizeUnderflow
from .lindblad import EvolveSpec
from .params import EffectiveParams, PhysicalConfig, PowerCalibration

#: Default symmetry-breaking seed: the normal state is an exact fixed
#: point, so dynamic runs start from a small coherent spin tilt.
DEFAULT_SEED = 1e-4

#: |a_c|^2 floor above which a steady state counts as superradiant.
ORDER_PARAMETER_FLOOR = 1e-6

_COUPLING_PREFACTOR = math.sqrt(3.0) / 12.0


@dataclass(frozen=True)
class MeanFieldState:
    """Factorized scaled expectation values."""

    a_c: complex
    s_minus: complex
    s_z: float

    def spin_length_sq(self) -> float:
        return abs(self.s_minus) ** 2 + self.s_z**2

    def as_tuple(self) -> tuple[complex, complex, float]:
        return complex(self.a_c), complex(self.s_minus), float(self.s_z)


def normal_state(seed: float = 0.0) -> MeanFieldState:
    """Spin-down state with an optional symmetry-breaking tilt.

    The tilt rotates the Bloch vector slightly so the spin length stays
    exactly 1/2.
    """
    if seed == 0.0:
        return MeanFieldState(0.0 + 0.0j, 0.0 + 0.0j, -0.5)
    s_z = -math.sqrt(max(0.25 - seed**2, 0.0))
    return MeanFieldState(0.0 + 0.0j, complex(seed), s_z)


@dataclass(frozen=True)
class RampProtocol:
    """Linear sweep of the total beam power."""

    P_start: float
    P_end: float
    duration: float
    split: float = 0.5

    def __post_init__(self) -> None:
        if not self.P_end > self.P_start >= 0.0:
            raise ValueError("require P_end > P_start >= 0")
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if not 0.0 < self.split < 1.0:
            raise ValueError("split must lie in (0, 1)")

    def power(self, t: float) -> float:
        frac = min(max(t / self.duration, 0.0), 1.0)
        return self.P_start + (self.P_end - self.P_start) * frac


@dataclass(frozen=True)
class DetectionCriterion:
    """Detection fires when the intracavity photon number
    ``N_lambda |a_c|^2`` crosses ``photons``."""

    photons: float = 10.0
    efficiency: float = 0.177
    bin_us: float = 5.0

    def __post_init__(self) -> None:
        if self.photons <= 0.0:
            raise ValueError("photons must be positive")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")
        if self.bin_us <= 0.0:
            raise ValueError("bin_us must be positive")


@dataclass(frozen=True)
class ThresholdResult:
    P_threshold: float
    lambda_at_threshold: float
    detection_time: float
    detected: bool


@dataclass
class MeanFieldSeries:
    """Decimated trajectory samples.  ``lam`` holds the mean coupling
    magnitude ``(|lambda_r| + |lambda_s|) / 2`` at each sample."""

    t: np.ndarray
    a_c: np.ndarray
    s_minus: np.ndarray
    s_z: np.ndarray
    lam: np.ndarray
    power: np.ndarray | None = None

    @property
    def a2(self) -> np.ndarray:
        return np.abs(self.a_c) ** 2

    def spin_length_sq(self) -> np.ndarray:
        return np.abs(self.s_minus) ** 2 + self.s_z**2


DriveFn = Callable[[float], tuple[float, float, float]]
"""Time-dependent override returning ``(lambda_r, lambda_s, omega0)``."""


def mean_field_rhs(state: MeanFieldState, eff: EffectiveParams,
                   couplings: tuple[float, float, float] | None = None) -> MeanFieldState:
    """Flow derivative at ``state``; see the module docstring."""
    lam_r, lam_s, omega0 = couplings if couplings is not None else (
        eff.lambda_r, eff.lambda_s, eff.omega0)
    da, dsm, dsz = _rhs_scalars(
        complex(state.a_c), complex(state.s_minus), float(state.s_z),
        eff.omega, omega0, eff.delta, lam_r, lam_s, eff.kappa,
    )
    return MeanFieldState(da, dsm, dsz)


def _rhs_scalars(a: complex, sm: complex, sz: float, omega: float,
                 omega0: float, delta: float, lam_r: float, lam_s: float,
                 kappa: float) -> tuple[complex, complex, float]:
    sp = sm.conjugate()
    ac = a.conjugate()
    da = -(kappa + 1j * omega) * a - 1j * delta * a * sz \
        - 1j * lam_r * sm - 1j * lam_s * sp
    dsm = -1j * (omega0 + delta * (a.real * a.real + a.imag * a.imag)) * sm \
        + 2j * (lam_r * a + lam_s * ac) * sz
    dsz = 2.0 * (lam_r * (a * sp).imag + lam_s * (ac * sp).imag)
    return da, dsm, dsz


# Dormand-Prince 5(4) coefficients, unrolled over the three state
# components for CPython speed; ramp runs push millions of steps
# through this loop.
_A21 = 0.2
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247,
                                49 / 176, -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = (35 / 384, 500 / 1113, 125 / 192, -2187 / 6784,
                           11 / 84)
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)


def _integrate(y0: tuple[complex, complex, float], t0: float, t1: float,
               omega: float, delta: float, kappa: float,
               drive: DriveFn | None,
               static: tuple[float, float, float],
               rel_tol: float, abs_tol: float, h0: float,
               renormalize: bool,
               sample_dt: float | None = None,
               stop_when: Callable[[float, complex, complex, float], bool] | None = None,
               max_steps: int = 50_000_000):
    """Core adaptive loop.

    Returns ``(times, rows, final, stopped_at)`` where each row holds
    ``(a_c, s_minus, s_z, lambda_r, lambda_s, omega0)``.
    """
    a, sm, sz = y0
    t = t0
    span = t1 - t0
    if span <= 0.0:
        row = (a, sm, sz, *_drive_at(drive, static, t))
        return [t], [row], (a, sm, sz), None
    h = min(h0, span)
    length0 = math.sqrt(abs(sm) ** 2 + sz * sz)
    times = [t]
    rows = [(a, sm, sz, *_drive_at(drive, static, t))]
    next_sample = t0 + sample_dt if sample_dt is not None else math.inf
    stopped_at = None
    h_floor = 1e-12 * max(span, 1.0)
    steps = 0

    def f(tt: float, aa: complex, ss: complex, zz: float):
        lr, ls, w0 = _drive_at(drive, static, tt)
        return _rhs_scalars(aa, ss, zz, omega, w0, delta, lr, ls, kappa)

    while t < t1 - 1e-14 * span:
        h = min(h, t1 - t)
        while True:
            if h < h_floor:
                raise StepSizeUnderflow(f"mean-field step underflow at t={t:.6g}")
            k1 = f(t, a, sm, sz)
            k2 = f(t + _A21 * h,
                   a + h * _A21 * k1[0], sm + h * _A21 * k1[1], sz + h * _A21 * k1[2])
            k3 = f(t + 0.3 * h,
                   a + h * (_A31 * k1[0] + _A32 * k2[0]),
                   sm + h * (_A31 * k1[1] + _A32 * k2[1]),
                   sz + h * (_A31 * k1[2] + _A32 * k2[2]))
            k4 = f(t + 0.8 * h,
                   a + h * (_A41 * k1[0] + _A42 * k2[0] + _A43 * k3[0]),
                   sm + h * (_A41 * k1[1] + _A42 * k2[1] + _A43 * k3[1]),
                   sz + h * (_A41 * k1[2] + _A42 * k2[2] + _A43 * k3[2]))
            k5 = f(t + (8 / 9) * h,
                   a + h * (_A51 * k1[0] + _A52 * k2[0] + _A53 * k3[0] + _A54 * k4[0]),
                   sm + h * (_A51 * k1[1] + _A52 * k2[1] + _A53 * k3[1] + _A54 * k4[1]),
                   sz + h * (_A51 * k1[2] + _A52 * k2[2] + _A53 * k3[2] + _A54 * k4[2]))
            k6 = f(t + h,
                   a + h * (_A61 * k1[0] + _A62 * k2[0] + _A63 * k3[0] + _A64 * k4[0] + _A65 * k5[0]),
                   sm + h * (_A61 * k1[1] + _A62 * k2[1] + _A63 * k3[1] + _A64 * k4[1] + _A65 * k5[1]),
                   sz + h * (_A61 * k1[2] + _A62 * k2[2] + _A63 * k3[2] + _A64 * k4[2] + _A65 * k5[2]))
            a5 = a + h * (_B1 * k1[0] + _B3 * k3[0] + _B4 * k4[0] + _B5 * k5[0] + _B6 * k6[0])
            sm5 = sm + h * (_B1 * k1[1] + _B3 * k3[1] + _B4 * k4[1] + _B5 * k5[1] + _B6 * k6[1])
            sz5 = sz + h * (_B1 * k1[2] + _B3 * k3[2] + _B4 * k4[2] + _B5 * k5[2] + _B6 * k6[2])
            k7 = f(t + h, a5, sm5, sz5)
            ea = h * (_E1 * k1[0] + _E3 * k3[0] + _E4 * k4[0] + _E5 * k5[0] + _E6 * k6[0] + _E7 * k7[0])
            esm = h * (_E1 * k1[1] + _E3 * k3[1] + _E4 * k4[1] + _E5 * k5[1] + _E6 * k6[1] + _E7 * k7[1])
            esz = h * (_E1 * k1[2] + _E3 * k3[2] + _E4 * k4[2] + _E5 * k5[2] + _E6 * k6[2] + _E7 * k7[2])
            err = math.sqrt(abs(ea) ** 2 + abs(esm) ** 2 + esz * esz)
            scale = abs_tol + rel_tol * max(
                1.0, math.sqrt(abs(a5) ** 2 + abs(sm5) ** 2 + sz5 * sz5))
            if err <= scale:
                break
            h *= max(0.2, 0.9 * (scale / err) ** 0.2)
        t += h
        a, sm, sz = a5, sm5, sz5
        if renormalize:
            length = math.sqrt(abs(sm) ** 2 + sz * sz)
            if length > 0.0:
                ratio = length0 / length
                sm *= ratio
                sz *= ratio
        h *= 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * (scale / err) ** 0.2))
        steps += 1
        if steps > max_steps:
            raise StepSizeUnderflow("mean-field step budget exhausted")
        if t >= next_sample - 1e-12:
            times.append(t)
            rows.append((a, sm, sz, *_drive_at(drive, static, t)))
            while next_sample <= t + 1e-12:
                next_sample += sample_dt
        if stop_when is not None and stop_when(t, a, sm, sz):
            stopped_at = t
            break

    if times[-1] != t:
        times.append(t)
        rows.append((a, sm, sz, *_drive_at(drive, static, t)))
    return times, rows, (a, sm, sz), stopped_at


def _drive_at(drive: DriveFn | None, static: tuple[float, float, float],
              t: float) -> tuple[float, float, float]:
    return static if drive is None else drive(t)


def _series_from_rows(times, rows, power_of_t=None) -> MeanFieldSeries:
    arr = np.array(rows, dtype=complex)
    t = np.array(times)
    return MeanFieldSeries(
        t=t,
        a_c=arr[:, 0],
        s_minus=arr[:, 1],
        s_z=arr[:, 2].real,
        lam=0.5 * (np.abs(arr[:, 3]) + np.abs(arr[:, 4])),
        power=None if power_of_t is None else power_of_t(t),
    )


def integrate_mean_field(state0: MeanFieldState, eff: EffectiveParams,
                         spec: EvolveSpec, drive: DriveFn | None = None,
                         sample_dt: float | None = None,
                         renormalize_spin: bool = False) -> MeanFieldSeries:
    """Integrate the factorized flow and return decimated samples."""
    if state0.spin_length_sq() > 0.25 + 1e-9:
        raise ValueError("initial spin length exceeds 1/2")
    static = (eff.lambda_r, eff.lambda_s, eff.omega0)
    if sample_dt is None:
        sample_dt = spec.t_final / 400.0
    times, rows, _, _ = _integrate(
        state0.as_tuple(), 0.0, spec.t_final,
        eff.omega, eff.delta, eff.kappa, drive, static,
        spec.rel_tol, spec.abs_tol, spec.dt_initial,
        renormalize=renormalize_spin, sample_dt=sample_dt,
        max_steps=spec.max_steps,
    )
    return _series_from_rows(times, rows)


def _settle(eff: EffectiveParams, lam: float, seed: float, t_max: float,
            floor: float, rel_tol: float = 1e-8) -> tuple[MeanFieldState, bool]:
    """Relax the seeded normal state at coupling ``lam``.

    Runs in chunks until the state stops moving (superradiant fixed
    point) or the transverse excitation has damped far below the
    classification floor (normal phase).  Returns the final state and a
    convergence flag.
    """
    static = (lam, lam, eff.omega0)
    y = normal_state(seed).as_tuple()
    freq_scale = max(abs(eff.omega), abs(eff.omega0), eff.kappa, 1e-3)
    t_chunk = max(40.0 / eff.kappa if eff.kappa > 0 else 0.0,
                  200.0 / freq_scale)
    t = 0.0
    prev = y
    while t < t_max:
        span = min(t_chunk, t_max - t)
        _, _, y, _ = _integrate(
            y, 0.0, span, eff.omega, eff.delta, eff.kappa,
            None, static, rel_tol, 1e-14, 1e-3, renormalize=True,
        )
        t += span
        a2 = abs(y[0]) ** 2
        norm = 1.0 + abs(y[0]) + abs(y[1]) + abs(y[2])
        moved = (abs(y[0] - prev[0]) + abs(y[1] - prev[1])
                 + abs(y[2] - prev[2]))
        # The endpoint orbits the attractor at the integrator's own
        # accuracy floor, so stationarity is judged against it.
        if moved < 500.0 * rel_tol * norm:
            return MeanFieldState(*y), True
        if a2 < 1e-2 * floor and a2 < seed**2:
            return MeanFieldState(*y), True
        prev = y
    return MeanFieldState(*y), False


def fixed_point_solve(eff: EffectiveParams, lam: float,
                      guess: MeanFieldState) -> MeanFieldState:
    """Polish a superradiant fixed point of the flow at coupling ``lam``.

    Eliminates ``s_z`` through the conserved spin length (lower
    hemisphere) and solves the four remaining real equations; the spin
    equation for ``s_z`` then vanishes automatically.  Serves as the
    independent stationarity oracle for relaxed trajectories.
    """
    from scipy.optimize import root

    eff_l = replace(eff, lambda_r=lam, lambda_s=lam)

    def residual(v: np.ndarray) -> np.ndarray:
        a = complex(v[0], v[1])
        sm = complex(v[2], v[3])
        s_z = -math.sqrt(max(0.25 - abs(sm) ** 2, 0.0))
        d = mean_field_rhs(MeanFieldState(a, sm, s_z), eff_l)
        return np.array([d.a_c.real, d.a_c.imag,
                         d.s_minus.real, d.s_minus.imag])

    v0 = np.array([guess.a_c.real, guess.a_c.imag,
                   guess.s_minus.real, guess.s_minus.imag])
    sol = root(residual, v0, method="hybr", tol=1e-13)
    if not sol.success:
        raise NonStationary(f"fixed-point solve failed: {sol.message}")
    a = complex(sol.x[0], sol.x[1])
    sm = complex(sol.x[2], sol.x[3])
    s_z = -math.sqrt(max(0.25 - abs(sm) ** 2, 0.0))
    return MeanFieldState(a, sm, s_z)


def linearization_matrix(eff: EffectiveParams,
                         lam: tuple[float, float] | None = None,
                         state: MeanFieldState | None = None,
                         h: float = 1e-6,
                         rhs: Callable | None = None) -> np.ndarray:
    """Real 5x5 Jacobian of the flow by central differences.

    Components ordered ``(Re a_c, Im a_c, Re s_minus, Im s_minus, s_z)``.
    The right-hand side is quadratic in the state, so central
    differences are exact to rounding.  ``rhs`` substitutes an
    alternative flow (used by negative-control checks).
    """
    if state is None:
        state = normal_state()
    if lam is not None:
        eff = replace(eff, lambda_r=lam[0], lambda_s=lam[1])
    if rhs is None:
        rhs = mean_field_rhs
    base = np.array([state.a_c.real, state.a_c.imag, state.s_minus.real,
                     state.s_minus.imag, state.s_z])

    def flow(v: np.ndarray) -> np.ndarray:
        st = MeanFieldState(complex(v[0], v[1]), complex(v[2], v[3]), v[4])
        d = rhs(st, eff)
        return np.array([d.a_c.real, d.a_c.imag, d.s_minus.real,
                         d.s_minus.imag, d.s_z])

    jac = np.empty((5, 5))
    for col in range(5):
        step = np.zeros(5)
        step[col] = h
        jac[:, col] = (flow(base + step) - flow(base - step)) / (2.0 * h)
    return jac


def stability_abscissa(eff: EffectiveParams, lam: float,
                       rhs: Callable | None = None) -> float:
    """Largest real part of the normal-state linearization spectrum.

    Every state ``(0, 0, s_z)`` is a fixed point, so the linearization
    always carries a marginal zero mode along ``s_z``; at the normal
    state that direction decouples exactly and is excluded here.  The
    returned abscissa comes from the transverse 4x4 block and changes
    sign at the instability.
    """
    jac = linearization_matrix(eff, lam=(lam, lam), rhs=rhs)
    return float(np.linalg.eigvals(jac[:4, :4]).real.max())


def stability_threshold(eff: EffectiveParams, lam_lo: float, lam_hi: float,
                        rel_width: float = 1e-3,
                        rhs: Callable | None = None) -> float:
    """Bisect the coupling at which the normal state destabilizes.

    ``lam_lo`` must be stable and ``lam_hi`` unstable; both are checked.
    """
    s_lo = stability_abscissa(eff, lam_lo, rhs=rhs)
    s_hi = stability_abscissa(eff, lam_hi, rhs=rhs)
    if s_lo >= 0.0 or s_hi <= 0.0:
        raise ValueError(
            f"bracket does not straddle the instability: abscissae "
            f"{s_lo:.3g} at {lam_lo:.4g}, {s_hi:.3g} at {lam_hi:.4g}"
        )
    while (lam_hi - lam_lo) > rel_width * abs(lam_hi):
        mid = 0.5 * (lam_lo + lam_hi)
        if stability_abscissa(eff, mid, rhs=rhs) > 0.0:
            lam_hi = mid
        else:
            lam_lo = mid
    return 0.5 * (lam_lo + lam_hi)


@dataclass(frozen=True)
class ScanPoint:
    lam: float
    a2: float
    s_z: float
    converged: bool


@dataclass
class BifurcationScan:
    points: list[ScanPoint]
    threshold: float | None
    bracket: tuple[float, float] | None


def bifurcation_scan(eff: EffectiveParams, lambdas,
                     seed: float = DEFAULT_SEED,
                     floor: float = ORDER_PARAMETER_FLOOR,
                     t_max: float | None = None,
                     rel_width: float = 1e-3) -> BifurcationScan:
    """Steady order parameter over a coupling grid, plus the refined
    instability threshold.

    Each grid point relaxes the seeded normal state by long-time
    integration; points that fail to settle within ``t_max`` are
    reported unconverged rather than guessed.  The threshold estimate
    starts from the first grid point whose steady ``|a_c|^2`` exceeds
    ``floor`` and is refined by bisection on the sign of the
    normal-state stability abscissa, which is the zero-seed limit of
    the integration classifier.
    """
    lambdas = list(lambdas)
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("coupling grid must be sorted ascending")
    if t_max is None:
        t_max = 4000.0 / max(eff.kappa, 1e-3)

    points: list[ScanPoint] = []
    for lam in lambdas:
        final, ok = _settle(eff, lam, seed, t_max, floor)
        points.append(ScanPoint(lam=lam, a2=abs(final.a_c) ** 2,
                                s_z=final.s_z, converged=ok))

    threshold = None
    bracket = None
    above = [i for i, p in enumerate(points) if p.a2 > floor]
    if above and above[0] > 0:
        i = above[0]
        bracket = (points[i - 1].lam, points[i].lam)
        threshold = stability_threshold(eff, bracket[0], bracket[1],
                                        rel_width=rel_width)
    return BifurcationScan(points=points, threshold=threshold,
                           bracket=bracket)


# ---------------------------------------------------------------------------
# Power-ramp protocol


def ramp_drive(cfg: PhysicalConfig, calib: PowerCalibration,
               ramp: RampProtocol) -> DriveFn:
    """Power-to-parameter map of a ramp as a fast closure.

    The couplings follow the square-root power law and the spin
    frequency tracks the power through the differential light shift,
    which is linear in total power at fixed detunings.
    """
    Delta_r, Delta_s = params_mod.derive_detunings(cfg)
    shifted = Delta_r - cfg.omega_1
    split = ramp.split
    c2 = calib.c_rabi**2
    stark_per_mw = c2 / 6.0 * (split / Delta_r + (1.0 - split) / shifted
                               - (1.0 - split) / Delta_s - split / shifted)
    omega0_dark = -(cfg.omega_hf + cfg.zeta - cfg.omega_1)
    pref = cfg.beta * _COUPLING_PREFACTOR * math.sqrt(cfg.N_lambda) * cfg.g
    k_r = pref * calib.c_rabi * math.sqrt(split) / Delta_r
    k_s = pref * calib.c_rabi * math.sqrt(1.0 - split) / Delta_s
    P0, rate, T = ramp.P_start, (ramp.P_end - ramp.P_start) / ramp.duration, ramp.duration

    def drive(t: float) -> tuple[float, float, float]:
        P = P0 + rate * t if t < T else ramp.P_end
        if P < 0.0:
            P = 0.0
        root = math.sqrt(P)
        return k_r * root, k_s * root, omega0_dark + stark_per_mw * P

    return drive


def _effective_at_power(cfg: PhysicalConfig, calib: PowerCalibration,
                        split: float, P: float) -> EffectiveParams:
    per_beam = (split * P, (1.0 - split) * P)
    return params_mod.effective_params(cfg.with_powers(calib, *per_beam))


def static_threshold_power(cfg: PhysicalConfig, calib: PowerCalibration,
                           ramp: RampProtocol,
                           coupling_scale: float = 1.0,
                           tol: float = 1e-6) -> tuple[float, float]:
    """Power at which the couplings reach the instantaneous critical
    coupling, and that coupling value.

    Solves ``coupling_scale * |lambda(P)| = lambda_c(P)`` by bisection;
    both sides move with power because the light shift drags the spin
    frequency.  ``coupling_scale`` supports calibration-band curves.

    Raises
    ------
    NotDetected
        If the crossing does not occur inside the ramp's power window.
    """

    def excess(P: float) -> float:
        eff = _effective_at_power(cfg, calib, ramp.split, P)
        lam = 0.5 * (abs(eff.lambda_r) + abs(eff.lambda_s))
        return coupling_scale * lam - params_mod.critical_coupling(eff)

    lo, hi = max(ramp.P_start, 1e-9), ramp.P_end
    if excess(lo) >= 0.0:
        raise NotDetected("already above the static threshold at the ramp start")
    if excess(hi) < 0.0:
        raise NotDetected("static threshold lies beyond the ramp end")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    P_c = 0.5 * (lo + hi)
    eff = _effective_at_power(cfg, calib, ramp.split, P_c)
    return P_c, params_mod.critical_coupling(eff)


def ramp_experiment(cfg: PhysicalConfig, calib: PowerCalibration,
                    ramp: RampProtocol, detector: DetectionCriterion,
                    seed: float = DEFAULT_SEED,
                    rel_tol: float = 1e-7,
                    sample_dt: float | None = None) -> tuple[ThresholdResult, MeanFieldSeries]:
    """Sweep the beam power and watch for the superradiant flash.

    The couplings and the spin frequency are recomputed continuously
    from the instantaneous power.  Detection fires when the intracavity
    photon number ``N_lambda |a_c|^2`` crosses the detector threshold;
    the full trajectory is returned alongside the result.

    Raises
    ------
    NotDetected
        If the ramp ends below the detection criterion.
    """
    eff0 = _effective_at_power(cfg, calib, ramp.split, ramp.P_start)
    drive = ramp_drive(cfg, calib, ramp)
    a2_detect = detector.photons / cfg.N_lambda
    if sample_dt is None:
        sample_dt = ramp.duration / 2000.0

    def stop_when(t: float, a: complex, sm: complex, sz: float) -> bool:
        return (a.real * a.real + a.imag * a.imag) >= a2_detect

    times, rows, _, stopped = _integrate(
        normal_state(seed).as_tuple(), 0.0, ramp.duration,
        eff0.omega, eff0.delta, eff0.kappa, drive,
        (eff0.lambda_r, eff0.lambda_s, eff0.omega0),
        rel_tol, 1e-12, 1e-3, renormalize=True, sample_dt=sample_dt,
        stop_when=stop_when,
    )
    series = _series_from_rows(times, rows,
                               power_of_t=np.vectorize(ramp.power))
    if stopped is None:
        exc = NotDetected(
            f"photon number stayed below {detector.photons:.3g} over the ramp"
        )
        exc.series = series
        raise exc
    lam_r, lam_s, _ = drive(stopped)
    result = ThresholdResult(
        P_threshold=ramp.power(stopped),
        lambda_at_threshold=0.5 * (abs(lam_r) + abs(lam_s)),
        detection_time=stopped,
        detected=True,
    )
    return result, series


@dataclass(frozen=True)
class ThresholdMapPoint:
    omega_d: float
    N: int
    detected: bool
    P_threshold: float | None
    lambda_dynamic: float | None
    P_static: float | None
    lambda_c_static: float | None
    P_static_lower: float | None
    P_static_upper: float | None
    error: str | None = None


def threshold_map(cfg_template: PhysicalConfig, calib: PowerCalibration,
                  atom_numbers, ramp: RampProtocol,
                  detector: DetectionCriterion,
                  band: tuple[float, float] = (1.2, 0.89),
                  seed: float = DEFAULT_SEED) -> list[ThresholdMapPoint]:
    """Dynamic and static thresholds across an atom-number grid.

    For each atom number the dispersive shift, the ramp detection power
    and the static crossing power are recorded, together with a
    calibration band obtained by scaling the coupling by the two
    ``band`` factors (a larger true coupling crosses at lower power, so
    the first factor gives the lower power bound).  Failures are
    recorded per point; the scan continues.
    """
    from .errors import DickeSimError

    records: list[ThresholdMapPoint] = []
    for N in atom_numbers:
        cfg = replace(cfg_template, N_total=int(N))
        omega_d = params_mod.dispersive_shift(cfg.N_total, cfg)
        P_stat = lam_stat = P_lo = P_hi = None
        P_dyn = lam_dyn = None
        err = None
        try:
            P_stat, lam_stat = static_threshold_power(cfg, calib, ramp)
            P_lo, _ = static_threshold_power(cfg, calib, ramp,
                                             coupling_scale=band[0])
            P_hi, _ = static_threshold_power(cfg, calib, ramp,
                                             coupling_scale=band[1])
        except DickeSimError as exc:
            err = f"static: {exc}"
        detected = False
        try:
            result, _ = ramp_experiment(cfg, calib, ramp, detector, seed=seed)
            detected = True
            P_dyn = result.P_threshold
            lam_dyn = result.lambda_at_threshold
        except DickeSimError as exc:
            err = (err + "; " if err else "") + f"ramp: {exc}"
        records.append(ThresholdMapPoint(
            omega_d=omega_d, N=cfg.N_total, detected=detected,
            P_threshold=P_dyn, lambda_dynamic=lam_dyn,
            P_static=P_stat, lambda_c_static=lam_stat,
            P_static_lower=P_lo, P_static_upper=P_hi, error=err,
        ))
    return records
