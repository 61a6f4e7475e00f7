"""Single-excitation spectra and normal-mode splitting extraction.

The excitation-conserving model restricted to one excitation is the
two-by-two matrix ``[[omega_cav, lambda_r], [lambda_r, omega0]]``; its
eigenvalues trace the avoided crossing overlaid on transmission maps,
with a minimal gap of ``2 |lambda_r|`` on resonance.  Peak positions
and the splitting are recovered from simulated scans by a two-
Lorentzian least-squares fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from . import params as params_mod
from .errors import FitDegenerate
from .lindblad import transmission_scan
from .operators import FockSpace, SpinSpace
from .params import PhysicalConfig, PowerCalibration


def tc_normal_modes(omega_cav: float, omega0: float,
                    lambda_r: float) -> tuple[float, float]:
    """Eigenvalues ``(E_minus, E_plus)`` of the single-excitation sector.

    ``(omega_cav + omega0)/2 -+ sqrt((omega_cav - omega0)^2/4 + lambda_r^2)``
    """
    mean = 0.5 * (omega_cav + omega0)
    gap = math.sqrt(0.25 * (omega_cav - omega0) ** 2 + lambda_r**2)
    return mean - gap, mean + gap


@dataclass(frozen=True)
class AvoidedCrossing:
    """Sampled polariton branches over a cavity-frequency grid."""

    omega_cav: np.ndarray
    branch_lower: np.ndarray
    branch_upper: np.ndarray
    splitting_min: float


def avoided_crossing(omega_cav_grid, omega0: float,
                     lambda_r: float) -> AvoidedCrossing:
    grid = np.asarray(list(omega_cav_grid), dtype=float)
    lower = np.empty_like(grid)
    upper = np.empty_like(grid)
    for i, wc in enumerate(grid):
        lower[i], upper[i] = tc_normal_modes(wc, omega0, lambda_r)
    return AvoidedCrossing(
        omega_cav=grid, branch_lower=lower, branch_upper=upper,
        splitting_min=float((upper - lower).min()),
    )


@dataclass(frozen=True)
class SplittingFit:
    """Result of the two-Lorentzian fit to a transmission scan."""

    peak1: float
    peak2: float
    splitting: float
    width: float
    amplitudes: tuple[float, float]
    residual: float

    @property
    def half_splitting(self) -> float:
        return 0.5 * self.splitting


def _two_lorentzians(x: np.ndarray, a1: float, c1: float, a2: float,
                     c2: float, w: float) -> np.ndarray:
    w2 = w * w
    return (a1 * w2 / ((x - c1) ** 2 + w2)
            + a2 * w2 / ((x - c2) ** 2 + w2))


def splitting_from_scan(detunings, transmission,
                        width_seed: float | None = None) -> SplittingFit:
    """Fit two Lorentzians with a shared width and return the centers.

    The scan must resolve both peaks (several points per linewidth).
    Centers are seeded from the two dominant local maxima; the shared
    width keeps the fit stable and biases the centers by far less than
    a linewidth.

    Raises
    ------
    FitDegenerate
        If fewer than two local maxima exist or the fitted centers are
        closer than the fitted width.
    """
    x = np.asarray(list(detunings), dtype=float)
    y = np.asarray(list(transmission), dtype=float)
    if x.shape != y.shape or x.size < 8:
        raise ValueError("need matching arrays with at least 8 points")
    order = np.argsort(x)
    x, y = x[order], y[order]

    interior = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])
    peak_idx = np.where(interior)[0] + 1
    if peak_idx.size < 2:
        raise FitDegenerate("fewer than two local maxima in the scan")
    top2 = peak_idx[np.argsort(y[peak_idx])[-2:]]
    top2 = np.sort(top2)

    span = x[-1] - x[0]
    if width_seed is None:
        width_seed = max(span / 40.0, 1e-6)
    p0 = np.array([y[top2[0]], x[top2[0]], y[top2[1]], x[top2[1]], width_seed])
    scale = max(y.max(), 1e-12)

    def resid(p: np.ndarray) -> np.ndarray:
        return _two_lorentzians(x, *p) - y

    bounds = ([0.0, x[0] - span, 0.0, x[0] - span, 1e-9],
              [np.inf, x[-1] + span, np.inf, x[-1] + span, span])
    sol = least_squares(resid, p0, bounds=bounds)
    a1, c1, a2, c2, w = sol.x
    if abs(c1 - c2) < w:
        raise FitDegenerate(
            f"fitted centers {c1:.4g}, {c2:.4g} closer than width {w:.4g}"
        )
    if min(a1, a2) < 1e-3 * scale:
        raise FitDegenerate("one fitted peak has vanishing amplitude")
    lo, hi = (c1, c2) if c1 <= c2 else (c2, c1)
    return SplittingFit(
        peak1=lo, peak2=hi, splitting=hi - lo, width=w,
        amplitudes=(a1, a2) if c1 <= c2 else (a2, a1),
        residual=float(np.linalg.norm(sol.fun) / math.sqrt(x.size) / scale),
    )


@dataclass
class CrossingMap:
    """Transmission map binned by dispersive shift.

    ``values[i, j]`` is the normalized transmission of bin ``i`` at
    probe detuning ``j``.  The overlay arrays live in probe-detuning
    coordinates: the bare cavity line sits at the dispersive shift, the
    bare spin line at the effective spin frequency plus the frame
    offset, and the coupled branches are their avoided crossing.
    """

    bin_centers: np.ndarray
    probe_detunings: np.ndarray
    values: np.ndarray
    atom_numbers: np.ndarray
    couplings: np.ndarray
    bare_cavity: np.ndarray
    bare_spin: float
    branch_lower: np.ndarray
    branch_upper: np.ndarray


def crossing_map(cfg: PhysicalConfig, calib: PowerCalibration,
                 power_mw: float, omega_d_targets, probe_detunings,
                 eta_p: float, fock: FockSpace, n_lambda_model: int = 4,
                 bin_width: float | None = None) -> CrossingMap:
    """Transmission spectra across an atom-number sweep, binned by
    dispersive shift.

    The beam power is fixed, so the collective coupling grows with the
    square root of the number of coupled atoms while the cavity line
    shifts linearly; rows falling into the same shift bin are averaged.
    The solver runs at a reduced model atom number: a weak probe
    explores only the single-excitation sector, which depends on the
    atom number solely through the collective coupling strength.  A
    target shift of zero produces the bare empty-cavity trace.
    """
    from .units import mhz

    if bin_width is None:
        bin_width = mhz(0.01)
    probe = np.asarray(list(probe_detunings), dtype=float)
    spin = SpinSpace(n_lambda_model)

    rows = []
    for target in omega_d_targets:
        n_atoms = params_mod.atoms_from_shift(target, cfg)
        if n_atoms < 1:
            trace = (cfg.kappa**2) / (cfg.kappa**2 + probe**2)
            rows.append((0.0, 0, 0.0, None, trace))
            continue
        cfg_n = replace(cfg, N_total=n_atoms)
        cfg_n = cfg_n.with_powers(calib, power_mw, 0.0)
        eff = params_mod.effective_params(cfg_n)
        omega_d = params_mod.dispersive_shift(cfg_n.N_total, cfg_n)
        eff_model = replace(eff, N_lambda=n_lambda_model)
        points = transmission_scan(eff_model, probe, eta_p, fock, spin,
                                   frame_offset=cfg_n.eta)
        rows.append((omega_d, cfg_n.N_total, eff.lambda_r,
                     eff.omega0, np.array([p.normalized for p in points])))

    rows.sort(key=lambda r: r[0])
    omega0 = next((r[3] for r in rows if r[3] is not None), 0.0)
    spin_line = omega0 + cfg.eta
    bins: dict[int, list] = {}
    for row in rows:
        bins.setdefault(int(round(row[0] / bin_width)), []).append(row)

    centers, values, atoms, lams = [], [], [], []
    bare_cav, lower, upper = [], [], []
    for key in sorted(bins):
        group = bins[key]
        omega_d = key * bin_width
        centers.append(omega_d)
        values.append(np.mean([g[4] for g in group], axis=0))
        atoms.append(int(np.mean([g[1] for g in group])))
        lam = float(np.mean([g[2] for g in group]))
        lams.append(lam)
        bare_cav.append(omega_d)
        lo, hi = tc_normal_modes(omega_d, spin_line, lam)
        lower.append(lo)
        upper.append(hi)

    return CrossingMap(
        bin_centers=np.array(centers),
        probe_detunings=probe,
        values=np.array(values),
        atom_numbers=np.array(atoms),
        couplings=np.array(lams),
        bare_cavity=np.array(bare_cav),
        bare_spin=spin_line,
        branch_lower=np.array(lower),
        branch_upper=np.array(upper),
    )
