"""Cross-validation battery tying the modules to each other.

Each check exercises one identity or mutual oracle at small dimensions
and reports the measured deviation against its tolerance.  The battery
is deterministic (fixed parameter sets, no randomness) and fast enough
to run routinely; the command-line front end exposes it as the
``quantum-check`` experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import meanfield, params, spectrum
from .errors import CheckFailed
from .lindblad import EvolveSpec, evolve, steady_state
from .operators import (
    FockSpace,
    SpinSpace,
    annihilation,
    collective_ops,
    commutator,
    ground_product_state,
    hamiltonian_dicke,
    hamiltonian_general,
    hamiltonian_tc,
    lift,
    number,
    parity_operator,
    pure_state,
)
from .params import EffectiveParams
from .units import mhz

MAX_CHECK_ATOMS = 8
MAX_CHECK_FOCK = 20


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


def _effective(omega, omega0, delta, lam_r, lam_s, kappa, n_lambda) -> EffectiveParams:
    return EffectiveParams(
        omega=omega, omega0=omega0, delta=delta, lambda_r=lam_r,
        lambda_s=lam_s, omega_dS=0.0, Delta_r=-mhz(1e5), Delta_s=-mhz(1e5),
        N_lambda=n_lambda, kappa=kappa,
    )


def _check_commutators(n_max_atoms: int) -> CheckResult:
    worst = 0.0
    for n in range(1, n_max_atoms + 1):
        jp, jm, jz = collective_ops(SpinSpace(n))
        worst = max(worst, (commutator(jp, jm) - 2.0 * jz).norm())
        worst = max(worst, (commutator(jp, jz) + jp).norm())
        worst = max(worst, (commutator(jm, jz) - jm).norm())
    return CheckResult("spin_commutators", worst < 1e-10, worst, 1e-10)


def _check_ladder(n_max: int) -> CheckResult:
    fock = FockSpace(n_max)
    a = annihilation(fock)
    n_op = a.dag() @ a
    worst = float(np.abs(np.diag(n_op.mat) - np.arange(n_max + 1)).max())
    comm = commutator(a, a.dag()).mat
    # truncation corrupts only the top diagonal entry
    worst = max(worst, float(np.abs(np.diag(comm)[:-1] - 1.0).max()))
    worst = max(worst, float(np.abs(comm - np.diag(np.diag(comm))).max()))
    return CheckResult("fock_ladder", worst < 1e-12, worst, 1e-12)


def _check_hermiticity(n_atoms: int, n_max: int) -> CheckResult:
    fock, spin = FockSpace(n_max), SpinSpace(n_atoms)
    eff = _effective(mhz(0.9), mhz(-1.3), mhz(0.2), mhz(0.21), mhz(0.17),
                     mhz(0.07), n_atoms)
    worst = 0.0
    for H in (hamiltonian_general(eff, fock, spin),
              hamiltonian_dicke(eff, fock, spin),
              hamiltonian_tc(mhz(0.4), mhz(-0.8), mhz(0.3), fock, spin)):
        worst = max(worst, (H - H.dag()).norm())
    return CheckResult("hamiltonian_hermitian", worst < 1e-12, worst, 1e-12)


def _check_tc_u1(n_atoms: int, n_max: int) -> CheckResult:
    fock, spin = FockSpace(n_max), SpinSpace(n_atoms)
    H = hamiltonian_tc(mhz(0.73), mhz(-0.41), mhz(0.19), fock, spin)
    n_tot = lift(number(fock), fock, spin) + lift(collective_ops(spin)[2], fock, spin)
    dev = commutator(H, n_tot).norm()
    return CheckResult("tc_excitation_symmetry", dev < 1e-10, dev, 1e-10)


def _check_dicke_parity(n_atoms: int, n_max: int) -> CheckResult:
    fock, spin = FockSpace(n_max), SpinSpace(n_atoms)
    eff = _effective(mhz(1.1), mhz(0.8), mhz(-0.1), mhz(0.3), mhz(0.3),
                     mhz(0.07), n_atoms)
    H = hamiltonian_dicke(eff, fock, spin)
    dev = commutator(H, parity_operator(fock, spin)).norm()
    return CheckResult("dicke_parity_symmetry", dev < 1e-10, dev, 1e-10)


def _check_single_excitation(n_atoms: int, n_max: int) -> CheckResult:
    fock, spin = FockSpace(n_max), SpinSpace(n_atoms)
    omega_cav, omega0, lam = mhz(0.62), mhz(0.58), mhz(0.21)
    H = hamiltonian_tc(omega_cav, omega0, lam, fock, spin)
    j = spin.j
    ground = omega0 * (-j)
    # basis states |1 photon, m=-j> and |0 photons, m=-j+1>
    idx_photon = 1 * spin.dim + 0
    idx_spin = 0 * spin.dim + 1
    sector = H.mat[np.ix_([idx_photon, idx_spin], [idx_photon, idx_spin])]
    sector = sector - ground * np.eye(2)
    expected = np.array([[omega_cav, lam], [lam, omega0]])
    dev = float(np.abs(sector - expected).max())
    modes = spectrum.tc_normal_modes(omega_cav, omega0, lam)
    eigs = np.sort(np.linalg.eigvalsh(sector))
    dev = max(dev, float(np.abs(eigs - np.array(modes)).max()))
    return CheckResult("tc_single_excitation_sector", dev < 1e-10, dev, 1e-10)


def _check_driven_cavity(n_max: int) -> CheckResult:
    fock = FockSpace(n_max)
    kappa, detuning = mhz(0.07), mhz(0.23)
    eta_p = 0.25 * kappa
    a = annihilation(fock)
    H = detuning * number(fock) + eta_p * (a + a.dag())
    rho = steady_state(H, kappa)
    n_ss = rho.expectation(number(fock)).real
    expected = eta_p**2 / (kappa**2 + detuning**2)
    dev = abs(n_ss - expected) / expected
    return CheckResult("driven_cavity_closed_form", dev < 1e-6, dev, 1e-6)


def _check_steady_vs_evolve(n_atoms: int, n_max: int) -> CheckResult:
    fock, spin = FockSpace(n_max), SpinSpace(n_atoms)
    kappa = mhz(0.1)
    a = lift(annihilation(fock), fock, spin)
    # weak drive: the slowest (half-photonic) modes damp at kappa/2, so
    # the 20/kappa horizon leaves a transient of order exp(-10) times
    # the drive-induced scale
    H = hamiltonian_tc(mhz(0.12), mhz(0.1), mhz(0.15), fock, spin) \
        + (0.05 * kappa) * (a + a.dag())
    rho_direct = steady_state(H, kappa)
    spec = EvolveSpec(t_final=20.0 / kappa, rel_tol=1e-10, abs_tol=1e-13)
    start = ground_product_state(fock, spin)
    result = evolve(start, H, kappa, spec, n_samples=3)
    rho_evolved = result.final_state
    # quadratic observables: their transients decay at the full kappa,
    # leaving ~exp(-20) of the drive-induced scale at this horizon
    n_op = a.dag() @ a
    obs = {
        "n": n_op,
        "n2": n_op @ n_op,
        "jz": lift(collective_ops(spin)[2], fock, spin),
    }
    dev = max(abs(rho_direct.expectation(op) - rho_evolved.expectation(op))
              for op in obs.values())
    return CheckResult("steady_state_vs_evolution", dev < 1e-6, dev, 1e-6)


def _check_purity_undamped(n_atoms: int, n_max: int) -> CheckResult:
    fock, spin = FockSpace(n_max), SpinSpace(n_atoms)
    eff = _effective(mhz(1.0), mhz(1.0), 0.0, mhz(0.4), mhz(0.4), mhz(0.07),
                     n_atoms)
    H = hamiltonian_dicke(eff, fock, spin)
    vec = np.zeros(fock.dim * spin.dim)
    vec[1] = 1.0
    rho0 = pure_state(vec, (fock.dim, spin.dim))
    spec = EvolveSpec(t_final=5.0, rel_tol=1e-10, abs_tol=1e-13)
    # closed system: the truncated Hamiltonian is still Hermitian, so
    # purity is conserved regardless of ladder leakage
    result = evolve(rho0, H, 0.0, spec, n_samples=6, keep_states=True,
                    truncation_limit=None)
    drift = max(abs(st.purity() - 1.0) for st in result.states)
    drift = max(drift, result.trace_drift)
    return CheckResult("undamped_purity_trace", drift < 1e-8, drift, 1e-8)


def _check_jacobian_vs_critical(rhs: Callable | None) -> CheckResult:
    worst = 0.0
    for omega0 in np.linspace(mhz(0.2), mhz(1.8), 5):
        for omega_eff in np.linspace(mhz(0.2), mhz(1.8), 5):
            eff = _effective(omega_eff, omega0, 0.0, 0.0, 0.0, mhz(0.07), 100)
            lam_c = params.critical_coupling(eff)
            thr = meanfield.stability_threshold(
                eff, 0.5 * lam_c, 1.5 * lam_c, rel_width=1e-4, rhs=rhs)
            worst = max(worst, abs(thr - lam_c) / lam_c)
    return CheckResult("normal_state_instability_vs_closed_form",
                       worst < 0.01, worst, 0.01)


def _check_spin_length() -> CheckResult:
    eff = _effective(mhz(1.0), mhz(0.9), mhz(0.1), mhz(0.4), mhz(0.37),
                     mhz(0.07), 100)
    spec = EvolveSpec(t_final=200.0, rel_tol=1e-11, abs_tol=1e-14)
    series = meanfield.integrate_mean_field(
        meanfield.normal_state(1e-2), eff, spec, renormalize_spin=False)
    lengths = series.spin_length_sq()
    drift = float(np.abs(lengths - lengths[0]).max() / lengths[0])
    return CheckResult("spin_length_invariant", drift < 1e-8, drift, 1e-8)


def _check_mirror_symmetry() -> CheckResult:
    eff = _effective(mhz(1.0), mhz(1.0), 0.0, mhz(0.8), mhz(0.8), mhz(0.07),
                     100)
    spec = EvolveSpec(t_final=60.0, rel_tol=1e-10, abs_tol=1e-13)
    plus = meanfield.integrate_mean_field(meanfield.normal_state(1e-3), eff, spec)
    minus = meanfield.integrate_mean_field(meanfield.normal_state(-1e-3), eff, spec)
    dev = float(max(np.abs(plus.a_c + minus.a_c).max(),
                    np.abs(plus.s_minus + minus.s_minus).max(),
                    np.abs(plus.s_z - minus.s_z).max()))
    return CheckResult("mirror_symmetry", dev < 1e-7, dev, 1e-7)


def _check_fixed_point() -> CheckResult:
    eff = _effective(mhz(1.0), mhz(1.0), 0.0, 0.0, 0.0, mhz(0.07), 100)
    lam_c = params.critical_coupling(eff)
    settled, _ = meanfield._settle(eff, 1.5 * lam_c, 1e-4, 3000.0, 1e-6)
    polished = meanfield.fixed_point_solve(eff, 1.5 * lam_c, settled)
    dev = abs(abs(settled.a_c) ** 2 - abs(polished.a_c) ** 2)
    residual = meanfield.mean_field_rhs(
        polished, replace(eff, lambda_r=1.5 * lam_c, lambda_s=1.5 * lam_c))
    res_norm = math.sqrt(abs(residual.a_c) ** 2 + abs(residual.s_minus) ** 2
                         + residual.s_z**2)
    measured = max(dev, res_norm)
    return CheckResult("superradiant_fixed_point", measured < 1e-5, measured,
                       1e-5, detail="settle vs polish and rhs residual")


def _check_determinism() -> CheckResult:
    import io

    from .runio import write_csv

    eff = _effective(mhz(0.6), mhz(0.5), 0.0, mhz(0.2), mhz(0.2), mhz(0.07),
                     50)
    rows = []
    spec = EvolveSpec(t_final=30.0, rel_tol=1e-9, abs_tol=1e-12)
    for _ in range(2):
        series = meanfield.integrate_mean_field(
            meanfield.normal_state(1e-3), eff, spec, sample_dt=1.0)
        buf = io.StringIO()
        write_csv(buf, ["t_us", "a2", "s_z"],
                  zip(series.t, series.a2, series.s_z))
        rows.append(buf.getvalue())
    same = rows[0] == rows[1]
    return CheckResult("deterministic_outputs", same, 0.0 if same else 1.0,
                       0.0, detail="byte-identical repeated run")


def run_checks(n_atoms: int = 4, n_max: int = 12,
               rhs: Callable | None = None) -> list[CheckResult]:
    """Run the full battery at small dimensions and report every result.

    ``rhs`` substitutes the mean-field flow in the instability oracle;
    passing a corrupted flow must trip that check (negative control).
    """
    if n_atoms > MAX_CHECK_ATOMS or n_max > MAX_CHECK_FOCK:
        raise ValueError(
            f"check dimensions capped at {MAX_CHECK_ATOMS} atoms, "
            f"{MAX_CHECK_FOCK} photons"
        )
    return [
        _check_commutators(MAX_CHECK_ATOMS),
        _check_ladder(n_max),
        _check_hermiticity(n_atoms, n_max),
        _check_tc_u1(n_atoms, n_max),
        _check_dicke_parity(n_atoms, n_max),
        _check_single_excitation(n_atoms, n_max),
        _check_driven_cavity(n_max),
        _check_steady_vs_evolve(2, 8),
        _check_purity_undamped(2, 6),
        _check_jacobian_vs_critical(rhs),
        _check_spin_length(),
        _check_mirror_symmetry(),
        _check_fixed_point(),
        _check_determinism(),
    ]


def quantum_check(n_atoms: int = 4, n_max: int = 12,
                  rhs: Callable | None = None) -> list[CheckResult]:
    """Run the battery and fail loudly.

    Raises
    ------
    CheckFailed
        If any check fails; the exception lists the failing identifiers
        and carries the full result table as ``results``.
    """
    results = run_checks(n_atoms=n_atoms, n_max=n_max, rhs=rhs)
    failed = [r.check_id for r in results if not r.passed]
    if failed:
        exc = CheckFailed(
            f"{len(failed)} check(s) failed: {', '.join(failed)}",
            failed_ids=failed,
        )
        exc.results = results
        raise exc
    return results
