"""Dissipative dynamics: generator identities, evolution, steady states
and transmission."""

import numpy as np
import pytest
from dataclasses import replace

from dickesim import params
from dickesim.errors import (
    SingularLiouvillian,
    TruncationError,
)
from dickesim.lindblad import (
    EvolveSpec,
    empty_cavity_peak,
    evolve,
    liouvillian_apply,
    liouvillian_matrix,
    steady_state,
    transmission_scan,
)
from dickesim.operators import (
    FockSpace,
    SpinSpace,
    annihilation,
    coherent_state,
    collective_ops,
    ground_product_state,
    hamiltonian_dicke,
    hamiltonian_tc,
    lift,
    number,
    parity_operator,
    pure_state,
)
from dickesim.params import EffectiveParams
from dickesim.spectrum import tc_normal_modes
from dickesim.units import mhz


def make_eff(n_lambda, **kwargs):
    fields = dict(omega=mhz(0.8), omega0=mhz(0.6), delta=mhz(0.1),
                  lambda_r=mhz(0.2), lambda_s=mhz(0.15), kappa=mhz(0.07))
    fields.update(kwargs)
    return EffectiveParams(omega_dS=0.0, Delta_r=-mhz(1e5), Delta_s=-mhz(1e5),
                           N_lambda=n_lambda, **fields)


class TestGenerator:
    def test_stationary_maximally_mixed_without_dynamics(self):
        fock = FockSpace(4)
        H = 0.0 * number(fock)
        rho = np.eye(fock.dim) / fock.dim
        out = liouvillian_apply(H, 0.0, rho)
        assert np.allclose(out, 0.0)

    def test_always_traceless(self):
        rng = np.random.default_rng(3)
        fock, spin = FockSpace(3), SpinSpace(2)
        H = hamiltonian_tc(mhz(0.3), mhz(0.2), mhz(0.1), fock, spin)
        m = rng.normal(size=(H.dim, H.dim)) + 1j * rng.normal(size=(H.dim, H.dim))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        out = liouvillian_apply(H, mhz(0.07), rho)
        assert abs(np.trace(out)) < 1e-12

    def test_single_photon_decay_rate(self):
        # photon number decays at twice the amplitude rate
        fock = FockSpace(4)
        kappa = mhz(0.07)
        H = 0.0 * number(fock)
        rho = np.zeros((5, 5), dtype=complex)
        rho[1, 1] = 1.0
        out = liouvillian_apply(H, kappa, rho)
        n_dot = np.trace(number(fock).mat @ out).real
        assert n_dot == pytest.approx(-2.0 * kappa * 1.0, rel=1e-12)

    def test_matrix_form_agrees_with_apply(self):
        fock, spin = FockSpace(3), SpinSpace(2)
        H = hamiltonian_dicke(make_eff(2), fock, spin)
        kappa = mhz(0.11)
        rng = np.random.default_rng(5)
        m = rng.normal(size=(H.dim, H.dim)) + 1j * rng.normal(size=(H.dim, H.dim))
        rho = 0.5 * (m + m.conj().T)
        direct = liouvillian_apply(H, kappa, rho)
        via_matrix = (liouvillian_matrix(H, kappa) @ rho.reshape(-1)).reshape(rho.shape)
        assert np.allclose(direct, via_matrix, atol=1e-12)


class TestEvolve:
    def test_coherent_amplitude_decay(self):
        fock = FockSpace(14)
        kappa = mhz(0.2)
        rho0 = coherent_state(fock, 0.7)
        H = 0.0 * number(fock)
        a = annihilation(fock)
        spec = EvolveSpec(t_final=6.0, rel_tol=1e-10, abs_tol=1e-13)
        result = evolve(rho0, H, kappa, spec, observables={"a": a},
                        n_samples=13)
        expected = 0.7 * np.exp(-kappa * result.times)
        assert np.allclose(result.expectations["a"], expected, atol=1e-8)

    def test_undamped_purity_constant(self):
        fock, spin = FockSpace(5), SpinSpace(2)
        H = hamiltonian_dicke(make_eff(2, lambda_r=mhz(0.3), lambda_s=mhz(0.3)),
                              fock, spin)
        vec = np.zeros(H.dim)
        vec[1] = 1.0
        spec = EvolveSpec(t_final=4.0, rel_tol=1e-10, abs_tol=1e-13)
        result = evolve(pure_state(vec, H.dims), H, 0.0, spec, n_samples=5,
                        keep_states=True, truncation_limit=None)
        for state in result.states:
            assert state.purity() == pytest.approx(1.0, abs=1e-8)

    def test_trace_drift_bounded(self):
        fock, spin = FockSpace(6), SpinSpace(2)
        eff = make_eff(2)
        H = hamiltonian_dicke(eff, fock, spin)
        spec = EvolveSpec(t_final=30.0, rel_tol=1e-9, abs_tol=1e-12)
        result = evolve(ground_product_state(fock, spin), H, eff.kappa, spec,
                        n_samples=7)
        assert result.trace_drift < 1e-8

    def test_tc_excitation_conserved_undamped(self):
        fock, spin = FockSpace(6), SpinSpace(3)
        H = hamiltonian_tc(mhz(0.5), mhz(0.45), mhz(0.2), fock, spin)
        n_tot = (lift(number(fock), fock, spin)
                 + lift(collective_ops(spin)[2], fock, spin))
        vec = np.zeros(H.dim)
        vec[1] = 1.0  # one spin excitation
        spec = EvolveSpec(t_final=40.0, rel_tol=1e-10, abs_tol=1e-13)
        result = evolve(pure_state(vec, H.dims), H, 0.0, spec,
                        observables={"n_tot": n_tot}, n_samples=17)
        series = result.expectations["n_tot"]
        assert np.abs(series - series[0]).max() < 1e-7

    def test_dicke_parity_conserved_undamped(self):
        fock, spin = FockSpace(6), SpinSpace(2)
        eff = make_eff(2, lambda_r=mhz(0.25), lambda_s=mhz(0.25), delta=0.0)
        H = hamiltonian_dicke(eff, fock, spin)
        pi = parity_operator(fock, spin)
        vec = np.zeros(H.dim)
        vec[0] = 1.0 / np.sqrt(2.0)
        vec[2 * spin.dim + 2] = 1.0 / np.sqrt(2.0)  # same parity component
        spec = EvolveSpec(t_final=40.0, rel_tol=1e-10, abs_tol=1e-13)
        result = evolve(pure_state(vec, H.dims), H, 0.0, spec,
                        observables={"pi": pi}, n_samples=17,
                        truncation_limit=None)
        series = result.expectations["pi"]
        assert np.abs(series - series[0]).max() < 1e-7

    def test_adaptive_and_fixed_step_agree(self):
        fock, spin = FockSpace(5), SpinSpace(2)
        eff = make_eff(2)
        H = hamiltonian_dicke(eff, fock, spin)
        rho0 = ground_product_state(fock, spin)
        n_op = lift(number(fock), fock, spin)
        res_a = evolve(rho0, H, eff.kappa,
                       EvolveSpec(t_final=10.0, rel_tol=1e-10, abs_tol=1e-13),
                       observables={"n": n_op}, n_samples=6)
        res_f = evolve(rho0, H, eff.kappa,
                       EvolveSpec(t_final=10.0, dt_initial=2e-3, method="rk4"),
                       observables={"n": n_op}, n_samples=6)
        assert np.allclose(res_a.expectations["n"], res_f.expectations["n"],
                           atol=1e-6)

    def test_truncation_guard_fires(self):
        fock = FockSpace(3)
        kappa = mhz(0.05)
        a = annihilation(fock)
        H = (0.8 * kappa) * (a + a.dag())  # strong drive on a tiny ladder
        spec = EvolveSpec(t_final=200.0, rel_tol=1e-8, abs_tol=1e-11)
        with pytest.raises(TruncationError):
            evolve(coherent_state(fock, 0.0), H, kappa, spec, n_samples=21)


class TestSteadyState:
    def test_driven_cavity_closed_form(self):
        fock = FockSpace(10)
        kappa, detuning = mhz(0.07), mhz(0.31)
        eta_p = 0.3 * kappa
        a = annihilation(fock)
        H = detuning * number(fock) + eta_p * (a + a.dag())
        rho = steady_state(H, kappa)
        assert rho.expectation(number(fock)).real == pytest.approx(
            eta_p**2 / (kappa**2 + detuning**2), rel=1e-9)

    def test_undriven_tc_settles_to_ground_product(self):
        fock, spin = FockSpace(5), SpinSpace(2)
        H = hamiltonian_tc(mhz(0.4), mhz(0.33), mhz(0.15), fock, spin)
        rho = steady_state(H, mhz(0.07))
        residual = np.linalg.norm(liouvillian_apply(H, mhz(0.07), rho.mat))
        assert residual < 1e-9
        expected = ground_product_state(fock, spin)
        assert np.allclose(rho.mat, expected.mat, atol=1e-8)

    def test_direct_and_evolve_methods_agree(self):
        fock, spin = FockSpace(8), SpinSpace(2)
        kappa = mhz(0.1)
        a = lift(annihilation(fock), fock, spin)
        H = hamiltonian_tc(mhz(0.12), mhz(0.1), mhz(0.15), fock, spin) \
            + (0.2 * kappa) * (a + a.dag())
        rho_direct = steady_state(H, kappa, method="direct")
        rho_evolved = steady_state(H, kappa, method="evolve")
        n_op = a.dag() @ a
        assert rho_direct.expectation(n_op).real == pytest.approx(
            rho_evolved.expectation(n_op).real, abs=1e-6)

    def test_quadrature_agrees_on_long_horizon(self):
        # the half-photon-fraction modes damp at kappa/2, so the field
        # quadrature needs a longer relaxation than quadratic observables
        fock, spin = FockSpace(8), SpinSpace(2)
        kappa = mhz(0.1)
        a = lift(annihilation(fock), fock, spin)
        H = hamiltonian_tc(mhz(0.12), mhz(0.1), mhz(0.15), fock, spin) \
            + (0.05 * kappa) * (a + a.dag())
        rho_direct = steady_state(H, kappa)
        spec = EvolveSpec(t_final=40.0 / kappa, rel_tol=1e-10, abs_tol=1e-13)
        res = evolve(ground_product_state(fock, spin), H, kappa, spec,
                     n_samples=3)
        quad = 0.5 * (a + a.dag())
        assert rho_direct.expectation(quad).real == pytest.approx(
            res.final_state.expectation(quad).real, abs=1e-9)

    def test_undamped_system_is_singular(self):
        fock = FockSpace(4)
        H = mhz(0.3) * number(fock)
        with pytest.raises(SingularLiouvillian):
            steady_state(H, 0.0)

    def test_dicke_quasi_steady_photon_number(self):
        # a small system shows the precursor of the transition: strong
        # coupling sustains photons, weak coupling does not; the direct
        # solver is the oracle for the evolved quasi-steady value
        n_atoms, n_max = 2, 10
        fock, spin = FockSpace(n_max), SpinSpace(n_atoms)
        eff0 = make_eff(n_atoms, omega=mhz(1.0), omega0=mhz(1.0), delta=0.0,
                        kappa=mhz(0.3), lambda_r=0.0, lambda_s=0.0)
        lam_c = params.critical_coupling(eff0)
        n_op = lift(number(fock), fock, spin)

        values = {}
        for factor in (2.0, 0.2):
            eff = replace(eff0, lambda_r=factor * lam_c, lambda_s=factor * lam_c)
            H = hamiltonian_dicke(eff, fock, spin)
            rho_ss = steady_state(H, eff.kappa, truncation_limit=None)
            n_ss = rho_ss.expectation(n_op).real
            spec = EvolveSpec(t_final=30.0 / eff.kappa, rel_tol=1e-9,
                              abs_tol=1e-12)
            res = evolve(ground_product_state(fock, spin), H, eff.kappa, spec,
                         observables={"n": n_op}, n_samples=4,
                         truncation_limit=None)
            assert res.expectations["n"][-1] == pytest.approx(n_ss, abs=2e-3)
            values[factor] = n_ss
        assert values[2.0] > 0.3
        assert values[0.2] < 0.05


class TestTransmission:
    def test_uncoupled_scan_is_shifted_lorentzian(self):
        eff = make_eff(2, omega=mhz(-0.5), omega0=mhz(-3.0), delta=0.0,
                       lambda_r=0.0, lambda_s=0.0)
        fock, spin = FockSpace(8), SpinSpace(2)
        grid = np.linspace(mhz(-1.0), mhz(-0.1), 41)
        pts = transmission_scan(eff, grid, 0.3 * eff.kappa, fock, spin)
        norm = np.array([p.normalized for p in pts])
        lorentz = eff.kappa**2 / (eff.kappa**2 + (grid - eff.omega_eff) ** 2)
        assert np.allclose(norm, lorentz, atol=2e-3)

    def test_resonant_peaks_split_by_twice_the_coupling(self):
        lam = mhz(0.2)
        eff = make_eff(2, omega=mhz(-0.5), omega0=mhz(-0.5), delta=0.0,
                       lambda_r=lam, lambda_s=0.0)
        fock, spin = FockSpace(10), SpinSpace(2)
        grid = np.linspace(mhz(-1.1), mhz(0.1), 121)
        pts = transmission_scan(eff, grid, 0.3 * eff.kappa, fock, spin)
        norm = np.array([p.normalized for p in pts])
        e_lo, e_hi = tc_normal_modes(eff.omega_eff, eff.omega0, lam)
        for target in (e_lo, e_hi):
            i = np.argmin(np.abs(grid - target))
            window = norm[max(i - 3, 0):i + 4]
            assert window.max() > 0.4
        # peak positions within half a linewidth of the sector eigenvalues
        peaks = grid[(norm > np.roll(norm, 1)) & (norm > np.roll(norm, -1))]
        assert min(abs(p - e_lo) for p in peaks) < eff.kappa / 2.0
        assert min(abs(p - e_hi) for p in peaks) < eff.kappa / 2.0

    def test_empty_peak_matches_weak_drive_form(self):
        fock = FockSpace(8)
        kappa = mhz(0.07)
        eta_p = 0.2 * kappa
        peak = empty_cavity_peak(eta_p, kappa, fock)
        assert peak == pytest.approx(eta_p**2 / kappa**2, rel=1e-6)

    def test_drive_phase_unobservable(self):
        # a complex drive phase leaves photon numbers unchanged
        fock, spin = FockSpace(8), SpinSpace(1)
        kappa = mhz(0.07)
        eta_p = 0.3 * kappa
        a = lift(annihilation(fock), fock, spin)
        n_op = a.dag() @ a
        H0 = hamiltonian_tc(mhz(0.2), mhz(0.15), mhz(0.1), fock, spin)
        phase = np.exp(1j * 0.83)
        H_real = H0 + eta_p * (a + a.dag())
        H_rot = H0 + eta_p * (phase.conjugate() * a + phase * a.dag())
        n_real = steady_state(H_real, kappa).expectation(n_op).real
        n_rot = steady_state(H_rot, kappa).expectation(n_op).real
        assert n_rot == pytest.approx(n_real, rel=1e-10)

    def test_strong_probe_rejected(self):
        eff = make_eff(1, omega=mhz(0.0), omega0=mhz(-3.0), delta=0.0,
                       lambda_r=0.0, lambda_s=0.0)
        fock, spin = FockSpace(6), SpinSpace(1)
        with pytest.raises(TruncationError):
            transmission_scan(eff, [eff.omega_eff], 3.0 * eff.kappa, fock, spin)


class TestSpecGuards:
    def test_evolve_spec_validation(self):
        with pytest.raises(ValueError):
            EvolveSpec(t_final=0.0)
        with pytest.raises(ValueError):
            EvolveSpec(t_final=1.0, rel_tol=0.0)
        with pytest.raises(ValueError):
            EvolveSpec(t_final=1.0, method="verlet")

    def test_step_budget_guard(self):
        from dickesim.errors import StepSizeUnderflow

        fock = FockSpace(4)
        H = mhz(2.0) * number(fock)
        rho0 = coherent_state(fock, 0.4)
        spec = EvolveSpec(t_final=50.0, rel_tol=1e-12, abs_tol=1e-15,
                          max_steps=5)
        with pytest.raises(StepSizeUnderflow):
            evolve(rho0, H, mhz(0.05), spec, n_samples=2)

    def test_ground_state_truncation_adequacy(self):
        # shipped cross-validation dims: the ground state leaves
        # negligible weight in the top two photon levels
        from dickesim.params import EffectiveParams

        fock, spin = FockSpace(12), SpinSpace(4)
        eff = EffectiveParams(
            omega=mhz(1.0), omega0=mhz(1.0), delta=mhz(0.05),
            lambda_r=mhz(0.3), lambda_s=mhz(0.3), omega_dS=0.0,
            Delta_r=-mhz(1e5), Delta_s=-mhz(1e5), N_lambda=4, kappa=mhz(0.07))
        from dickesim.operators import hamiltonian_dicke as hd

        H = hd(eff, fock, spin)
        vals, vecs = np.linalg.eigh(H.mat)
        rho = pure_state(vecs[:, 0], H.dims)
        pops = rho.fock_populations()
        assert pops[-2:].sum() < 1e-6
