"""Parameter-mapping algebra: detunings, light shifts, couplings,
critical coupling and the calibration chain."""

import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dickesim import params
from dickesim.errors import (
    DegenerateDetuning,
    NegativePower,
    OutsideValidity,
    SignMismatch,
)
from dickesim.params import PhysicalConfig, PowerCalibration
from dickesim.units import TWO_PI, mhz, to_mhz


def base_cfg(**kwargs) -> PhysicalConfig:
    defaults_ = dict(
        g=mhz(1.1), kappa=mhz(0.07), gamma=mhz(3.0), Delta_c=mhz(-127e3),
        omega_hf=mhz(6834.7), omega_Z=mhz(4.0), N_total=119282,
    )
    defaults_.update(kwargs)
    return PhysicalConfig(**defaults_)


class TestDetunings:
    def test_all_offsets_vanish(self):
        cfg = base_cfg(omega_hf=mhz(1e-6), omega_Z=mhz(1e-9))
        # hyperfine and Zeeman scales collapsed toward zero: both beams
        # sit at the cavity detuning
        d_r, d_s = params.derive_detunings(cfg)
        assert d_r == pytest.approx(cfg.Delta_c, rel=1e-6)
        assert d_s == pytest.approx(cfg.Delta_c, rel=1e-6)

    def test_reference_values(self):
        # hand evaluation: Delta_r = -(127000 + 12) MHz,
        # Delta_s = -(127000 - 6834.7) MHz
        d_r, d_s = params.derive_detunings(base_cfg())
        assert to_mhz(d_r) == pytest.approx(-127012.0, abs=1e-9)
        assert to_mhz(d_s) == pytest.approx(-120165.3, abs=1e-9)

    def test_detuning_ratio_matches_coupling_asymmetry(self):
        d_r, d_s = params.derive_detunings(base_cfg())
        ratio = (d_r - d_s) / (d_r + d_s)
        assert ratio == pytest.approx(0.0277, abs=0.0005)

    @given(eta=st.floats(-10.0, 10.0), zeta=st.floats(-80.0, 80.0))
    def test_offsets_enter_linearly(self, eta, zeta):
        cfg0 = base_cfg()
        cfg = base_cfg(eta=mhz(eta), zeta=mhz(zeta))
        d_r0, d_s0 = params.derive_detunings(cfg0)
        d_r, d_s = params.derive_detunings(cfg)
        assert d_r - d_r0 == pytest.approx(mhz(eta) - mhz(zeta), abs=1e-9)
        assert d_s - d_s0 == pytest.approx(mhz(eta) + mhz(zeta), abs=1e-9)


class TestDifferentialStarkShift:
    def test_no_light_no_shift(self):
        assert params.differential_stark_shift(base_cfg()) == 0.0

    def test_symmetric_configuration_cancels_exactly(self):
        # equal Rabi frequencies and equal beam detunings cancel term
        # by term; realized by zeroing the splitting between the beams
        cfg = base_cfg(Omega_r=mhz(500.0), Omega_s=mhz(500.0))
        d_r, d_s = params.derive_detunings(cfg)
        cfg = replace(cfg, zeta=(d_r - d_s) / 2.0 + cfg.zeta)
        d_r2, d_s2 = params.derive_detunings(cfg)
        assert d_r2 == pytest.approx(d_s2, abs=1e-6)
        assert params.differential_stark_shift(cfg) == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_detuning_raises(self):
        cfg = base_cfg(Delta_c=mhz(-6834.7), Omega_r=mhz(1.0))
        # Delta_s = Delta_c + omega_hf = 0 within the floor
        with pytest.raises(DegenerateDetuning):
            params.differential_stark_shift(cfg)

    def test_single_beam_value_at_anchor(self, splitting_cfg):
        # frozen from the calibration chain: single coupling beam at
        # 18 mW gives a small negative shift
        shift = params.differential_stark_shift(splitting_cfg)
        assert to_mhz(shift) == pytest.approx(-0.0530, abs=0.0005)

    def test_quadratic_in_rabi_frequency(self):
        cfg1 = base_cfg(Omega_r=mhz(100.0))
        cfg2 = base_cfg(Omega_r=mhz(200.0))
        s1 = params.differential_stark_shift(cfg1)
        s2 = params.differential_stark_shift(cfg2)
        assert s2 == pytest.approx(4.0 * s1, rel=1e-12)


class TestEffectiveParams:
    def test_couplings_off(self):
        cfg = base_cfg(zeta=mhz(3.0))
        eff = params.effective_params(cfg)
        assert eff.lambda_r == 0.0 and eff.lambda_s == 0.0
        assert eff.omega_dS == 0.0
        assert eff.omega0 == pytest.approx(-(cfg.zeta + 3.0 * cfg.omega_Z),
                                           rel=1e-12)

    def test_asymmetry_identity_at_equal_rabi(self):
        cfg = base_cfg(Omega_r=mhz(700.0), Omega_s=mhz(700.0))
        eff = params.effective_params(cfg)
        d_r, d_s = params.derive_detunings(cfg)
        assert eff.coupling_asymmetry == pytest.approx(
            (d_r - d_s) / (d_r + d_s), rel=1e-12)
        assert eff.coupling_asymmetry == pytest.approx(0.028, abs=0.002)

    def test_calibrated_coupling_magnitude(self, splitting_cfg):
        eff = params.effective_params(splitting_cfg)
        assert abs(to_mhz(eff.lambda_r)) == pytest.approx(0.173, rel=2e-4)
        assert eff.lambda_r < 0.0  # negative detuning keeps the sign

    def test_cavity_frequency_identity(self, splitting_cfg):
        # omega - delta/2 equals the dispersive shift minus the frame
        # offset, exactly
        eff = params.effective_params(splitting_cfg)
        omega_d = params.dispersive_shift(splitting_cfg.N_total, splitting_cfg)
        assert eff.omega_eff == pytest.approx(omega_d - splitting_cfg.eta,
                                              rel=1e-12)

    @given(scale=st.floats(0.1, 10.0))
    def test_unit_rescaling_covariance(self, scale):
        # rescaling every angular frequency rescales every output
        # frequency by the same factor and fixes the counts
        cfg = base_cfg(Omega_r=mhz(600.0), Omega_s=mhz(550.0), zeta=mhz(-11.0))
        scaled = PhysicalConfig(
            g=cfg.g * scale, kappa=cfg.kappa * scale, gamma=cfg.gamma * scale,
            Delta_c=cfg.Delta_c * scale, omega_hf=cfg.omega_hf * scale,
            omega_Z=cfg.omega_Z * scale, eta=cfg.eta * scale,
            zeta=cfg.zeta * scale, Omega_r=cfg.Omega_r * scale,
            Omega_s=cfg.Omega_s * scale, N_total=cfg.N_total,
        )
        eff = params.effective_params(cfg)
        eff_s = params.effective_params(scaled, floor=params.DENOMINATOR_FLOOR * scale)
        for name in ("omega", "omega0", "delta", "lambda_r", "lambda_s",
                     "omega_dS", "kappa"):
            assert getattr(eff_s, name) == pytest.approx(
                getattr(eff, name) * scale, rel=1e-9, abs=1e-12 * scale)
        assert eff_s.N_lambda == eff.N_lambda


class TestCriticalCoupling:
    def test_undamped_closed_form(self):
        lam_c = params.critical_coupling_from(mhz(1.3), mhz(0.7), 0.0)
        assert lam_c == pytest.approx(math.sqrt(mhz(1.3) * mhz(0.7)) / 2.0,
                                      rel=1e-12)

    def test_symmetric_resonant_point(self):
        lam_c = params.critical_coupling_from(mhz(0.9), mhz(0.9), 0.0)
        assert lam_c == pytest.approx(mhz(0.9) / 2.0, rel=1e-12)

    def test_reference_arithmetic(self):
        # 0.5 * sqrt((1.0/0.5) * (0.07^2 + 0.5^2)) in ordinary MHz
        lam_c = params.critical_coupling_from(mhz(1.0), mhz(0.5), mhz(0.07))
        assert to_mhz(lam_c) == pytest.approx(0.3570014, abs=1e-6)

    def test_global_sign_flip_is_identity(self):
        plus = params.critical_coupling_from(mhz(1.0), mhz(0.5), mhz(0.07))
        minus = params.critical_coupling_from(-mhz(1.0), -mhz(0.5), mhz(0.07))
        assert plus == minus

    def test_mixed_signs_rejected(self):
        with pytest.raises(OutsideValidity):
            params.critical_coupling_from(mhz(1.0), -mhz(0.5), mhz(0.07))
        with pytest.raises(OutsideValidity):
            params.critical_coupling_from(0.0, mhz(0.5), mhz(0.07))

    @given(kappa=st.floats(0.01, 0.5), kappa2=st.floats(0.01, 0.5),
           omega0=st.floats(0.05, 3.0), omega02=st.floats(0.05, 3.0))
    def test_monotone_in_kappa_and_omega0(self, kappa, kappa2, omega0, omega02):
        omega_eff = mhz(0.8)
        k_lo, k_hi = sorted((mhz(kappa), mhz(kappa2)))
        w_lo, w_hi = sorted((mhz(omega0), mhz(omega02)))
        assert (params.critical_coupling_from(w_lo, omega_eff, k_lo)
                <= params.critical_coupling_from(w_lo, omega_eff, k_hi))
        assert (params.critical_coupling_from(w_lo, omega_eff, k_lo)
                <= params.critical_coupling_from(w_hi, omega_eff, k_lo))


class TestDispersiveShiftAndAtoms:
    def test_empty_cavity(self):
        assert params.dispersive_shift(0, base_cfg()) == 0.0
        assert params.atoms_from_shift(0.0, base_cfg()) == 0

    def test_linearity(self):
        cfg = base_cfg()
        one = params.dispersive_shift(1000, cfg)
        two = params.dispersive_shift(2000, cfg)
        assert two == pytest.approx(2.0 * one, rel=1e-12)

    def test_anchor_inversion(self):
        # hand inversion of the shift relation at the anchor
        cfg = base_cfg()
        n = params.atoms_from_shift(mhz(-0.5), cfg)
        assert 1.0e5 <= n <= 1.4e5
        assert n < 2.0e5
        assert n == 119282

    @given(n=st.integers(1, 200_000))
    def test_round_trip_within_one_atom(self, n):
        cfg = base_cfg()
        shift = params.dispersive_shift(n, cfg)
        assert params.atoms_from_shift(shift, cfg) == n

    @given(shift_mhz=st.floats(-0.9, -1e-4))
    def test_shift_round_trip_within_one_atom_quantum(self, shift_mhz):
        cfg = base_cfg()
        shift = mhz(shift_mhz)
        back = params.dispersive_shift(params.atoms_from_shift(shift, cfg), cfg)
        quantum = abs(params.dispersive_shift(1, cfg))
        assert abs(back - shift) <= quantum

    def test_sign_mismatch_raises(self):
        with pytest.raises(SignMismatch):
            params.atoms_from_shift(mhz(0.5), base_cfg())


class TestPowerCalibration:
    def test_zero_power(self):
        calib = PowerCalibration(c_rabi=mhz(200.0))
        assert params.rabi_from_power(0.0, calib) == 0.0

    def test_negative_power_raises(self):
        with pytest.raises(NegativePower):
            params.rabi_from_power(-1.0, PowerCalibration(c_rabi=1.0))

    @given(power=st.floats(0.001, 100.0))
    def test_square_root_law(self, power):
        calib = PowerCalibration(c_rabi=mhz(150.0))
        assert params.rabi_from_power(4.0 * power, calib) == pytest.approx(
            2.0 * params.rabi_from_power(power, calib), rel=1e-12)

    def test_anchor_closes_the_loop(self, calibration):
        # 18 mW in the coupling beam must reproduce the measured
        # coupling magnitude through the effective-parameter map
        cfg = base_cfg().with_powers(calibration, 18.0, 0.0)
        eff = params.effective_params(cfg)
        assert abs(to_mhz(eff.lambda_r)) == pytest.approx(0.173, rel=1e-9)

    def test_shipped_constant_matches_fresh_calibration(self, calibration):
        assert calibration.c_rabi / TWO_PI == pytest.approx(209.7293867105,
                                                            rel=1e-10)


class TestScatteringRate:
    def test_dark_is_zero(self):
        assert params.scattering_rate_estimate(base_cfg()) == 0.0

    def test_linear_in_power(self, calibration):
        cfg1 = base_cfg().with_powers(calibration, 9.0, 9.0)
        cfg2 = base_cfg().with_powers(calibration, 18.0, 18.0)
        r1 = params.scattering_rate_estimate(cfg1)
        r2 = params.scattering_rate_estimate(cfg2)
        assert r2 == pytest.approx(2.0 * r1, rel=1e-12)

    def test_reference_band(self, calibration):
        # 18 mW in each beam: order-of-magnitude diagnostic lands in the
        # expected band
        cfg = base_cfg().with_powers(calibration, 18.0, 18.0)
        rate = params.scattering_rate_estimate(cfg)
        assert 0.3 <= rate <= 0.8


class TestInvariantsChecks:
    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            base_cfg(g=0.0)
        with pytest.raises(ValueError):
            base_cfg(alpha=1.5)
        with pytest.raises(ValueError):
            base_cfg(N_total=0)
        with pytest.raises(ValueError):
            PowerCalibration(c_rabi=0.0)

    def test_n_lambda_rounding(self):
        assert base_cfg(N_total=7).N_lambda == 2
        assert base_cfg(N_total=2, f_lambda=0.1).N_lambda == 1
