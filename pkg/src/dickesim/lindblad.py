"""Dissipative dynamics: time evolution, steady states, transmission.

The only decay channel is photon loss at rate ``kappa`` (amplitude
convention: ``<a>`` decays at ``kappa``, photon number at ``2*kappa``)::

    drho/dt = -i [H, rho] + kappa (2 a rho a' - a'a rho - rho a'a)

Probe frame
-----------
Transmission is computed in the frame rotating at the probe.  The probe
detuning ``Delta_p`` is measured from the empty-cavity resonance; the
model frame sits ``eta`` above the empty cavity, so a probe at
``Delta_p`` appears in the model frame at ``Delta_p - eta`` and, after
the rotation (generated by ``a'a + Jz`` so the excitation-conserving
coupling stays static), shifts both the cavity and spin frequencies by
``-(Delta_p - eta)``.  The drive enters as ``eta_p (a + a')`` with a
real amplitude; only moduli are reported, so the phase convention is
unobservable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg

from .errors import (
    DimensionMismatch,
    NonStationary,
    SingularLiouvillian,
    StepSizeUnderflow,
    TruncationError,
)
from .operators import (
    DensityMatrix,
    FockSpace,
    Operator,
    SpinSpace,
    annihilation,
    hamiltonian_tc,
    lift,
    number,
)
from .params import EffectiveParams

#: Steady-state populations above this in the top Fock level abort a run.
TOP_LEVEL_POPULATION_LIMIT = 1e-4


@dataclass(frozen=True)
class ProbeConfig:
    """Weak coherent probe: drive amplitude and detuning from the empty
    cavity."""

    eta_p: float
    Delta_p: float

    def __post_init__(self) -> None:
        if self.eta_p < 0.0:
            raise ValueError("eta_p must be >= 0")


@dataclass(frozen=True)
class EvolveSpec:
    """Integration control for quantum and mean-field trajectories."""

    t_final: float
    dt_initial: float = 1e-3
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    method: str = "adaptive"  # "adaptive" (embedded 5(4)) or "rk4"
    max_steps: int = 20_000_000

    def __post_init__(self) -> None:
        if self.t_final <= 0.0:
            raise ValueError("t_final must be positive")
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.method not in ("adaptive", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")


@lru_cache(maxsize=32)
def _cached_annihilation(dims: tuple[int, ...]) -> np.ndarray:
    if len(dims) == 1:
        return annihilation(FockSpace(dims[0] - 1)).mat
    fock = FockSpace(dims[0] - 1)
    spin = SpinSpace(dims[1] - 1)
    return lift(annihilation(fock), fock, spin).mat


def liouvillian_apply(H: Operator, kappa: float, rho: DensityMatrix | np.ndarray) -> np.ndarray:
    """Right-hand side ``-i[H, rho] + kappa (2 a rho a' - {a'a, rho})``."""
    rho_mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if rho_mat.shape != H.mat.shape:
        raise DimensionMismatch(
            f"state shape {rho_mat.shape} vs Hamiltonian {H.mat.shape}"
        )
    a = _cached_annihilation(H.dims)
    ad = a.conj().T
    n_op = ad @ a
    out = -1j * (H.mat @ rho_mat - rho_mat @ H.mat)
    out += kappa * (2.0 * (a @ rho_mat @ ad) - n_op @ rho_mat - rho_mat @ n_op)
    return out


def liouvillian_matrix(H: Operator, kappa: float) -> sparse.csr_matrix:
    """Sparse matrix acting on the row-major vectorized density matrix."""
    Hs = sparse.csr_matrix(H.mat)
    a = sparse.csr_matrix(_cached_annihilation(H.dims))
    ad = a.conj().T
    n_op = (ad @ a).tocsr()
    d = H.dim
    eye = sparse.identity(d, format="csr")
    L = -1j * (sparse.kron(Hs, eye) - sparse.kron(eye, Hs.T))
    L = L + kappa * (
        2.0 * sparse.kron(a, a.conj())
        - sparse.kron(n_op, eye)
        - sparse.kron(eye, n_op.T)
    )
    return L.tocsr()


# Dormand-Prince 5(4) tableau, shared by the quantum and mean-field
# integrators.
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)
_MIN_STEP_FACTOR = 1e-12


@dataclass
class EvolveResult:
    """Sampled trajectory of an open-system evolution."""

    times: np.ndarray
    expectations: dict[str, np.ndarray]
    final_state: DensityMatrix
    trace_drift: float
    states: list[DensityMatrix] | None = None


def evolve(rho0: DensityMatrix, H: Operator, kappa: float, spec: EvolveSpec,
           observables: dict[str, Operator] | None = None,
           n_samples: int = 101, keep_states: bool = False,
           truncation_limit: float | None = TOP_LEVEL_POPULATION_LIMIT) -> EvolveResult:
    """Integrate the master equation and sample observables.

    The state is re-symmetrized after every accepted step; trace drift
    is monitored and reported.  The adaptive method rejects steps whose
    embedded error estimate exceeds the tolerances.

    Raises
    ------
    TruncationError
        If the top Fock level accumulates more population than
        ``truncation_limit`` at any sample time.
    StepSizeUnderflow
        If the adaptive step collapses.
    """
    if rho0.dims != H.dims:
        raise DimensionMismatch(f"state dims {rho0.dims} vs H {H.dims}")
    observables = observables or {}
    sample_times = np.linspace(0.0, spec.t_final, n_samples)
    obs_mats = {name: op.mat for name, op in observables.items()}
    for name, op in observables.items():
        if op.dims != rho0.dims:
            raise DimensionMismatch(f"observable {name!r} dims {op.dims}")

    rho = rho0.mat.copy()
    trace0 = np.trace(rho).real

    def rhs(r: np.ndarray) -> np.ndarray:
        return liouvillian_apply(H, kappa, r)

    records: dict[str, list[float]] = {name: [] for name in obs_mats}
    states: list[DensityMatrix] = []
    max_trace_dev = 0.0

    def take_sample(r: np.ndarray) -> None:
        nonlocal max_trace_dev
        max_trace_dev = max(max_trace_dev, abs(np.trace(r).real - trace0))
        if truncation_limit is not None:
            top = _top_fock_population(r, rho0.dims)
            if top > truncation_limit:
                raise TruncationError(
                    f"top Fock level population {top:.3g} exceeds "
                    f"{truncation_limit:.3g}; raise n_max"
                )
        for name, mat in obs_mats.items():
            records[name].append(np.trace(mat @ r).real)
        if keep_states:
            states.append(DensityMatrix(_symmetrize(r), rho0.dims, validate=False))

    take_sample(rho)
    t = 0.0
    h = min(spec.dt_initial, spec.t_final)
    steps = 0
    for target in sample_times[1:]:
        while t < target - 1e-14 * spec.t_final:
            h = min(h, target - t)
            if spec.method == "rk4":
                rho = _rk4_step(rhs, rho, h)
                t += h
                h = spec.dt_initial
            else:
                rho, t, h = _dp_step(rhs, rho, t, h, spec)
            rho = _symmetrize(rho)
            steps += 1
            if steps > spec.max_steps:
                raise StepSizeUnderflow("step budget exhausted")
        take_sample(rho)

    final = DensityMatrix(_symmetrize(rho), rho0.dims, validate=False)
    return EvolveResult(
        times=sample_times,
        expectations={k: np.array(v) for k, v in records.items()},
        final_state=final,
        trace_drift=max_trace_dev,
        states=states if keep_states else None,
    )


def _symmetrize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def _top_fock_population(rho: np.ndarray, dims: tuple[int, ...]) -> float:
    pops = np.diag(rho).real
    if len(dims) == 1:
        return float(pops[-1])
    nf, ns = dims
    return float(pops.reshape(nf, ns)[-1].sum())


def _rk4_step(rhs, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dp_step(rhs, y: np.ndarray, t: float, h: float, spec: EvolveSpec):
    """One accepted Dormand-Prince step with PI-free step control."""
    scale_norm = np.linalg.norm(y)
    h_floor = _MIN_STEP_FACTOR * max(spec.t_final, 1.0)
    while True:
        if h < h_floor:
            raise StepSizeUnderflow(f"step size {h:.3g} underflowed at t={t:.6g}")
        k = [rhs(y)]
        for i in range(1, 6):
            yi = y
            for aij, kj in zip(_DP_A[i], k):
                yi = yi + h * aij * kj
            k.append(rhs(yi))
        y5 = y
        for b, kj in zip(_DP_B5, k):
            y5 = y5 + h * b * kj
        k.append(rhs(y5))
        y4 = y
        for b, kj in zip(_DP_B4, k):
            y4 = y4 + h * b * kj
        err = np.linalg.norm(y5 - y4)
        tol = spec.abs_tol + spec.rel_tol * max(scale_norm, np.linalg.norm(y5))
        if err <= tol:
            t_new = t + h
            factor = 0.9 * (tol / err) ** 0.2 if err > 0.0 else 5.0
            return y5, t_new, h * min(5.0, max(0.2, factor))
        h *= max(0.2, 0.9 * (tol / err) ** 0.2)


def steady_state(H: Operator, kappa: float, *, tol: float = 1e-9,
                 method: str = "auto",
                 truncation_limit: float | None = TOP_LEVEL_POPULATION_LIMIT) -> DensityMatrix:
    """Stationary state of the master equation, unit trace.

    Solves the vectorized linear problem directly: one row of the
    Liouvillian is replaced by the trace functional and the sparse LU
    factorization is refined iteratively until the residual
    ``||L rho||`` falls below ``tol``.  ``method="evolve"`` instead
    relaxes an initial state until stationary (used as a mutual oracle
    and as a fallback for very large systems).

    Raises
    ------
    SingularLiouvillian
        If the factorization fails or the residual will not converge;
        a degenerate stationary manifold is reported, never averaged
        over.
    """
    if method not in ("auto", "direct", "evolve"):
        raise ValueError(f"unknown method {method!r}")
    if method == "evolve":
        return _steady_state_by_evolution(H, kappa, tol, truncation_limit)
    try:
        return _steady_state_direct(H, kappa, tol, truncation_limit)
    except MemoryError:
        if method == "direct":
            raise
        return _steady_state_by_evolution(H, kappa, tol, truncation_limit)


def _steady_state_direct(H: Operator, kappa: float, tol: float,
                         truncation_limit: float | None) -> DensityMatrix:
    d = H.dim
    L = liouvillian_matrix(H, kappa)
    # Replace the (0,0)-element row with the trace condition; that row is
    # implied by trace preservation, so the system stays consistent.
    L_mod = L.tolil()
    trace_cols = [i * d + i for i in range(d)]
    L_mod.rows[0] = trace_cols
    L_mod.data[0] = [1.0] * d
    L_mod = L_mod.tocsc()
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    try:
        lu = sparse_linalg.splu(L_mod)
        x = lu.solve(b)
    except (RuntimeError, ValueError) as exc:
        raise SingularLiouvillian(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularLiouvillian("factorization produced non-finite solution")
    # Iterative refinement against the *modified* system, then check the
    # physical residual on the raw Liouvillian.
    for _ in range(3):
        resid = b - L_mod @ x
        if np.linalg.norm(resid) < 0.1 * tol:
            break
        x = x + lu.solve(resid)
    rho = x.reshape(d, d)
    rho = _symmetrize(rho)
    rho = rho / np.trace(rho).real
    residual = np.linalg.norm(L @ rho.reshape(-1))
    if not np.isfinite(residual) or residual > max(tol, 1e-12 * _liouvillian_scale(H, kappa)):
        raise SingularLiouvillian(
            f"steady-state residual {residual:.3g} exceeds tolerance {tol:.3g}; "
            "the stationary manifold may be degenerate"
        )
    if truncation_limit is not None:
        top = _top_fock_population(rho, H.dims)
        if top > truncation_limit:
            raise TruncationError(
                f"steady-state top Fock population {top:.3g} exceeds "
                f"{truncation_limit:.3g}; raise n_max"
            )
    return DensityMatrix(rho, H.dims, validate=False)


def _liouvillian_scale(H: Operator, kappa: float) -> float:
    return float(np.linalg.norm(H.mat)) + abs(kappa) * H.dim


def _steady_state_by_evolution(H: Operator, kappa: float, tol: float,
                               truncation_limit: float | None) -> DensityMatrix:
    d = H.dim
    scale = max(_liouvillian_scale(H, kappa), 1.0)
    if kappa <= 0.0:
        raise SingularLiouvillian("undamped system has no unique steady state")
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    t_chunk = 4.0 / kappa
    # integration noise sets the reachable residual floor; track the target
    rel_tol = min(1e-9, max(1e-12, 0.01 * tol))
    spec = EvolveSpec(t_final=t_chunk, rel_tol=rel_tol, abs_tol=1e-3 * rel_tol)
    state = DensityMatrix(rho, H.dims, validate=False)
    for _ in range(60):
        # transients may brush the ladder top; only the final state is
        # held to the truncation policy
        result = evolve(state, H, kappa, spec, n_samples=2,
                        truncation_limit=None)
        state = result.final_state
        residual = np.linalg.norm(liouvillian_apply(H, kappa, state.mat))
        if residual < max(tol, 1e-11 * scale):
            mat = state.mat / np.trace(state.mat).real
            if truncation_limit is not None:
                top = _top_fock_population(mat, H.dims)
                if top > truncation_limit:
                    raise TruncationError(
                        f"steady-state top Fock population {top:.3g} exceeds "
                        f"{truncation_limit:.3g}; raise n_max"
                    )
            return DensityMatrix(mat, H.dims, validate=False)
    raise NonStationary(
        f"relaxation did not reach residual {tol:.3g} within the time cap"
    )


@dataclass(frozen=True)
class TransmissionPoint:
    Delta_p: float
    n_ss: float
    n_empty: float

    @property
    def normalized(self) -> float:
        return self.n_ss / self.n_empty


def empty_cavity_peak(eta_p: float, kappa: float, fock: FockSpace,
                      steady_kwargs: dict | None = None) -> float:
    """Resonant photon number of the driven empty cavity.

    Solved on the bare photon space; agrees with the closed form
    ``eta_p**2 / kappa**2`` in the weak-drive limit and serves as the
    normalization scale for transmission scans.
    """
    steady_kwargs = steady_kwargs or {}
    a_bare = annihilation(fock)
    H_empty = eta_p * (a_bare + a_bare.dag())
    rho = steady_state(H_empty, kappa, **steady_kwargs)
    return rho.expectation(number(fock)).real


def transmission_scan(eff: EffectiveParams, probe_detunings,
                      eta_p: float, fock: FockSpace, spin: SpinSpace,
                      frame_offset: float = 0.0,
                      steady_kwargs: dict | None = None) -> list[TransmissionPoint]:
    """Steady-state photon number against probe detuning.

    At each detuning the excitation-conserving Hamiltonian is built in
    the probe frame (see module docstring), driven with ``eta_p (a+a')``
    and solved for its stationary state.  Photon numbers are normalized
    by the resonant transmission of the empty cavity, so an uncoupled
    scan is a unit-height Lorentzian of half width ``kappa`` centred on
    the shifted resonance.

    Raises
    ------
    TruncationError
        If the weak-probe condition ``n_ss < 0.1 n_max`` is violated.
    """
    steady_kwargs = steady_kwargs or {}
    omega_cav = eff.omega_eff  # model-frame cavity frequency
    a_comp = lift(annihilation(fock), fock, spin)
    drive_comp = eta_p * (a_comp + a_comp.dag())
    n_comp = a_comp.dag() @ a_comp
    n_empty = empty_cavity_peak(eta_p, eff.kappa, fock, steady_kwargs)

    points = []
    for Delta_p in probe_detunings:
        d_frame = Delta_p - frame_offset
        H = hamiltonian_tc(omega_cav - d_frame, eff.omega0 - d_frame,
                           eff.lambda_r, fock, spin) + drive_comp
        rho = steady_state(H, eff.kappa, **steady_kwargs)
        n_ss = rho.expectation(n_comp).real
        if n_ss > 0.1 * fock.n_max:
            raise TruncationError(
                f"probe too strong: n_ss = {n_ss:.3g} at Delta_p = "
                f"{Delta_p:.4g} exceeds 0.1 * n_max"
            )
        points.append(TransmissionPoint(Delta_p=Delta_p, n_ss=n_ss,
                                        n_empty=n_empty))
    return points
