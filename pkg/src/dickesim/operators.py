"""Truncated composite Hilbert space and the model operators.

The composite space is a truncated photon Fock space tensored with the
fully symmetric (maximal angular momentum) sector of the collective
spin, dimension ``(n_max + 1) * (N_lambda + 1)``.  Kronecker products
are Fock-major: the photon index is the slow one, and every tensor
embedding must go through :func:`tensor` or :func:`lift` so the
ordering stays consistent across modules.

Operators are dense complex matrices with dimension metadata; they are
immutable after construction and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .params import EffectiveParams

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9


@dataclass(frozen=True)
class FockSpace:
    """Photon space truncated at ``n_max`` (dimension ``n_max + 1``)."""

    n_max: int

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class SpinSpace:
    """Symmetric collective-spin sector for ``n_atoms`` two-level atoms.

    Fixed maximal spin ``j = n_atoms / 2``; basis ordered by the
    projection quantum number ``m = -j .. +j``.
    """

    n_atoms: int

    def __post_init__(self) -> None:
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be at least 1")

    @property
    def j(self) -> float:
        return 0.5 * self.n_atoms

    @property
    def dim(self) -> int:
        return self.n_atoms + 1


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix tagged with its factor dimensions."""

    mat: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        mat = np.asarray(self.mat, dtype=complex)
        object.__setattr__(self, "mat", mat)
        d = int(np.prod(self.dims))
        if mat.shape != (d, d):
            raise DimensionMismatch(
                f"matrix shape {mat.shape} does not match dims {self.dims}"
            )
        mat.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def _require_same_dims(self, other: "Operator") -> None:
        if self.dims != other.dims:
            raise DimensionMismatch(f"dims {self.dims} vs {other.dims}")

    def __add__(self, other: "Operator") -> "Operator":
        self._require_same_dims(other)
        return Operator(self.mat + other.mat, self.dims)

    def __sub__(self, other: "Operator") -> "Operator":
        self._require_same_dims(other)
        return Operator(self.mat - other.mat, self.dims)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(scalar * self.mat, self.dims)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(-self.mat, self.dims)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._require_same_dims(other)
        return Operator(self.mat @ other.mat, self.dims)

    def dag(self) -> "Operator":
        return Operator(self.mat.conj().T, self.dims)

    def norm(self) -> float:
        """Frobenius norm; the tolerance scale for algebra identities."""
        return float(np.linalg.norm(self.mat))

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return bool(np.linalg.norm(self.mat - self.mat.conj().T) < tol * max(1.0, self.norm()))

    def dump(self, path) -> None:
        """Write the matrix as a text dump: dims header, then row-major
        whitespace-separated real/imaginary pairs, one row per line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("operator dims=" + "x".join(str(d) for d in self.dims) + "\n")
            for row in self.mat:
                fh.write(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row) + "\n")

    @staticmethod
    def load(path) -> "Operator":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("operator dims="):
                raise ValueError(f"not an operator dump: {header!r}")
            dims = tuple(int(t) for t in header.split("=", 1)[1].split("x"))
            d = int(np.prod(dims))
            mat = np.empty((d, d), dtype=complex)
            for i in range(d):
                vals = np.array(fh.readline().split(), dtype=float)
                mat[i] = vals[0::2] + 1j * vals[1::2]
        return Operator(mat, dims)


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def identity(space: FockSpace | SpinSpace) -> Operator:
    return Operator(np.eye(space.dim, dtype=complex), (space.dim,))


def annihilation(space: FockSpace) -> Operator:
    """Photon annihilation operator on the truncated basis."""
    mat = np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), k=1)
    return Operator(mat.astype(complex), (space.dim,))


def number(space: FockSpace) -> Operator:
    return Operator(np.diag(np.arange(space.dim, dtype=complex)), (space.dim,))


def collective_ops(space: SpinSpace) -> tuple[Operator, Operator, Operator]:
    """Collective raising, lowering and projection operators.

    In the ``|j, m>`` basis (ascending ``m``)::

        J_z |j,m> = m |j,m>
        J_+- |j,m> = sqrt(j(j+1) - m(m+-1)) |j,m+-1>

    They satisfy ``[J_+, J_-] = 2 J_z`` and ``[J_+-, J_z] = -+ J_+-``.
    """
    j = space.j
    m = np.arange(-j, j + 1.0)
    jz = np.diag(m.astype(complex))
    raise_elems = np.sqrt(j * (j + 1.0) - m[:-1] * (m[:-1] + 1.0))
    jp = np.diag(raise_elems.astype(complex), k=-1)
    dims = (space.dim,)
    J_plus = Operator(jp, dims)
    return J_plus, J_plus.dag(), Operator(jz, dims)


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product with the first factor as the slow index."""
    return Operator(np.kron(a.mat, b.mat), a.dims + b.dims)


def lift(op: Operator, fock: FockSpace, spin: SpinSpace) -> Operator:
    """Embed a single-factor operator into the composite space."""
    if op.dims == (fock.dim,):
        return tensor(op, identity(spin))
    if op.dims == (spin.dim,):
        return tensor(identity(fock), op)
    if op.dims == (fock.dim, spin.dim):
        return op
    raise DimensionMismatch(
        f"operator dims {op.dims} fit neither factor ({fock.dim}, {spin.dim})"
    )


def _composite_parts(eff: EffectiveParams, fock: FockSpace, spin: SpinSpace):
    if spin.n_atoms != eff.N_lambda:
        raise DimensionMismatch(
            f"spin space holds {spin.n_atoms} atoms but parameters expect "
            f"{eff.N_lambda}"
        )
    a = lift(annihilation(fock), fock, spin)
    jp, jm, jz = (lift(op, fock, spin) for op in collective_ops(spin))
    return a, jp, jm, jz


def hamiltonian_general(eff: EffectiveParams, fock: FockSpace,
                        spin: SpinSpace) -> Operator:
    """Full two-coupling model Hamiltonian.

    ``H = omega a'a + omega0 Jz + (delta/N) a'a Jz
    + (lambda_r/sqrt(N)) (a J+ + a' J-)
    + (lambda_s/sqrt(N)) (a' J+ + a J-)``
    """
    a, jp, jm, jz = _composite_parts(eff, fock, spin)
    ad = a.dag()
    n_op = ad @ a
    root_n = np.sqrt(eff.N_lambda)
    return (
        eff.omega * n_op
        + eff.omega0 * jz
        + (eff.delta / eff.N_lambda) * (n_op @ jz)
        + (eff.lambda_r / root_n) * (a @ jp + ad @ jm)
        + (eff.lambda_s / root_n) * (ad @ jp + a @ jm)
    )


def hamiltonian_dicke(eff: EffectiveParams, fock: FockSpace,
                      spin: SpinSpace) -> Operator:
    """Single-coupling form ``(lambda/sqrt(N)) (a + a')(J+ + J-)``.

    Uses the mean of the two couplings; exact when they coincide.
    """
    a, jp, jm, jz = _composite_parts(eff, fock, spin)
    ad = a.dag()
    n_op = ad @ a
    lam = 0.5 * (eff.lambda_r + eff.lambda_s)
    return (
        eff.omega * n_op
        + eff.omega0 * jz
        + (eff.delta / eff.N_lambda) * (n_op @ jz)
        + (lam / np.sqrt(eff.N_lambda)) * ((a + ad) @ (jp + jm))
    )


def hamiltonian_tc(omega_cav: float, omega0: float, lambda_r: float,
                   fock: FockSpace, spin: SpinSpace) -> Operator:
    """Excitation-conserving model; commutes with ``a'a + Jz``."""
    a = lift(annihilation(fock), fock, spin)
    jp, jm, jz = (lift(op, fock, spin) for op in collective_ops(spin))
    ad = a.dag()
    return (
        omega_cav * (ad @ a)
        + omega0 * jz
        + (lambda_r / np.sqrt(spin.n_atoms)) * (a @ jp + ad @ jm)
    )


def parity_operator(fock: FockSpace, spin: SpinSpace) -> Operator:
    """Excitation parity ``exp(i pi (a'a + Jz + j))``; squares to one."""
    n_ph = np.arange(fock.dim)
    m_shift = np.arange(spin.dim)  # m + j, integer
    diag = ((-1.0) ** np.add.outer(n_ph, m_shift)).reshape(-1)
    return Operator(np.diag(diag.astype(complex)), (fock.dim, spin.dim))


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix over a composite (or single) space."""

    mat: np.ndarray
    dims: tuple[int, ...]
    validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        mat = np.asarray(self.mat, dtype=complex)
        object.__setattr__(self, "mat", mat)
        d = int(np.prod(self.dims))
        if mat.shape != (d, d):
            raise DimensionMismatch(
                f"matrix shape {mat.shape} does not match dims {self.dims}"
            )
        if self.validate:
            herm = np.linalg.norm(mat - mat.conj().T)
            if herm > HERMITICITY_TOL * max(1.0, np.linalg.norm(mat)):
                raise ValueError(f"not Hermitian: deviation {herm:.3g}")
            tr = np.trace(mat).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"trace {tr!r} differs from 1")
            evals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
            if evals.min() < -POSITIVITY_TOL:
                raise ValueError(f"negative eigenvalue {evals.min():.3g}")
        mat.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def expectation(self, op: Operator) -> complex:
        if op.dims != self.dims:
            raise DimensionMismatch(f"dims {op.dims} vs {self.dims}")
        return complex(np.trace(op.mat @ self.mat))

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)

    def fock_populations(self) -> np.ndarray:
        """Photon-number distribution (traces out the spin factor)."""
        if len(self.dims) == 1:
            return np.diag(self.mat).real.copy()
        nf, ns = self.dims
        pops = np.diag(self.mat).real.reshape(nf, ns)
        return pops.sum(axis=1)


def pure_state(vec: np.ndarray, dims: tuple[int, ...]) -> DensityMatrix:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return DensityMatrix(np.outer(vec, vec.conj()), dims)


def ground_product_state(fock: FockSpace, spin: SpinSpace) -> DensityMatrix:
    """Vacuum photon state with every spin down (``m = -j``)."""
    vec = np.zeros(fock.dim * spin.dim)
    vec[0] = 1.0
    return pure_state(vec, (fock.dim, spin.dim))


def coherent_state(fock: FockSpace, amp: complex) -> DensityMatrix:
    """Truncated coherent state on the bare photon space."""
    vec = np.zeros(fock.dim, dtype=complex)
    vec[0] = 1.0
    if amp != 0:
        n = np.arange(fock.dim)
        log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, fock.dim)))))
        vec = np.exp(n * np.log(complex(amp)) - 0.5 * log_fact)
    return pure_state(vec, (fock.dim,))
