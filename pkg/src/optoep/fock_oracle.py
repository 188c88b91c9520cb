"""Brute-force truncated-Fock validation of the analytic results.

Everything here is built from explicit ladder-operator matrices, without any
of the closed forms, so it can serve as an independent oracle.

Conventions
-----------
* Physical basis index ``k = n_a * n_b_max + n_b``.
* Row-major vectorisation ``rho_ij -> i * D + j``: the left factor is the
  physical copy, the right factor the tilde copy. Then
  ``vec(A rho B) = (A kron B^T) vec(rho)``, so right multiplication by ``a``
  acts as ``a~^dag`` on the tilde factor.
* The "interior" of the doubled space is every basis state whose four
  occupations are all ``<= n_max - 2``; quadratic ladder products are exact
  there despite the truncation.

Only small thermal occupations are representable. The analytic moments are
linear in ``n_th``, so agreement at ``n_th <= 2`` together with that
linearity covers the cryogenic regime.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.linalg.lapack
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from . import thermofield
from .errors import NonConverged, NonUniqueSteadyState, ParameterError, PrecisionLoss
from .params import SystemParams

MAX_SUPER_DIM = 200_000


class TruncationWarning(UserWarning):
    """Mechanical truncation looks too small for the thermal occupation."""


def destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n)), 1, shape=(n, n), format="csr", dtype=complex)


@dataclass
class TruncatedModel:
    n_a_max: int
    n_b_max: int
    op_a: sp.csr_matrix
    op_b: sp.csr_matrix
    h_matrix: sp.csr_matrix
    jump_ops: dict
    params: SystemParams

    @property
    def dim(self) -> int:
        return self.n_a_max * self.n_b_max

    def occupations(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.arange(self.dim)
        return idx // self.n_b_max, idx % self.n_b_max

    def interior_mask(self) -> np.ndarray:
        """Physical states with every occupation ``<= n_max - 2``."""
        na, nb = self.occupations()
        return (na <= self.n_a_max - 2) & (nb <= self.n_b_max - 2)

    def excitations(self) -> np.ndarray:
        na, nb = self.occupations()
        return na + nb


@dataclass
class Superoperator:
    matrix: sp.csr_matrix
    eps: float
    model: TruncatedModel
    layout: str = "row-major"

    @property
    def dim(self) -> int:
        return self.model.dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        return (self.matrix @ rho.reshape(d * d)).reshape(d, d)


@dataclass(frozen=True)
class SectorProjector:
    n: int
    matrix: sp.csr_matrix


@dataclass
class SteadyState:
    rho: np.ndarray
    residual: float
    rcond: float

    def expect(self, op) -> complex:
        return complex(np.trace(op @ self.rho))


def build_model(p: SystemParams, n_a_max: int, n_b_max: int, warn: bool = True) -> TruncatedModel:
    """Ladder operators, Hamiltonian and jump operators on the truncated space.

    Raises
    ------
    ParameterError
        If a dimension is below 2 or the superoperator would exceed
        ``MAX_SUPER_DIM`` rows.
    """
    n_a_max, n_b_max = int(n_a_max), int(n_b_max)
    if n_a_max < 2 or n_b_max < 2:
        raise ParameterError("Fock truncation dims must be >= 2")
    d = n_a_max * n_b_max
    if d * d > MAX_SUPER_DIM:
        raise ParameterError(f"superoperator dimension {d * d} exceeds the cap {MAX_SUPER_DIM}")
    if warn and n_b_max < 6 * p.n_th + 4:
        warnings.warn(
            f"n_b_max={n_b_max} is small for n_th={p.n_th}; expect truncation error",
            TruncationWarning,
            stacklevel=2,
        )
    ia, ib = sp.identity(n_a_max, format="csr"), sp.identity(n_b_max, format="csr")
    a = sp.kron(destroy(n_a_max), ib, format="csr")
    b = sp.kron(ia, destroy(n_b_max), format="csr")
    ad, bd = a.conj().T.tocsr(), b.conj().T.tocsr()
    h = -p.delta * (ad @ a) + p.omega_m * (bd @ b) + p.g * (ad @ b + a @ bd)
    jumps = {
        "L_a": np.sqrt(p.kappa) * a,
        "L_plus": np.sqrt(p.gamma * p.n_th) * bd,
        "L_minus": np.sqrt(p.gamma * (p.n_th + 1.0)) * b,
    }
    return TruncatedModel(n_a_max, n_b_max, a, b, h.tocsr(), {k: v.tocsr() for k, v in jumps.items()}, p)


def no_jump_hamiltonian(model: TruncatedModel) -> sp.csr_matrix:
    decay = sum(op.conj().T @ op for op in model.jump_ops.values())
    return (model.h_matrix - 0.5j * decay).tocsr()


def build_hybrid_superoperator(model: TruncatedModel, eps: float) -> Superoperator:
    """Matrix of ``rho -> -i(H_NH rho - rho H_NH^dag) + eps sum_k L_k rho L_k^dag``."""
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise ParameterError(f"eps must lie in [0, 1], got {eps}")
    d = model.dim
    eye = sp.identity(d, format="csr", dtype=complex)
    h_nh = no_jump_hamiltonian(model)
    # vec(rho X) = (I kron X^T) vec(rho); X = H_NH^dag gives X^T = conj(H_NH)
    gen = -1j * (sp.kron(h_nh, eye) - sp.kron(eye, h_nh.conj()))
    for op in model.jump_ops.values():
        gen = gen + eps * sp.kron(op, op.conj())
    return Superoperator(matrix=gen.tocsr(), eps=eps, model=model)


def doubled_charges(model: TruncatedModel) -> np.ndarray:
    """Charge (physical minus tilde excitations) of each doubled-space index."""
    n = model.excitations()
    return (n[:, None] - n[None, :]).reshape(-1)


def sector_projector(model: TruncatedModel, n: int) -> SectorProjector:
    mask = (doubled_charges(model) == n).astype(complex)
    return SectorProjector(n=int(n), matrix=sp.diags(mask, format="csr"))


def sector_projectors(model: TruncatedModel) -> list[SectorProjector]:
    charges = doubled_charges(model)
    return [sector_projector(model, n) for n in range(charges.min(), charges.max() + 1)]


def _charge_leak(matrix: sp.spmatrix, charges: np.ndarray) -> float:
    coo = matrix.tocoo()
    off = charges[coo.row] != charges[coo.col]
    return float(np.abs(coo.data[off]).max()) if np.any(off) else 0.0


def thermal_state(model: TruncatedModel, n_a_mean: float, n_b_mean: float) -> np.ndarray:
    """Product of truncated, renormalised Bose-Einstein distributions."""

    def populations(n_max, mean):
        if mean == 0:
            pops = np.zeros(n_max)
            pops[0] = 1.0
            return pops
        pops = (mean / (mean + 1.0)) ** np.arange(n_max)
        return pops / pops.sum()

    diag = np.kron(populations(model.n_a_max, n_a_mean), populations(model.n_b_max, n_b_mean))
    return np.diag(diag).astype(complex)


def trace_row(dim: int) -> np.ndarray:
    row = np.zeros(dim * dim, dtype=complex)
    row[np.arange(dim) * (dim + 1)] = 1.0
    return row


def trace_functional_norm(s: Superoperator) -> float:
    """``||tr o L|| / ||L||`` (Frobenius); zero for a trace-preserving generator."""
    t = trace_row(s.dim)
    return float(np.linalg.norm(s.matrix.T @ t) / sp.linalg.norm(s.matrix))


def trace_derivative(s: Superoperator, rho: np.ndarray) -> float:
    """``d tr(rho)/dt`` under the generator (real part; imaginary part is round-off)."""
    return float(np.trace(s.apply(rho)).real)


def steady_state(s: Superoperator, residual_tol: float = 1e-9, unique_rtol: float = 1e-6) -> SteadyState:
    """Trace-one zero mode of the Lindblad generator.

    The generator conserves the charge and every density-matrix diagonal
    lives in the zero-charge sector, so only that block is factorised. One of
    its rows is replaced by the trace functional and the bordered system
    ``[trace; L_00] rho = e_1`` is solved by LU. A second zero mode would make
    that system singular, which the LAPACK reciprocal condition estimate
    exposes. The residual is then checked against the full sparse generator.

    Raises
    ------
    ParameterError
        Unless ``eps == 1``.
    NonUniqueSteadyState
        If the bordered system's reciprocal condition number is below
        ``unique_rtol``.
    PrecisionLoss
        If ``||L rho|| > residual_tol ||L||``.
    """
    if s.eps != 1.0:
        raise ParameterError("a trace-one steady state exists only for eps = 1")
    d = s.dim
    charges = doubled_charges(s.model)
    if _charge_leak(s.matrix, charges) > 0.0:
        raise PrecisionLoss("generator mixes charge sectors; sector reduction invalid")
    idx = np.flatnonzero(charges == 0)
    block = s.matrix[idx][:, idx].toarray()
    block[0] = trace_row(d)[idx]
    anorm = np.abs(block).sum(axis=0).max()
    with warnings.catch_warnings():
        # an exactly singular pivot is reported through rcond below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(block, check_finite=False)
    rcond, info = scipy.linalg.lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or rcond < unique_rtol:
        raise NonUniqueSteadyState(f"bordered steady-state system is near-singular (rcond={rcond:.3e})")
    rhs = np.zeros(idx.size, dtype=complex)
    rhs[0] = 1.0
    vec = np.zeros(d * d, dtype=complex)
    vec[idx] = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho)
    norm_l = sp.linalg.norm(s.matrix)
    residual = float(np.linalg.norm(s.matrix @ rho.reshape(-1)) / norm_l)
    if residual > residual_tol:
        raise PrecisionLoss(f"steady-state residual {residual:.3e} exceeds {residual_tol:.1e}")
    return SteadyState(rho=rho, residual=residual, rcond=float(rcond))


def evolve(s: Superoperator, rho0: np.ndarray, tau_grid, rtol: float = 1e-9, atol: float = 1e-12) -> np.ndarray:
    """Integrate ``d vec(rho)/dt = L vec(rho)``; returns shape ``(len(tau), D, D)``.

    If ``rho0`` sits in a single charge sector only that block is integrated.
    """
    d = s.dim
    tau = np.asarray(tau_grid, dtype=float)
    y0 = np.asarray(rho0, dtype=complex).reshape(-1)
    charges = doubled_charges(s.model)
    occupied = np.unique(charges[np.abs(y0) > 0])
    if occupied.size == 1:
        idx = np.flatnonzero(charges == occupied[0])
    else:
        idx = np.arange(d * d)
    gen = s.matrix[idx][:, idx].tocsr()

    sol = solve_ivp(
        lambda _t, y: gen @ y,
        (float(tau[0]), float(tau[-1])),
        y0[idx],
        method="DOP853",
        t_eval=tau,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise NonConverged(f"integrator failed: {sol.message} (nfev={sol.nfev}, rtol={rtol}, atol={atol})")
    out = np.zeros((tau.size, d * d), dtype=complex)
    out[:, idx] = sol.y.T
    return out.reshape(tau.size, d, d)


def two_time_function(s: Superoperator, rho_ss: np.ndarray, A, B, tau_grid, rtol: float = 1e-9) -> np.ndarray:
    """``f(tau) = tr[A exp(L tau)(B rho_ss)]``, i.e. ``<A(t + tau) B(t)>``."""
    if s.eps != 1.0:
        raise ParameterError("two-time functions are defined for the Lindblad generator (eps = 1)")
    A = sp.csr_matrix(A)
    B = sp.csr_matrix(B)
    start = B @ rho_ss
    scale = max(float(np.abs(start).max()), 1e-300)
    traj = evolve(s, start, tau_grid, rtol=rtol, atol=1e-12 * scale)
    a_t = A.T.toarray().reshape(-1)
    return traj.reshape(traj.shape[0], -1) @ a_t


# --- doubled-space (thermofield) checks -------------------------------------


def doubled_operators(model: TruncatedModel) -> dict:
    """Ladder matrices on the doubled space keyed like the coefficient tables."""
    eye = sp.identity(model.dim, format="csr", dtype=complex)
    ops = {
        "a": sp.kron(model.op_a, eye, format="csr"),
        "b": sp.kron(model.op_b, eye, format="csr"),
        "at": sp.kron(eye, model.op_a, format="csr"),
        "bt": sp.kron(eye, model.op_b, format="csr"),
    }
    for key in list(ops):
        ops[key + "+"] = ops[key].conj().T.tocsr()
    return ops


def matrix_from_terms(terms: dict, ops: dict) -> sp.csr_matrix:
    dim = next(iter(ops.values())).shape[0]
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for key, coeff in terms.items():
        if coeff == 0:
            continue
        if key == ():
            out = out + coeff * sp.identity(dim, format="csr", dtype=complex)
        else:
            left, right = key
            out = out + coeff * (ops[left] @ ops[right])
    return out.tocsr()


def doubled_interior(model: TruncatedModel) -> np.ndarray:
    inner = model.interior_mask()
    return (inner[:, None] & inner[None, :]).reshape(-1)


@dataclass
class CommutatorReport:
    max_residual: float
    recovered: np.ndarray
    expected: np.ndarray
    generator_mismatch: float
    kappa: float
    tol: float = 1e-9

    @property
    def recovery_error(self) -> float:
        return float(np.abs(self.recovered - self.expected).max())

    def off_block_max(self) -> float:
        return float(max(np.abs(self.recovered[:2, 2:]).max(), np.abs(self.recovered[2:, :2]).max()))

    @property
    def passed(self) -> bool:
        limit = self.tol * self.kappa
        return self.max_residual < limit and self.recovery_error < limit and self.generator_mismatch < limit


def thermofield_commutator_check(p: SystemParams, eps: float, n_a_max: int = 6, n_b_max: int = 6) -> CommutatorReport:
    """Check ``i[H_TF,eps, Phi_j] + shift Phi_j = sum_k (M_eps)_jk Phi_k``.

    ``H_TF,eps`` is assembled from the coefficient table; ``Phi`` is
    ``(a, b, a~^dag, b~^dag)``. For each row the coefficients are also
    recovered by least squares on the interior columns, which exposes any
    entry of ``M_eps`` (e.g. the off-diagonal blocks at ``eps = 0``) directly.
    The table is additionally compared with ``i L_eps`` built from the
    physical-space operators.
    """
    model = build_model(p, n_a_max, n_b_max, warn=False)
    ops = doubled_operators(model)
    h_tf = matrix_from_terms(thermofield.hybrid_tf_terms(p, eps), ops)
    drift4 = thermofield.m_epsilon(p, eps)
    phi = [ops["a"], ops["b"], ops["at+"], ops["bt+"]]
    cols = np.flatnonzero(doubled_interior(model))
    raw = drift4.raw_matrix()

    restricted = [op[:, cols].toarray().reshape(-1) for op in phi]
    basis = np.stack(restricted, axis=1)
    recovered = np.zeros((4, 4), dtype=complex)
    worst = 0.0
    for j, op in enumerate(phi):
        comm = (1j * (h_tf @ op - op @ h_tf))[:, cols].toarray().reshape(-1)
        predicted = basis @ raw[j]
        worst = max(worst, float(np.abs(comm - predicted).max()))
        coeffs, *_ = np.linalg.lstsq(basis, comm, rcond=None)
        recovered[j] = coeffs + drift4.shift * (np.arange(4) == j)

    generator = 1j * build_hybrid_superoperator(model, eps).matrix
    mismatch = (generator - h_tf)[:, cols]
    gen_err = float(np.abs(mismatch.toarray()).max()) if mismatch.nnz else 0.0
    return CommutatorReport(
        max_residual=worst,
        recovered=recovered,
        expected=drift4.entries,
        generator_mismatch=gen_err,
        kappa=p.kappa,
    )


@dataclass
class ChargeSectorReport:
    commutator_norm: float
    cross_sector_max: float
    leakage: dict = field(default_factory=dict)
    completeness_error: float = 0.0
    h_norm: float = 1.0

    @property
    def passed(self) -> bool:
        return (
            self.commutator_norm < 1e-10 * self.h_norm
            and self.cross_sector_max < 1e-10 * self.h_norm
            and all(v < 1e-8 for v in self.leakage.values())
            and self.completeness_error == 0.0
        )


def charge_sector_check(p: SystemParams, n_a_max: int = 5, n_b_max: int = 5, t_sample: float | None = None) -> ChargeSectorReport:
    """Conserved charge ``N = (n_a + n_b) - (n~_a + n~_b)`` of the Lindblad ``H_TF``.

    (i) interior-restricted ``||[N, H_TF]||``; (ii) largest ``P_n H_TF P_m``
    entry with ``n != m`` on interior columns; (iii) out-of-sector weight after
    propagating a vacuum dyad (charge 0) and a ``|1,0><0,0|`` dyad
    (charge +1) for ``t_sample`` (default ``2/kappa``).
    """
    if t_sample is None:
        t_sample = 2.0 / p.kappa
    model = build_model(p, n_a_max, n_b_max, warn=False)
    ops = doubled_operators(model)
    h_tf = matrix_from_terms(thermofield.lindblad_tf_terms(p), ops)
    charges = doubled_charges(model)
    number = sp.diags(charges.astype(complex), format="csr")
    cols = np.flatnonzero(doubled_interior(model))
    comm = (number @ h_tf - h_tf @ number)[:, cols]
    comm_norm = float(sp.linalg.norm(comm)) if comm.nnz else 0.0
    h_norm = float(sp.linalg.norm(h_tf))

    coo = h_tf.tocoo()
    interior_col = np.isin(coo.col, cols)
    off = (charges[coo.row] != charges[coo.col]) & interior_col
    cross = float(np.abs(coo.data[off]).max()) if np.any(off) else 0.0

    d = model.dim
    leakage = {}
    one_photon = 1 * model.n_b_max  # |n_a=1, n_b=0>
    for label, (row, col) in {"vacuum": (0, 0), "single_excitation": (one_photon, 0)}.items():
        psi = np.zeros(d * d, dtype=complex)
        psi[row * d + col] = 1.0
        n0 = charges[row * d + col]
        out = expm_multiply(-1j * t_sample * h_tf, psi)
        leakage[label] = float(np.linalg.norm(out[charges != n0]) / np.linalg.norm(out))

    total = sum(proj.matrix for proj in sector_projectors(model))
    completeness = float(np.abs((total - sp.identity(d * d)).toarray()).max())
    return ChargeSectorReport(
        commutator_norm=comm_norm,
        cross_sector_max=cross,
        leakage=leakage,
        completeness_error=completeness,
        h_norm=h_norm,
    )


# --- convenience wrappers used by the validation suite ----------------------


def steady_moments(p: SystemParams, n_max: int) -> dict:
    model = build_model(p, n_max, n_max)
    ss = steady_state(build_hybrid_superoperator(model, 1.0))
    a, b = model.op_a, model.op_b
    return {
        "n_a": ss.expect(a.conj().T @ a).real,
        "n_b": ss.expect(b.conj().T @ b).real,
        "c_ba": ss.expect(b.conj().T @ a),
        "residual": ss.residual,
    }


@dataclass
class ConvergenceReport:
    n_max: int
    coarse: dict
    fine: dict
    rtol: float = 1e-4

    @property
    def rel_change(self) -> float:
        return max(abs(self.fine[k] - self.coarse[k]) / max(abs(self.fine[k]), 1e-15) for k in ("n_a", "n_b"))

    @property
    def passed(self) -> bool:
        return self.rel_change < self.rtol


def truncation_convergence(p: SystemParams, n_max: int, step: int = 2, rtol: float = 1e-4) -> ConvergenceReport:
    """Steady-state ``n_a, n_b`` at ``n_max`` versus ``n_max + step``."""
    return ConvergenceReport(n_max, steady_moments(p, n_max), steady_moments(p, n_max + step), rtol)
