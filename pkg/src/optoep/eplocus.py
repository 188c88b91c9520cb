"""Exceptional-point locations in the coupling ``G``.

Closed forms cover the Liouvillian (LEP), no-jump Hamiltonian (HEP) and hybrid
points. :func:`locate_ep_numeric` finds the same points without those
formulas: it bisects on a discriminant read off the numerically assembled
matrix, and then measures how defective the matrix is at the root.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import drift, thermofield
from .drift import DriftKind
from .errors import NoSignChange, NonConverged, ParameterError
from .params import SystemParams, derived_rates, red_sideband

DEFECTIVE_OVERLAP = 0.999


class EPKind(enum.Enum):
    LEP = "lep"
    HEP = "hep"
    HYBRID = "hybrid"


class Method(enum.Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC_BISECTION = "numeric_bisection"


@dataclass(frozen=True)
class Defectivity:
    eigenvalue_gap: float
    eigenvector_overlap: float

    @property
    def is_defective(self) -> bool:
        return self.eigenvector_overlap > DEFECTIVE_OVERLAP


@dataclass(frozen=True)
class EPResult:
    g_star: float
    kind: EPKind
    method: Method
    eps: float | None = None
    defectivity: Defectivity | None = None
    iterations: int = 0


@dataclass(frozen=True)
class MatrixKind:
    """Which matrix a numeric search or sweep works on.

    Use :meth:`drift2` for the 2x2 drifts and :meth:`hybrid4` for ``M_eps``.
    """

    family: str
    drift_kind: DriftKind | None = None
    eps: float | None = None

    @classmethod
    def drift2(cls, kind: DriftKind | str = DriftKind.LIOUVILLE) -> MatrixKind:
        return cls("drift2", drift_kind=DriftKind(kind))

    @classmethod
    def hybrid4(cls, eps: float) -> MatrixKind:
        eps = float(eps)
        if not 0.0 <= eps <= 1.0:
            raise ParameterError(f"eps must lie in [0, 1], got {eps}")
        return cls("hybrid4", eps=eps)

    @property
    def ep_kind(self) -> EPKind:
        if self.family == "hybrid4":
            return EPKind.HYBRID
        return EPKind.HEP if self.drift_kind is DriftKind.NO_JUMP else EPKind.LEP

    def matrix(self, p: SystemParams) -> np.ndarray:
        if self.family == "drift2":
            return drift.drift_matrix(p, self.drift_kind).entries
        return thermofield.m_epsilon(p, self.eps).entries


def g_lep(p: SystemParams) -> float:
    return (p.kappa - p.gamma) / 4.0


def g_hep(p: SystemParams) -> float:
    return abs(p.kappa - derived_rates(p).gamma_eff) / 4.0


def _g_ep_even(p: SystemParams, eps: float) -> float:
    # Depends on eps only through 1 - eps^2; accepts any real eps so that
    # symmetric finite differences about eps = 0 are possible.
    k, g, n = p.kappa, p.gamma, p.n_th
    deficit = 1.0 - eps * eps
    weighted = g * g * (1.0 + 4.0 * n * (n + 1.0) * deficit)
    numerator = abs(k * k - weighted)
    radicand = (k + g) ** 2 + 4.0 * n * g * (k + g * (n + 1.0)) * deficit
    return numerator / (4.0 * math.sqrt(radicand))


def g_ep_hybrid(p: SystemParams, eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise ParameterError(f"eps must lie in [0, 1], got {eps}")
    return _g_ep_even(p, eps)


def g_ep_hybrid_slope(p: SystemParams, eps: float = 0.0, h: float = 1e-4) -> float:
    """Central difference of the hybrid EP location in ``eps``.

    Uses the even extension of the closed form in ``eps``, so the stencil may
    straddle ``eps = 0``.
    """
    return (_g_ep_even(p, eps + h) - _g_ep_even(p, eps - h)) / (2.0 * h)


def closed_form(p: SystemParams, kind: MatrixKind) -> EPResult:
    if kind.family == "hybrid4":
        g = g_ep_hybrid(p, kind.eps)
    elif kind.drift_kind is DriftKind.NO_JUMP:
        g = g_hep(p)
    else:
        g = g_lep(p)
    return EPResult(g_star=g, kind=kind.ep_kind, method=Method.CLOSED_FORM, eps=kind.eps)


def discriminant(p: SystemParams, kind: MatrixKind) -> float:
    """Real discriminant at the red sideband, computed from matrix entries.

    2x2: ``D = ((m11 - m22)/2)^2 + m12 m21``. 4x4: ``alpha^2 - 4 beta`` with
    ``alpha, beta`` from traces and the determinant of ``M_eps``.
    """
    p = red_sideband(p)
    m = kind.matrix(p)
    if kind.family == "drift2":
        return drift._discriminant(m).real
    alpha, beta = thermofield.charpoly_from_matrix(m)
    return alpha * alpha - 4.0 * beta


def _normalized_overlap(v1: np.ndarray, v2: np.ndarray) -> float:
    return float(abs(np.vdot(v1, v2)) / (np.linalg.norm(v1) * np.linalg.norm(v2)))


def defectivity(m: np.ndarray) -> Defectivity:
    """Gap and eigenvector overlap of the closest eigenvalue pair of ``m``."""
    vals, vecs = np.linalg.eig(m)
    best = None
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            gap = abs(vals[i] - vals[j])
            if best is None or gap < best[0]:
                best = (gap, i, j)
    gap, i, j = best
    return Defectivity(eigenvalue_gap=float(gap), eigenvector_overlap=_normalized_overlap(vecs[:, i], vecs[:, j]))


def locate_ep_numeric(
    p: SystemParams,
    kind: MatrixKind,
    g_lo: float,
    g_hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> EPResult:
    """Bisect the red-sideband discriminant for its root in ``[g_lo, g_hi]``.

    Raises
    ------
    NoSignChange
        If the discriminant has the same strict sign at both ends.
    NonConverged
        If ``max_iter`` halvings do not reach the relative tolerance.
    """
    p = red_sideband(p)

    def f(g):
        return discriminant(p.with_g(g), kind)

    lo, hi = float(g_lo), float(g_hi)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0 or f_hi == 0.0:
        root, iterations = (lo if f_lo == 0.0 else hi), 0
    else:
        if np.sign(f_lo) == np.sign(f_hi):
            raise NoSignChange(
                f"discriminant keeps sign on [{lo:.6g}, {hi:.6g}] ({f_lo:.3e}, {f_hi:.3e})"
            )
        iterations = 0
        while True:
            mid = 0.5 * (lo + hi)
            if hi - lo <= tol * abs(mid):
                break
            if iterations >= max_iter:
                raise NonConverged(f"bisection did not reach rtol={tol} in {max_iter} iterations")
            f_mid = f(mid)
            iterations += 1
            if f_mid == 0.0:
                lo = hi = mid
                break
            if np.sign(f_mid) == np.sign(f_lo):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
    return EPResult(
        g_star=root,
        kind=kind.ep_kind,
        method=Method.NUMERIC_BISECTION,
        eps=kind.eps,
        defectivity=defectivity(kind.matrix(p.with_g(root))),
        iterations=iterations,
    )


def bracket_upper(p: SystemParams, kind: MatrixKind, max_doublings: int = 60) -> float:
    """Smallest ``kappa * 2^k`` at which the discriminant is negative.

    The discriminant is ``c - d G^2`` with ``d > 0`` for every supported
    kind, so it is eventually negative.
    """
    hi = p.kappa
    for _ in range(max_doublings):
        if discriminant(p.with_g(hi), kind) < 0:
            return hi
        hi *= 2.0
    raise NoSignChange("discriminant stays nonnegative; no exceptional point found")


def locate(p: SystemParams, kind: MatrixKind, tol: float = 1e-10) -> EPResult:
    """:func:`locate_ep_numeric` on ``[0, bracket_upper]``."""
    return locate_ep_numeric(p, kind, 0.0, bracket_upper(p, kind), tol=tol)


@dataclass
class BranchTable:
    """Eigenvalues per grid point, columns ordered by continuity."""

    g: np.ndarray
    eigenvalues: np.ndarray
    kind: MatrixKind
    labels: list = field(default_factory=list)


def _continuity_order(previous: np.ndarray, current: np.ndarray) -> np.ndarray:
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(previous[:, None] - current[None, :])
    _, cols = linear_sum_assignment(cost)
    return current[cols]


def point_eigenvalues(p: SystemParams, kind: MatrixKind) -> np.ndarray:
    """Eigenvalues at one grid point; closed form for the 2x2 drifts."""
    if kind.family == "drift2":
        pair = drift.eigenvalues(drift.drift_matrix(p, kind.drift_kind))
        return np.array([pair.lambda_plus, pair.lambda_minus])
    m = thermofield.m_epsilon(p, kind.eps)
    return thermofield.quartic_spectrum(m.alpha, m.beta).lambdas


def sweep_branches(p: SystemParams, g_grid, kind: MatrixKind, mapper=map) -> BranchTable:
    """Eigenvalue branches over a sorted ``G`` grid.

    ``mapper`` may be an executor's ``map``; results are consumed in grid
    order either way.
    """
    g_grid = np.asarray(g_grid, dtype=float)
    if g_grid.size == 0:
        raise ValueError("g_grid must be nonempty")
    if np.any(np.diff(g_grid) < 0):
        raise ValueError("g_grid must be sorted")
    p = red_sideband(p) if kind.family == "hybrid4" else p
    rows = list(mapper(point_eigenvalues, [p.with_g(g) for g in g_grid], [kind] * g_grid.size))
    ordered = [np.asarray(rows[0])]
    for row in rows[1:]:
        ordered.append(_continuity_order(ordered[-1], np.asarray(row)))
    n = ordered[0].size
    labels = ["plus", "minus"] if n == 2 else [f"branch{k}" for k in range(n)]
    return BranchTable(g=g_grid, eigenvalues=np.vstack(ordered), kind=kind, labels=labels)


def hybrid_ep_curve(p: SystemParams, eps_grid) -> np.ndarray:
    """Closed-form hybrid EP location for each ``eps`` in the grid."""
    return np.array([g_ep_hybrid(p, e) for e in eps_grid])
