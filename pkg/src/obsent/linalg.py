"""Dense Hermitian matrix primitives.

Everything here works on plain ``numpy`` arrays. Spectral functions are
evaluated through ``numpy.linalg.eigh`` and can be restricted to the
support of the operator, which is what the log / inverse-square-root
calls in the entropy and Petz code need.
"""

from typing import Callable, NamedTuple

import numpy as np

from .errors import ConvergenceFailure, DomainError, NonSquare, NotHermitian

HERM_INPUT_TOL = 1e-8
PSD_TOL = 1e-9
# relative to the largest |eigenvalue|
SUPPORT_TOL = 1e-12


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonSquare("matrix has non-finite entries")
    return m


def hermitize(m, tol: float = HERM_INPUT_TOL) -> np.ndarray:
    """Return ``(m + m^dagger)/2`` after checking ``m`` is Hermitian to ``tol``."""
    m = _square(m)
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > tol:
        raise NotHermitian(f"matrix is not Hermitian (max asymmetry {asym:.3g} > {tol:g})")
    return (m + m.conj().T) / 2


def eig_hermitian(a) -> EigenDecomposition:
    a = _square(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc
    return EigenDecomposition(w[::-1].copy(), v[:, ::-1].copy())


def support_cutoff(eigenvalues: np.ndarray) -> float:
    if eigenvalues.size == 0:
        return 0.0
    return SUPPORT_TOL * float(np.max(np.abs(eigenvalues)))


def spectral_fn(
    a,
    f: Callable[[np.ndarray], np.ndarray],
    support_only: bool = False,
    eig: EigenDecomposition | None = None,
) -> np.ndarray:
    """Apply the scalar function ``f`` to the spectrum of Hermitian ``a``.

    With ``support_only`` the function is evaluated only on eigenvalues above
    the support cutoff and the rest of the spectrum is mapped to zero. A
    precomputed decomposition may be passed as ``eig`` to skip the solve.
    """
    w, v = eig if eig is not None else eig_hermitian(a)
    out = np.zeros_like(w)
    keep = w > support_cutoff(w) if support_only else np.ones(w.shape, dtype=bool)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w[keep]), dtype=float)
    if not np.all(np.isfinite(fw)):
        bad = w[keep][~np.isfinite(fw)]
        raise DomainError(f"function undefined on eigenvalue(s) {bad}")
    out[keep] = fw
    return (v * out) @ v.conj().T


def support_projector(a, eig: EigenDecomposition | None = None) -> np.ndarray:
    """Projector onto the span of eigenvectors with eigenvalue above the cutoff."""
    w, v = eig if eig is not None else eig_hermitian(a)
    vs = v[:, w > support_cutoff(w)]
    return vs @ vs.conj().T


def trace_norm(a) -> float:
    a = _square(a)
    if a.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Max-entry norm of ``[a, b]``."""
    return float(np.max(np.abs(a @ b - b @ a)))
