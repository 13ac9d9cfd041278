import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given

from obsent.errors import DomainError, NonSquare, NotHermitian
from obsent.linalg import (
    commutator_norm,
    eig_hermitian,
    hermitize,
    spectral_fn,
    support_projector,
    trace_norm,
)
from obsent.sampling import ginibre, random_mixed

from conftest import configs


def test_hermitize_accepts_small_asymmetry():
    a = np.array([[1.0, 0.5 + 1e-10], [0.5, 2.0]])
    h = hermitize(a)
    assert np.allclose(h, h.conj().T, atol=0, rtol=0)


def test_hermitize_rejects():
    with pytest.raises(NotHermitian):
        hermitize(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(NonSquare):
        hermitize(np.ones((2, 3)))


@given(configs)
def test_eig_reconstructs_and_descends(cfg):
    g = ginibre(cfg.rng(), cfg.dim, cfg.dim)
    a = g + g.conj().T
    e = eig_hermitian(a)
    assert np.all(np.diff(e.eigenvalues) <= 0)
    assert np.allclose(e.reconstruct(), a, atol=1e-12)


@given(configs)
def test_sqrt_and_log_match_scipy(cfg):
    rho = random_mixed(cfg).matrix
    assert np.allclose(spectral_fn(rho, np.sqrt), sla.sqrtm(rho), atol=1e-9)
    assert np.allclose(spectral_fn(rho, np.log), sla.logm(rho), atol=1e-8)


def test_log_on_support_only():
    p = np.diag([0.7, 0.3, 0.0])
    out = spectral_fn(p, np.log, support_only=True)
    assert np.allclose(out, np.diag([np.log(0.7), np.log(0.3), 0.0]))
    with pytest.raises(DomainError):
        spectral_fn(p, np.log)


def test_support_projector_rank():
    v = np.array([1.0, 1j, 0]) / np.sqrt(2)
    p = support_projector(np.outer(v, v.conj()))
    assert np.isclose(np.trace(p).real, 1.0)
    assert np.allclose(p @ p, p)


def test_trace_norm_and_commutator():
    a = np.diag([1.0, -2.0])
    assert np.isclose(trace_norm(a), 3.0)
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1, -1])
    assert np.isclose(commutator_norm(x, z), 2.0)  # [X, Z] = -2iY, max entry 2
    assert commutator_norm(z, z) == 0
