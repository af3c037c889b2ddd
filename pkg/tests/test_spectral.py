import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topoindex import models
from topoindex.errors import (AmbiguousRankWarning, ConfigurationError, IllConditionedWarning,
                              PreconditionError)
from topoindex.lattice import FiniteGeometry, build_bulk, build_halfspace, sample_disorder
from topoindex.spectral import (SwitchFunction, boundary_projection, boundary_unitary,
                                chiral_frame, decompose, fermi_projection, flat_band_unitary,
                                polar_flat_band_unitary, reference_projection)


def qwz_box(L=8, m=1.0, w=0.0, seed=0):
    spec, flux = models.qwz(m=m, disorder=w)
    g = FiniteGeometry.box((L, L))
    return build_bulk(spec, flux, g, sample_disorder(seed, g) if w else None)


def ssh_model(L=16, t1=0.3, t2=1.0, w=0.0, seed=0, geometry=None):
    spec, flux = models.ssh(t1=t1, t2=t2, disorder=w)
    g = geometry or FiniteGeometry.torus((L,))
    return build_bulk(spec, flux, g, sample_disorder(seed, g) if w else None)


def test_decompose_reconstructs():
    m = qwz_box(w=1.5)
    dec = decompose(m)
    assert np.all(np.diff(dec.eigenvalues) >= 0)
    assert np.allclose(dec.apply(dec.eigenvalues), m.matrix, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6), t1=st.floats(0.0, 2.0))
def test_chiral_route_matches_dense(seed, t1):
    m = ssh_model(L=12, t1=t1, w=1.0, seed=seed)
    a = decompose(m)
    b = decompose(m, method="dense")
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-12)
    assert np.allclose(a.apply(a.eigenvalues), m.matrix, atol=1e-12)
    v = a.eigenvectors
    assert np.allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=1e-12)


def test_chiral_frame_blocks():
    spec, _ = models.chiral3d()
    f = chiral_frame(spec.chiral, 3)
    t = f.dense()
    assert np.allclose(t.conj().T @ t, np.eye(12))
    m = np.random.default_rng(0).normal(size=(12, 12))
    full = t.conj().T @ m @ t
    assert np.allclose(f.block(m, "-", "+"), full[6:, :6])
    assert np.allclose(f.block(m, "+", "-"), full[:6, 6:])
    top, bot = np.ones((6, 2)), np.zeros((6, 2))
    assert np.allclose(f.expand(top, bot), t[:, :6] @ top)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6), mu=st.floats(-0.5, 0.5))
def test_fermi_projection_properties(seed, mu):
    m = qwz_box(L=6, w=2.0, seed=seed)
    p = fermi_projection(decompose(m), mu)
    assert np.allclose(p @ p, p, atol=1e-10)
    assert np.allclose(p, p.conj().T, atol=1e-12)
    assert np.allclose(p @ m.matrix, m.matrix @ p, atol=1e-10)


def test_fermi_projection_warns_on_eigenvalue():
    spec, flux = models.atomic(d=2, energies=(0.0, 1.0))
    m = build_bulk(spec, flux, FiniteGeometry.box((2, 2)))
    with pytest.warns(AmbiguousRankWarning):
        fermi_projection(decompose(m), 0.0)


def test_flat_band_unitary_gapped_torus():
    m = ssh_model(L=16, t1=0.3, w=0.5, seed=2)
    dec = decompose(m)
    u = flat_band_unitary(dec, m)
    assert np.allclose(u @ u.conj().T, np.eye(16), atol=1e-12)
    assert np.allclose(u, polar_flat_band_unitary(m), atol=1e-12)


def test_flat_band_unitary_requires_gap():
    m = ssh_model(t1=0.0, geometry=FiniteGeometry.box((16,)))
    with pytest.raises(PreconditionError):
        flat_band_unitary(decompose(m), m)
    u = polar_flat_band_unitary(m)
    assert np.allclose(u @ u.conj().T, np.eye(16), atol=1e-12)
    with pytest.raises(PreconditionError):
        polar_flat_band_unitary(qwz_box())


def test_switch_functions():
    f = SwitchFunction.descending(0.0, 0.5)
    x = np.linspace(-1, 1, 201)
    y = f(x)
    assert np.all(y[x <= -0.5] == 1) and np.all(y[x >= 0.5] == 0)
    assert np.all(np.diff(y) <= 1e-15)
    g = SwitchFunction.odd(0.4)
    assert np.allclose(g(x), -g(-x), atol=1e-14)
    assert SwitchFunction("sign_step", -1, 1)(0.0) == 0
    for bad in [("nope", 0, 1), ("step", 1, 0), ("odd_sign", 0, 1)]:
        with pytest.raises(ConfigurationError):
            SwitchFunction(*bad)
    with pytest.raises(ConfigurationError):
        SwitchFunction("step", 0, 1, degree=4)


def test_boundary_unitary_windowed_equals_full():
    spec, flux = models.qwz(m=1.0)
    g = FiniteGeometry.slab((8,), 6)
    m = build_halfspace(spec, None, flux, g)
    f = SwitchFunction.descending(0.0, 0.5)
    u1 = boundary_unitary(m, f)
    u2 = boundary_unitary(m, f, dec=decompose(m))
    assert np.allclose(u1, u2, atol=1e-10)
    assert np.allclose(u1 @ u1.conj().T, np.eye(m.dim), atol=1e-10)
    assert np.array_equal(boundary_unitary(m, SwitchFunction("step", -0.5, 0.5)), np.eye(m.dim))
    with pytest.warns(IllConditionedWarning):
        boundary_unitary(m, f, bulk_gap=(-0.2, 0.2))


def test_boundary_projection_is_projection():
    g = FiniteGeometry.slab((), 12)
    m = ssh_model(t1=0.3, geometry=g)
    pt = boundary_projection(m, SwitchFunction.odd(0.5))
    assert np.allclose(pt @ pt, pt, atol=1e-10)
    trivial = ssh_model(t1=1.0, t2=0.3, geometry=g)
    step = SwitchFunction("sign_step", -0.5, 0.5)
    assert np.array_equal(boundary_projection(trivial, step), reference_projection(trivial))
    with pytest.raises(ConfigurationError):
        boundary_projection(m, SwitchFunction.descending(0, 0.5))


def test_hermitian_check():
    m = qwz_box(L=4)
    m.matrix[0, 1] += 1.0
    with pytest.raises(PreconditionError):
        decompose(m)
