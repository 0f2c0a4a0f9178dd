import math

import numpy as np
import pytest

from ebamend.matcore import (
    ConvergenceError,
    DensityMatrixError,
    NumericalError,
    hermitian_eigensystem,
    partial_trace,
    partial_transpose,
    psd_sqrt,
    singular_values,
    tensor,
    validate_density,
)

I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]])
SZ = np.diag([1, -1])
PHI_PLUS = np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2


def random_hermitian(rng, n=4, size=None):
    shape = (n, n) if size is None else (size, n, n)
    x = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return x + np.conj(np.swapaxes(x, -1, -2))


def random_state(rng, n=4):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


class TestTensor:
    def test_identity(self):
        np.testing.assert_array_equal(tensor(I2, I2), np.eye(4))

    def test_diagonal(self):
        np.testing.assert_array_equal(tensor(SZ, SZ), np.diag([1, -1, -1, 1]))

    def test_bit_flip_on_first_factor(self):
        ket00 = np.array([1, 0, 0, 0])
        np.testing.assert_array_equal(tensor(SX, I2) @ ket00, [0, 0, 1, 0])

    def test_rejects_large_result(self):
        with pytest.raises(ValueError):
            tensor(np.eye(4), I2)


class TestEigensystem:
    def test_sigma_z(self):
        w, _ = hermitian_eigensystem(SZ)
        np.testing.assert_allclose(w, [1, -1])

    def test_identity(self):
        w, v = hermitian_eigensystem(np.eye(4))
        np.testing.assert_allclose(w, np.ones(4))
        np.testing.assert_allclose(v.conj().T @ v, np.eye(4), atol=1e-14)

    def test_sigma_x_vectors(self):
        w, v = hermitian_eigensystem(SX)
        np.testing.assert_allclose(w, [1, -1])
        # eigenvectors up to phase
        assert abs(abs(v[:, 0] @ np.array([1, 1]) / math.sqrt(2)) - 1) < 1e-12
        assert abs(abs(v[:, 1] @ np.array([1, -1]) / math.sqrt(2)) - 1) < 1e-12

    def test_descending_and_matches_numpy(self, rng):
        h = random_hermitian(rng, size=200)
        w, v = hermitian_eigensystem(h)
        assert np.all(np.diff(w, axis=-1) <= 0)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(h)[:, ::-1], atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            hermitian_eigensystem(np.array([[0, 1], [0, 0]]))

    def test_iteration_cap(self, rng):
        with pytest.raises(ConvergenceError):
            hermitian_eigensystem(random_hermitian(rng), max_sweeps=1)

    def test_degenerate_block(self):
        h = np.kron(np.diag([2.0, 2.0]), SX)
        w, v = hermitian_eigensystem(h)
        np.testing.assert_allclose(w, [2, 2, -2, -2], atol=1e-14)
        np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-13)


class TestSqrt:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(I2), I2, atol=1e-15)

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([0.25, 0.75])), np.diag([0.5, math.sqrt(0.75)]), atol=1e-15)

    def test_projector(self):
        v = np.array([1, 1j]) / math.sqrt(2)
        p = np.outer(v, v.conj())
        np.testing.assert_allclose(psd_sqrt(p), p, atol=1e-12)

    def test_clamps_rounding(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([1.0, -1e-12])), np.diag([1.0, 0.0]))

    def test_rejects_negative(self):
        with pytest.raises(NumericalError):
            psd_sqrt(np.diag([1.0, -1e-6]))


def test_singular_values_match_numpy(rng):
    m = rng.normal(size=(300, 4, 4)) + 1j * rng.normal(size=(300, 4, 4))
    np.testing.assert_allclose(singular_values(m), np.linalg.svd(m, compute_uv=False), atol=1e-13)


def test_singular_values_keep_small_values_accurate():
    m = np.diag([1.0, 1e-9, 3e-12, 0.0]).astype(complex)
    u = np.linalg.qr(np.arange(16).reshape(4, 4) + 1j * np.eye(4))[0]
    sv = singular_values(u @ m @ u.conj().T)
    np.testing.assert_allclose(sv, [1.0, 1e-9, 3e-12, 0.0], atol=1e-15)


class TestPartialTranspose:
    def test_product_state_stays_ppt(self, rng):
        a, b = random_state(rng, 2), random_state(rng, 2)
        pt = partial_transpose(np.kron(a, b))
        np.testing.assert_allclose(pt, np.kron(a, b.T), atol=1e-15)
        assert np.linalg.eigvalsh(pt).min() > -1e-14

    def test_bell_state_minimum(self):
        pt = partial_transpose(PHI_PLUS)
        # block swap result, checked against a generic eigensolver
        assert hermitian_eigensystem(pt)[0][-1] == pytest.approx(-0.5, abs=1e-14)
        assert np.linalg.eigvalsh(pt).min() == pytest.approx(-0.5, abs=1e-14)

    @pytest.mark.parametrize("side", ["first", "second"])
    def test_involution(self, rng, side):
        rho = random_state(rng)
        np.testing.assert_array_equal(partial_transpose(partial_transpose(rho, side), side), rho)

    def test_first_vs_second_are_transposes(self, rng):
        rho = random_state(rng)
        np.testing.assert_allclose(partial_transpose(rho, "first"), partial_transpose(rho, "second").T)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            partial_transpose(I2 / 2)


class TestPartialTrace:
    def test_product(self, rng):
        a, b = random_state(rng, 2), random_state(rng, 2)
        np.testing.assert_allclose(partial_trace(np.kron(a, b), "first"), a, atol=1e-15)
        np.testing.assert_allclose(partial_trace(np.kron(a, b), "second"), b, atol=1e-15)

    @pytest.mark.parametrize("keep", ["first", "second"])
    def test_bell_reduces_to_mixed(self, keep):
        np.testing.assert_allclose(partial_trace(PHI_PLUS, keep), I2 / 2, atol=1e-15)

    def test_unit_trace(self, rng):
        for _ in range(20):
            assert np.trace(partial_trace(random_state(rng))).real == pytest.approx(1, abs=1e-14)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            partial_trace(I2 / 2)


class TestValidateDensity:
    def test_accepts_and_freezes(self, rng):
        rho = validate_density(random_state(rng))
        assert not rho.flags.writeable

    def test_clamps_tiny_negative(self):
        rho = validate_density(np.diag([1 + 5e-11, -5e-11]))
        assert np.linalg.eigvalsh(rho).min() >= 0
        assert np.trace(rho).real == pytest.approx(1, abs=1e-15)

    @pytest.mark.parametrize(
        "bad",
        [
            np.diag([1.2, -0.2]),
            np.diag([0.5, 0.6]),
            np.array([[0.5, 0.1], [0.3, 0.5]]),
            np.eye(3) / 3,
            np.array([[np.nan, 0], [0, 1]]),
        ],
    )
    def test_rejects(self, bad):
        with pytest.raises(DensityMatrixError):
            validate_density(bad)
