import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_complex
from mercer_kit import opcore as O
from mercer_kit.fenyo import fenyo_bilinear_kernel, fenyo_decompose, fenyo_reconstruct


def rank_one(s=2.5):
    x = np.array([0.6, 0.8j, 0.0])    # largest entry 0.8j; rotate to the SVD gauge
    x = x / (x[1] / abs(x[1]))
    y = np.array([1.0, 1.0, 1.0j]) / np.sqrt(3)
    return s, x, y, O.OperatorMatrix(s * np.outer(x, y.conj()))


def check(T, rng, trials=20):
    dec = fenyo_decompose(T)
    ex, ey = dec.orthonormality()
    assert ex <= 1e-10 and ey <= 1e-10
    tn = np.linalg.norm(T.entries, 2)
    for _ in range(trials):
        f = random_complex(rng, T.n)
        ref = T.entries @ f
        a, b = fenyo_reconstruct(dec, f)
        tol = 1e-9 * max(tn * np.linalg.norm(f), 1e-300)
        assert np.linalg.norm(a - ref) <= tol and np.linalg.norm(b - ref) <= tol
    return dec


def test_zero_operator():
    dec = fenyo_decompose(O.OperatorMatrix.zeros(4))
    assert dec.size == 0
    a, b = fenyo_reconstruct(dec, np.ones(4))
    assert np.all(a == 0) and np.all(b == 0)


def test_rank_one_hand_trace():
    s, x, y, T = rank_one()
    dec = fenyo_decompose(T)
    assert dec.size == 1
    assert np.allclose(dec.x[:, 0], x) and np.allclose(dec.y[:, 0], y)
    assert dec.kappa[0] == pytest.approx(s) and dec.mu[0] == 0 and dec.mu[-1] == 0
    assert dec.alpha[0] == pytest.approx(s)
    assert np.allclose(dec.v[:, 0], y)
    assert dec.free_choices == (("x", 1),)
    a, b = fenyo_reconstruct(dec, y)
    assert np.allclose(a, s * x) and np.allclose(b, s * x)


def test_diagonal_two_steps(rng):
    dec = check(O.OperatorMatrix.diagonal([2.0, 1.0]), rng)
    assert dec.size == 2


def test_degenerate_cases(rng):
    check(O.OperatorMatrix(np.array([[0, 1], [0, 0]], dtype=complex)), rng)
    check(O.OperatorMatrix.identity(5), rng)
    check(O.OperatorMatrix(np.roll(np.eye(6), 1, axis=0)), rng)
    low = random_complex(rng, 7, 2) @ random_complex(rng, 2, 7)
    assert check(O.OperatorMatrix(low), rng).size == 2


def test_random_small(rng):
    for n in (1, 3, 4, 8):
        check(O.OperatorMatrix(random_complex(rng, n, n)), rng)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 16), st.integers(0, 16))
def test_properties(seed, n, rank):
    r = np.random.default_rng(seed)
    rank = min(rank, n)
    T = O.OperatorMatrix(random_complex(r, n, rank) @ random_complex(r, rank, n))
    dec = check(T, r, trials=5)
    tn = np.linalg.norm(T.entries, 2)
    assert np.all(dec.alpha <= tn + 1e-9) and np.all(dec.beta <= tn + 1e-9)
    again = fenyo_decompose(T)
    assert np.array_equal(again.x, dec.x) and np.array_equal(again.kappa, dec.kappa)


class TestKernel:
    def test_zero(self, hermite10):
        dec = fenyo_decompose(O.OperatorMatrix.zeros(10))
        k = fenyo_bilinear_kernel(dec, hermite10)
        assert np.all(k.samples == 0)

    def test_diagonal(self, hermite10):
        lam = 2.0 ** -np.arange(10)
        k = fenyo_bilinear_kernel(fenyo_decompose(O.OperatorMatrix.diagonal(lam)), hermite10)
        assert k.diagnostics["deviation_first"] <= 1e-9
        assert k.diagnostics["deviation_second"] <= 1e-9

    def test_rank_one(self, hermite10):
        s, x, y, _ = rank_one()
        xs, ys = np.zeros(10, complex), np.zeros(10, complex)
        xs[:3], ys[:3] = x, y
        T = O.OperatorMatrix(s * np.outer(xs, ys.conj()))
        k = fenyo_bilinear_kernel(fenyo_decompose(T), hermite10, 1, 0)
        xf = hermite10.synthesize(xs, k.s, 1)
        yf = hermite10.synthesize(ys, k.t, 0)
        assert np.abs(k.samples - s * np.outer(xf, yf.conj())).max() <= 1e-12
