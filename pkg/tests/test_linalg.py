import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pfaffkit.linalg import ComplexError, RationalMatrix, cohomology_dim, image_basis, kernel_basis, rank


def rand_matrix(rng, max_dim=60, density=None):
    r, c = rng.randint(0, max_dim), rng.randint(0, max_dim)
    density = rng.choice([0.05, 0.2, 0.6]) if density is None else density
    entries = {}
    for i in range(r):
        for j in range(c):
            if rng.random() < density:
                entries[(i, j)] = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
    return RationalMatrix(r, c, entries)


def test_rank_examples():
    assert rank(RationalMatrix.identity(3)) == 3
    assert rank(RationalMatrix.zero(4, 2)) == 0
    assert rank(RationalMatrix.from_rows([[1, 2], [2, 4]])) == 1


def test_kernel_and_image_examples():
    (k,) = kernel_basis(RationalMatrix.from_rows([[1, 1]]))
    # same line as (1, -1)
    assert k[0] == -k[1] and k[0] != 0
    assert kernel_basis(RationalMatrix.identity(3)) == []
    assert image_basis(RationalMatrix.from_rows([[0, 1], [0, 0]])) == [[1, 0]]


def test_cohomology_dim_examples():
    assert cohomology_dim(RationalMatrix.zero(3, 2), RationalMatrix.zero(4, 3)) == 3
    d_in = RationalMatrix.from_rows([[1], [1]])
    d_out = RationalMatrix.from_rows([[1, -1]])
    assert cohomology_dim(d_in, d_out) == 0
    with pytest.raises(ComplexError):
        cohomology_dim(RationalMatrix.from_rows([[1], [0]]), RationalMatrix.from_rows([[1, 0]]))
    with pytest.raises(ValueError):
        cohomology_dim(RationalMatrix.zero(2, 1), RationalMatrix.zero(1, 3))


def test_no_stored_zeros_and_bounds():
    M = RationalMatrix(2, 2, {(0, 0): 0, (1, 1): Fraction(1, 2)})
    assert M.entries == {(1, 1): Fraction(1, 2)}
    with pytest.raises(IndexError):
        RationalMatrix(2, 2, {(2, 0): 1})


def test_rank_nullity_500():
    rng = random.Random(7)
    for _ in range(500):
        M = rand_matrix(rng)
        ker = kernel_basis(M)
        assert len(ker) + M.rank() == M.cols
        for v in ker:
            assert not any(M.apply(v))
        img = image_basis(M)
        assert len(img) == M.rank()


def test_rank_of_products():
    # oracle: a generic product of n x k and k x m factors has rank k
    rng = random.Random(11)
    for _ in range(40):
        n, m = rng.randint(5, 30), rng.randint(5, 30)
        k = rng.randint(0, min(n, m))
        A = RationalMatrix(n, k, {(i, j): rng.randint(-50, 50) or 1 for i in range(n) for j in range(k)})
        B = RationalMatrix(k, m, {(i, j): rng.randint(-50, 50) or 1 for i in range(k) for j in range(m)})
        assert (A @ B).rank() <= k
        assert (A @ B).rank() == (A @ B).transpose().rank()


def test_kernel_vectors_independent():
    rng = random.Random(3)
    for _ in range(50):
        M = rand_matrix(rng, max_dim=25)
        ker = kernel_basis(M)
        if ker:
            K = RationalMatrix.from_rows(ker, M.cols)
            assert K.rank() == len(ker)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 12))
def test_cohomology_dim_permutation_invariant(seed, n):
    rng = random.Random(seed)
    # build an exact pair through a random middle space: d_out = P @ Q with Q @ d_in = 0
    a = rng.randint(0, n)
    d_in = RationalMatrix(n, a, {(i, j): rng.randint(-3, 3) for i in range(n) for j in range(a)})
    ker = kernel_basis(d_in.transpose())
    rows = []
    for _ in range(rng.randint(0, 5)):
        coeffs = [rng.randint(-2, 2) for _ in ker]
        rows.append([sum(c * v[j] for c, v in zip(coeffs, ker)) for j in range(n)])
    d_out = RationalMatrix.from_rows(rows, n) if rows else RationalMatrix.zero(0, n)
    h = cohomology_dim(d_in, d_out)
    perm = list(range(n))
    rng.shuffle(perm)
    assert cohomology_dim(d_in.permute_rows(perm), d_out.permute_columns(perm)) == h
    assert h >= 0
