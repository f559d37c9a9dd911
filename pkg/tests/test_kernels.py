import numpy as np
import pytest

from adadkrr.errors import InputShapeError
from adadkrr.kernels import KernelSpec, eval_kernel, gram, wendland_profile


@pytest.mark.parametrize(
    "x,y,expected",
    [
        ([0.2, 0.3, 0.4], [0.2, 0.3, 0.4], 1.0),
        ([0.0, 0.0, 0.0], [0.5, 0.0, 0.0], 0.1875),
        ([0.0, 0.0, 0.0], [2.0, 0.0, 0.0], 0.0),
    ],
)
def test_wendland_values(wendland, x, y, expected):
    assert eval_kernel(wendland, x, y) == pytest.approx(expected, abs=1e-15)


def test_gaussian_at_zero_distance():
    assert eval_kernel(KernelSpec.gaussian(1.0), [1.0, 2.0], [1.0, 2.0]) == 1.0


def test_wendland_support_and_boundary(rng, wendland):
    far = rng.random((50, 3)) + 2.0
    assert np.all(gram(wendland, np.zeros((1, 3)), far) == 0.0)
    assert wendland_profile(1.0 - 1e-9) < 1e-30
    assert wendland_profile(1.0) == 0.0


def test_gram_single_point(wendland):
    np.testing.assert_array_equal(gram(wendland, [[0.1, 0.2, 0.3]]), [[1.0]])


def test_gram_two_points_unit_diagonal(rng):
    A = rng.random((2, 3))
    for spec in (KernelSpec.wendland(), KernelSpec.gaussian(0.7)):
        G = gram(spec, A)
        assert G.shape == (2, 2)
        np.testing.assert_array_equal(np.diag(G), [1.0, 1.0])
        assert G[0, 1] == G[1, 0]


def test_gaussian_gram_formula():
    G = gram(KernelSpec.gaussian(1.0), np.zeros((1, 3)), [[0, 0, 0], [1, 0, 0]])
    np.testing.assert_allclose(G, [[1.0, np.exp(-0.5)]], rtol=0, atol=1e-15)


@pytest.mark.parametrize("spec", [KernelSpec.wendland(), KernelSpec.gaussian(0.3)])
def test_gram_symmetric_and_psd(rng, spec):
    A = rng.random((200, 3))
    G = gram(spec, A)
    np.testing.assert_array_equal(G, G.T)
    smallest = np.linalg.eigvalsh(G).min()
    assert smallest >= -1e-10 * np.linalg.norm(G, 2)


def test_dimension_mismatch(wendland):
    with pytest.raises(InputShapeError):
        eval_kernel(wendland, [0.0, 0.0], [0.0, 0.0, 0.0])
    with pytest.raises(InputShapeError):
        gram(wendland, np.zeros((3, 2)), np.zeros((3, 3)))


def test_bad_kernel_specs():
    with pytest.raises(ValueError, match="Unsupported kernel family"):
        KernelSpec("laplace")
    with pytest.raises(ValueError):
        KernelSpec.gaussian(0.0)
    assert KernelSpec("Gaussian", 2.0) == KernelSpec.gaussian(2.0)
