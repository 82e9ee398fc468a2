import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochreg.errors import ValidationError
from stochreg.grid import TimeGrid
from stochreg.seeding import derive_seed, derive_seeds, generator


class TestTimeGrid:
    def test_basic_layout(self):
        g = TimeGrid(2.0, 4)
        assert g.dt == 0.5
        assert np.allclose(g.edges, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert g.edges[0] == 0.0 and g.edges[-1] == g.horizon

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValidationError):
            TimeGrid(-1.0, 10)
        with pytest.raises(ValidationError):
            TimeGrid(1.0, 0)

    def test_index_of_rejects_off_grid(self):
        g = TimeGrid(1.0, 10)
        assert g.index_of(0.3) == 3
        with pytest.raises(ValidationError):
            g.index_of(0.35)


class TestSeeding:
    def test_no_collisions_over_a_million_indices(self):
        seeds = derive_seeds(12345, np.arange(1_000_000))
        assert np.unique(seeds).size == 1_000_000

    def test_derivation_is_pure(self):
        assert derive_seed(7, 3) == derive_seed(7, 3)
        assert derive_seeds(7, [3])[0] == derive_seed(7, 3)

    @given(st.integers(0, 2**64 - 1), st.integers(0, 2**32))
    def test_vectorized_matches_scalar(self, master, index):
        assert int(derive_seeds(master, [index])[0]) == derive_seed(master, index)

    def test_different_masters_different_streams(self):
        assert derive_seed(1, 0) != derive_seed(2, 0)
        a = generator(1, 0).standard_normal(4)
        b = generator(2, 0).standard_normal(4)
        assert not np.allclose(a, b)

    def test_generator_reproducible(self):
        assert np.array_equal(generator(9, 4).standard_normal(8),
                              generator(9, 4).standard_normal(8))
