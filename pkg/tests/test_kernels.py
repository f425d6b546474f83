"""Backend equivalence: the compiled kernels must reproduce the NumPy
reference bit for bit."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdsim import _kernels_py
from qkdsim.kernels import BACKEND, lag_histogram, match_coincidences

try:
    from qkdsim import _kernels
except ImportError:
    _kernels = None

needs_compiled = pytest.mark.skipif(
    _kernels is None, reason="compiled extension not built"
)


def _sorted_times(draw_list):
    return np.sort(np.asarray(draw_list, dtype=np.float64))


stream = st.lists(
    st.floats(0.0, 100.0, allow_nan=False, width=32), min_size=0, max_size=200
).map(_sorted_times)


class TestMatcherSemantics:
    def test_disjoint_ranges_no_matches(self):
        a = np.array([0.0, 1.0, 2.0])
        b = np.array([100.0, 101.0])
        ia, ib = match_coincidences(a, b, 1e-3)
        assert ia.size == 0 and ib.size == 0

    def test_identical_timestamps_all_matched(self):
        t = np.linspace(0.0, 1.0, 50)
        ia, ib = match_coincidences(t, t, 1e-6)
        assert ia.size == 50
        np.testing.assert_array_equal(ia, ib)

    def test_each_event_used_once(self):
        a = np.array([0.0, 1e-10, 2e-10])
        b = np.array([0.0])
        ia, ib = match_coincidences(a, b, 1e-6)
        assert ia.size == 1
        assert ia[0] == 0  # earliest event claims the shared candidate

    def test_nearest_candidate_wins(self):
        a = np.array([10.0])
        b = np.array([9.4, 10.2, 11.0])
        ia, ib = match_coincidences(a, b, 4.0)
        assert list(ib) == [1]

    def test_window_is_half_tau_each_side(self):
        a = np.array([0.0])
        assert match_coincidences(a, np.array([0.49]), 1.0)[0].size == 1
        assert match_coincidences(a, np.array([0.51]), 1.0)[0].size == 0

    def test_offset_compensation(self):
        a = np.sort(np.random.default_rng(0).uniform(0, 1, 100))
        b = a + 12.345e-6
        ia, _ = match_coincidences(a, b, 1e-9, offset_s=12.345e-6)
        assert ia.size == 100

    def test_empty_inputs(self):
        empty = np.empty(0)
        ia, ib = match_coincidences(empty, np.array([1.0]), 1.0)
        assert ia.size == 0 and ib.size == 0


class TestLagHistogramSemantics:
    def test_single_pair_lands_in_expected_bin(self):
        counts = lag_histogram(np.array([1.0]), np.array([1.0 + 3.2e-9]), 10e-9, 1e-9)
        assert counts.sum() == 1
        assert counts[13] == 1  # floor((3.2n + 10n) / 1n) = 13

    def test_edges(self):
        a = np.array([0.0])
        assert lag_histogram(a, np.array([-10e-9]), 10e-9, 1e-9)[0] == 1
        assert lag_histogram(a, np.array([10e-9]), 10e-9, 1e-9).sum() == 0

    def test_counts_all_pairs_in_window(self):
        a = np.zeros(3)
        b = np.zeros(4)
        counts = lag_histogram(a, b, 1e-9, 1e-10)
        assert counts.sum() == 12

    def test_invalid_bins(self):
        with pytest.raises(ValueError):
            lag_histogram(np.zeros(1), np.zeros(1), 1e-9, 0.0)


@needs_compiled
class TestBackendEquivalence:
    def test_backend_is_compiled(self):
        assert BACKEND == "compiled"

    @settings(max_examples=60, deadline=None)
    @given(a=stream, b=stream, tau=st.floats(1e-9, 10.0), offset=st.floats(-5.0, 5.0))
    def test_matcher_identical(self, a, b, tau, offset):
        ra = _kernels.match_coincidences(a, b, tau, offset)
        rb = _kernels_py.match_coincidences(a, b, tau, offset)
        np.testing.assert_array_equal(ra[0], rb[0])
        np.testing.assert_array_equal(ra[1], rb[1])

    @settings(max_examples=60, deadline=None)
    @given(
        a=stream,
        b=stream,
        max_lag=st.floats(1e-3, 50.0),
        nbins=st.integers(1, 500),
    )
    def test_lag_histogram_identical(self, a, b, max_lag, nbins):
        bin_s = 2.0 * max_lag / nbins
        ra = _kernels.lag_histogram(a, b, max_lag, bin_s)
        rb = _kernels_py.lag_histogram(a, b, max_lag, bin_s)
        np.testing.assert_array_equal(ra, rb)

    def test_matcher_identical_on_dense_duplicates(self):
        rng = np.random.default_rng(7)
        a = np.sort(rng.integers(0, 50, 500).astype(np.float64) * 1e-6)
        b = np.sort(rng.integers(0, 50, 400).astype(np.float64) * 1e-6)
        for tau in (1e-7, 1e-6, 5e-6, 1e-3):
            ra = _kernels.match_coincidences(a, b, tau, 0.0)
            rb = _kernels_py.match_coincidences(a, b, tau, 0.0)
            np.testing.assert_array_equal(ra[0], rb[0])
            np.testing.assert_array_equal(ra[1], rb[1])

    def test_large_stream_smoke(self):
        rng = np.random.default_rng(11)
        a = np.sort(rng.uniform(0, 1.0, 200_000))
        b = np.sort(rng.uniform(0, 1.0, 50_000))
        ra = _kernels.match_coincidences(a, b, 2e-6, 0.0)
        rb = _kernels_py.match_coincidences(a, b, 2e-6, 0.0)
        np.testing.assert_array_equal(ra[0], rb[0])
        np.testing.assert_array_equal(ra[1], rb[1])
