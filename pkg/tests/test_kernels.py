"""Compiled and pure-numpy kernel backends must agree to rounding error."""

import os
import subprocess
import sys

import numpy as np
import pytest

from soundtrail import _kernels
from soundtrail._kernels import _kernels_py

_kernels_cy = pytest.importorskip(
    "soundtrail._kernels._kernels_cy",
    reason="compiled kernel extension not built",
)

RATES = [(48000, 44100), (44100, 44100), (22050, 44100), (8000, 44100),
         (96000, 44100)]


class TestResampleEquivalence:
    @pytest.mark.parametrize("src,dst", RATES)
    def test_random_signals_agree(self, src, dst):
        rng = np.random.default_rng(src % 101)
        x = rng.normal(size=src // 2)  # half a second
        table = _kernels_py.resample_table(src, dst)
        got_py = _kernels_py.resample_sinc(x, src, dst, table)
        got_cy = _kernels_cy.resample_sinc(
            np.ascontiguousarray(x), float(src), float(dst),
            np.ascontiguousarray(table),
        )
        assert got_py.shape == got_cy.shape
        assert np.allclose(got_py, got_cy, rtol=1e-10, atol=1e-12)

    def test_dc_gain_is_one_in_both(self):
        table = _kernels_py.resample_table(48000, 44100)
        x = np.ones(4800)
        for backend in (_kernels_py, _kernels_cy):
            y = backend.resample_sinc(x, 48000.0, 44100.0, table)
            middle = y[100:-100]
            assert np.allclose(middle, 1.0, atol=1e-9)

    @pytest.mark.parametrize("n", [0, 1, 5, 63])
    def test_tiny_inputs_agree(self, n):
        rng = np.random.default_rng(n)
        x = rng.normal(size=n)
        table = _kernels_py.resample_table(48000, 44100)
        got_py = _kernels_py.resample_sinc(x, 48000, 44100, table)
        got_cy = _kernels_cy.resample_sinc(
            np.ascontiguousarray(x), 48000.0, 44100.0, table
        )
        assert got_py.shape == got_cy.shape
        assert np.allclose(got_py, got_cy, rtol=1e-10, atol=1e-12)


class TestLagCostsEquivalence:
    @pytest.mark.parametrize("seed", range(8))
    def test_random_envelopes_agree(self, seed):
        rng = np.random.default_rng(seed)
        na = int(rng.integers(50, 400))
        nb = int(rng.integers(50, 400))
        a = rng.uniform(size=na)
        b = rng.uniform(size=nb)
        max_lag = int(rng.integers(5, 60))
        min_overlap = int(rng.integers(1, 40))
        got_py = _kernels_py.lag_costs(a, b, max_lag, min_overlap)
        got_cy = _kernels_cy.lag_costs(
            np.ascontiguousarray(a), np.ascontiguousarray(b),
            max_lag, min_overlap,
        )
        assert got_py.shape == got_cy.shape == (2 * max_lag + 1,)
        assert np.array_equal(np.isnan(got_py), np.isnan(got_cy))
        mask = ~np.isnan(got_py)
        assert np.allclose(got_py[mask], got_cy[mask], rtol=1e-12, atol=1e-15)

    def test_all_nan_when_overlap_impossible(self):
        a = np.ones(10)
        b = np.ones(10)
        for backend in (_kernels_py, _kernels_cy):
            out = backend.lag_costs(a, b, 3, 50)
            assert np.isnan(out).all()

    def test_identical_signals_zero_at_center(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(size=200)
        for backend in (_kernels_py, _kernels_cy):
            out = backend.lag_costs(
                np.ascontiguousarray(x), np.ascontiguousarray(x), 10, 20
            )
            assert out[10] == 0.0


class TestBackendSelection:
    def check_backend(self, env_value, expected):
        env = dict(os.environ)
        if env_value is None:
            env.pop("SOUNDTRAIL_KERNELS", None)
        else:
            env["SOUNDTRAIL_KERNELS"] = env_value
        out = subprocess.run(
            [sys.executable, "-c",
             "from soundtrail import _kernels; print(_kernels.BACKEND)"],
            capture_output=True, text=True, env=env, check=True,
        )
        assert out.stdout.strip() == expected

    def test_default_prefers_compiled(self):
        self.check_backend(None, "cython")

    def test_env_var_forces_python(self):
        self.check_backend("python", "python")

    def test_wrapper_dispatches_to_selected_backend(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(size=300)
        b = rng.uniform(size=300)
        via_wrapper = _kernels.lag_costs(a, b, 20, 10)
        direct = (_kernels_cy if _kernels.BACKEND == "cython"
                  else _kernels_py).lag_costs(
            np.ascontiguousarray(a), np.ascontiguousarray(b), 20, 10
        )
        assert np.array_equal(via_wrapper, direct, equal_nan=True)
