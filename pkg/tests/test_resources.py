import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ushr.core import AcquisitionConfig, PipelineConfig, validate_config
from ushr.resources import (
    E_DSP_FIXED_J,
    EnergyModel,
    dsp_op_count,
    eval_energy,
    per_frame_op_count,
    resource_model,
)

ACQ = AcquisitionConfig()


def _sizes(window=20.0, stride=2.0):
    return validate_config(ACQ, PipelineConfig(window_s=window, stride_s=stride))


def test_default_buffer_formulas():
    sz = _sizes()
    fixed = resource_model(sz, "fixed")
    assert fixed.collection_bytes == 500 * 2 * 33 * 2
    assert fixed.fft_scratch_bytes == 2 * 512 * 2
    assert fixed.accumulation_bytes == 30 * 2
    assert fixed.total_bytes == 68108
    assert resource_model(sz, "float").total_bytes == 136216


@given(st.floats(2.0, 30.0), st.floats(0.04, 2.0))
def test_fixed_float_ratio_exact(window, stride):
    sz = _sizes(window, stride)
    fixed = resource_model(sz, "fixed").total_bytes
    flt = resource_model(sz, "float").total_bytes
    assert 2 * fixed == flt
    assert fixed / flt == 0.5


def test_op_count_grows_with_window_not_stride():
    counts = [dsp_op_count(_sizes(w)) for w in (5, 10, 15, 20, 25, 30)]
    assert all(a < b for a, b in zip(counts, counts[1:]))
    assert len({dsp_op_count(_sizes(20, s)) for s in (0.5, 1, 2, 4, 10)}) == 1
    assert len({resource_model(_sizes(20, s), "fixed").total_bytes for s in (0.5, 2, 10)}) == 1


def test_per_frame_ops():
    assert per_frame_op_count(_sizes()) == 50 + 32 * 6


def test_energy_default_dsp_share():
    p = eval_energy(EnergyModel(stride_s=2.0, e_dsp_j=E_DSP_FIXED_J))
    assert abs(p - 6.05e-4) <= 1e-15


def test_energy_stride_limit_and_halving():
    base = dict(e_dsp_j=1.21e-3, e_pulse_j=2e-5, p_sleep_w=1e-4, prf_hz=25.0)
    floor = 1e-4 + 25 * 2e-5
    assert abs(eval_energy(EnergyModel(stride_s=1e12, **base)) - floor) <= 1e-12
    dsp = lambda s: eval_energy(EnergyModel(stride_s=s, **base)) - floor
    assert math.isclose(dsp(4.0), dsp(2.0) / 2, rel_tol=1e-12)


@given(st.lists(st.floats(0.04, 100.0), min_size=2, max_size=10))
def test_energy_non_increasing_in_stride(strides):
    strides = sorted(strides)
    p = [eval_energy(EnergyModel(stride_s=s, e_pulse_j=1e-5, p_sleep_w=2e-4)) for s in strides]
    assert all(a >= b for a, b in zip(p, p[1:]))


@pytest.mark.parametrize("kw", [dict(e_dsp_j=-1), dict(p_sleep_w=-1e-3), dict(stride_s=0)])
def test_energy_invalid(kw):
    with pytest.raises(ValueError):
        EnergyModel(**kw)
