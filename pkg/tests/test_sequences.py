import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paircorr.errors import InvalidSpec, NonIncreasing, SequenceOverflow, TooShort
from paircorr.sequences import SequenceSpec, from_values, load_explicit, materialize, min_gap


def test_power_squares():
    seq = materialize(SequenceSpec.power(2), 3)
    assert list(seq.values) == [1.0, 4.0, 9.0]
    assert seq.min_gap == 3.0


def test_n_plus_log_n():
    seq = materialize(SequenceSpec.n_plus_log_n(), 2)
    assert seq.values[1] == 2 + math.log(2)
    assert seq.min_gap == pytest.approx(1 + math.log(2), abs=1e-15)


def test_sqrt_preset_records_small_gap():
    seq = materialize(SequenceSpec.power(0.5), 4)
    np.testing.assert_allclose(seq.values, [1, math.sqrt(2), math.sqrt(3), 2], rtol=0, atol=1e-15)
    assert seq.min_gap == pytest.approx(2 - math.sqrt(3), abs=1e-15)
    assert seq.slow_growth


def test_min_gap_power_15():
    seq = materialize(SequenceSpec.power(1.5), 1000)
    assert min_gap(seq) == pytest.approx(2 ** 1.5 - 1, rel=1e-15)
    assert min_gap(from_values([1, 4, 9])) == 3


def test_min_gap_too_short():
    with pytest.raises(TooShort):
        min_gap(materialize(SequenceSpec.power(2), 1))


@pytest.mark.parametrize("bad", [
    lambda: SequenceSpec.power(0),
    lambda: SequenceSpec.power(-1),
    lambda: SequenceSpec.lacunary(1.0),
    lambda: SequenceSpec.polynomial([3]),
    lambda: SequenceSpec.polynomial([0, 1, -1]),
    lambda: SequenceSpec("fibonacci"),
])
def test_invalid_specs(bad):
    with pytest.raises(InvalidSpec):
        bad()


def test_non_increasing():
    # 1 + n^3 - 6 n^2 + 12 n ... use a cubic with a local maximum inside [1, N]
    with pytest.raises(NonIncreasing):
        materialize(SequenceSpec.polynomial([40, -12, -3, 1]), 6)
    with pytest.raises(NonIncreasing):
        from_values([1.0, 1.0, 2.0])


def test_overflow():
    with pytest.raises(SequenceOverflow):
        materialize(SequenceSpec.lacunary(10.0), 400)


def test_n_log_n_starts_at_zero():
    seq = materialize(SequenceSpec.n_log_n(), 5)
    assert seq.values[0] == 0.0
    assert seq.values[4] == pytest.approx(5 * math.log(5))


def test_parse_forms(tmp_path):
    assert SequenceSpec.parse("power:1.5") == SequenceSpec.power(1.5)
    assert SequenceSpec.parse("poly:0,1,1") == SequenceSpec.polynomial([0, 1, 1])
    assert SequenceSpec.parse("lacunary:2").kind == "lacunary"
    assert SequenceSpec.parse("linear").params["theta"] == 1.0
    path = tmp_path / "v.txt"
    path.write_text("# three values\n1.5\n2.5\n\n4\n")
    spec = SequenceSpec.parse(f"file:{path}")
    assert spec == load_explicit(path)
    assert list(materialize(spec, 3).values) == [1.5, 2.5, 4.0]
    with pytest.raises(InvalidSpec):
        SequenceSpec.parse("power:abc")
    with pytest.raises(InvalidSpec):
        materialize(spec, 4)


def test_values_read_only():
    seq = materialize(SequenceSpec.power(1.5), 10)
    with pytest.raises(ValueError):
        seq.values[0] = 5.0


def test_head():
    seq = materialize(SequenceSpec.power(1.5), 10)
    h = seq.head(4)
    assert h.N == 4 and h.min_gap == seq.min_gap


@given(st.sampled_from(["power", "polynomial", "lacunary", "n_log_n", "n_plus_log_n"]),
       st.floats(0.2, 4.0), st.integers(2, 200))
@settings(max_examples=60, deadline=None)
def test_json_roundtrip_and_monotone(kind, x, N):
    spec = {
        "power": lambda: SequenceSpec.power(x),
        "polynomial": lambda: SequenceSpec.polynomial([1.0, 0.5, x]),
        "lacunary": lambda: SequenceSpec.lacunary(1.0 + x),
        "n_log_n": SequenceSpec.n_log_n,
        "n_plus_log_n": SequenceSpec.n_plus_log_n,
    }[kind]()
    assert SequenceSpec.from_json(spec.to_json()) == spec
    seq = materialize(spec, N)
    assert np.all(np.diff(seq.values) > 0)
    assert seq.min_gap == np.diff(seq.values).min()
