import numpy as np
import pytest

from szfdpc import ChannelSet, ScenarioConfig, generate_channels, load_channels, save_channels, snr_to_power
from szfdpc.errors import ChannelFileError, DimensionError


def test_generation_is_deterministic():
    cfg = ScenarioConfig(4, 2, 2, seed=7)
    a, b = generate_channels(cfg), generate_channels(cfg)
    assert len(a.channels) == 2
    assert all(H.shape == (2, 4) for H in a.channels)
    for Ha, Hb in zip(a.channels, b.channels):
        assert np.array_equal(Ha, Hb)
    other = generate_channels(ScenarioConfig(4, 2, 2, seed=8))
    assert not np.array_equal(a.channels[0], other.channels[0])


def test_unit_variance_statistics():
    # 64*2*4 = 512 entries per draw; ~200 draws gives 1e5 entries
    entries = np.concatenate([
        np.concatenate([H.ravel() for H in generate_channels(ScenarioConfig(64, 2, 4, seed=s)).channels])
        for s in range(200)])
    assert entries.size >= 1e5
    assert 0.98 <= np.mean(np.abs(entries) ** 2) <= 1.02
    assert abs(entries.mean()) < 0.02
    # circular symmetry: real and imaginary parts each carry half the power
    assert abs(np.var(entries.real) - 0.5) < 0.01


def test_infeasible_dimensions_rejected():
    with pytest.raises(DimensionError):
        ScenarioConfig(2, 2, 2)


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(2, 1, 1, 1.0, per_antenna_power=[0.7, 0.7])
    with pytest.raises(ValueError):
        ScenarioConfig(2, 1, 1, 1.0, per_antenna_power=[1.0, 0.0])
    with pytest.raises(ValueError):
        ScenarioConfig(2, 1, 1, 1.0, tolerance=0.0)
    cfg = ScenarioConfig(4, 1, 2, 2.0)
    assert np.allclose(cfg.per_antenna_power, 0.5)


@pytest.mark.parametrize("snr, watts", [(0, 1.0), (10, 10.0), (40, 10000.0)])
def test_snr_to_power(snr, watts):
    assert snr_to_power(snr) == pytest.approx(watts, rel=1e-14)


def test_round_trip_bit_exact(tmp_path):
    chans = generate_channels(ScenarioConfig(5, 2, 3, seed=3))
    path = tmp_path / "h.txt"
    save_channels(path, chans)
    back = load_channels(path)
    assert back.n_users == 3
    for a, b in zip(chans.channels, back.channels):
        assert np.array_equal(a, b)
    assert path.read_text().splitlines()[0] == "5 2 3"


def test_truncated_file(tmp_path):
    chans = generate_channels(ScenarioConfig(4, 2, 2, seed=3))
    path = tmp_path / "h.txt"
    save_channels(path, chans)
    text = path.read_text().rstrip()
    path.write_text(text[: len(text) - 30])
    with pytest.raises(ChannelFileError):
        load_channels(path)
    path.write_text("\n".join(text.splitlines()[:3]))
    with pytest.raises(ChannelFileError):
        load_channels(path)


def test_dimension_mismatch(tmp_path):
    path = tmp_path / "h.txt"
    path.write_text("3 1 1\n1.0 0.0 2.0 0.0\n")
    with pytest.raises(DimensionError):
        load_channels(path)
    path.write_text("2 1 1\n1.0 0.0 2.0 0.0\n3.0 0.0 4.0 0.0\n")
    with pytest.raises(DimensionError):
        load_channels(path)


def test_garbage_header(tmp_path):
    path = tmp_path / "h.txt"
    path.write_text("two one one\n")
    with pytest.raises(ChannelFileError):
        load_channels(path)


def test_channelset_check():
    cfg = ScenarioConfig(4, 2, 2)
    with pytest.raises(DimensionError):
        ChannelSet([np.zeros((2, 4))]).check(cfg)
