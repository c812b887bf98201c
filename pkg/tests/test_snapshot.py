import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chainlab import snapshot
from chainlab.dynamics import RingState, sample_gibbs
from chainlab.params import ScalingParams


def test_binary_round_trip_is_exact(tmp_path):
    states = [sample_gibbs(64, seed=s) for s in range(3)]
    states[1] = RingState(states[1].eta, 2.5, {"note": "mid"})
    path = tmp_path / "s.bin"
    snapshot.write_snapshots(path, states, seed=7, params=ScalingParams(16, 0.5))
    back = snapshot.read_snapshots(path)
    assert len(back) == 3
    for s, (r, head) in zip(states, back):
        assert np.array_equal(s.eta, r.eta)
        assert r.t == s.t
        assert head["seed"] == 7 and head["params"]["b"] == 0.5
    assert back[1][0].meta == {"note": "mid"}


@given(arrays(np.float64, st.integers(2, 50), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_csv_round_trip_is_exact(eta):
    import tempfile
    from pathlib import Path

    state = RingState(eta, 1.25)
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "s.csv"
        snapshot.to_csv(state, path, seed=3)
        back, head = snapshot.from_csv(path)
    assert np.array_equal(back.eta, eta)
    assert back.t == 1.25 and head["seed"] == 3


def test_corrupt_files_are_rejected(tmp_path):
    state = sample_gibbs(8, seed=0)
    raw = snapshot.encode(state)
    bad_magic = tmp_path / "a.bin"
    bad_magic.write_bytes(b"XXXXXX" + raw[6:])
    truncated = tmp_path / "b.bin"
    truncated.write_bytes(raw[:-4])
    bad_version = tmp_path / "c.bin"
    bad_version.write_bytes(raw[:6] + (99).to_bytes(2, "little") + raw[8:])
    for path in (bad_magic, truncated, bad_version):
        with pytest.raises(ValueError):
            snapshot.read_snapshots(path)


def test_csv_site_count_is_checked(tmp_path):
    path = tmp_path / "s.csv"
    text = snapshot.to_csv(sample_gibbs(4, seed=0))
    path.write_text(text.rsplit("\n", 2)[0] + "\n")
    with pytest.raises(ValueError):
        snapshot.from_csv(path)
    path.write_text(text.replace("ring-snapshot/1", "ring-snapshot/9"))
    with pytest.raises(ValueError):
        snapshot.from_csv(path)
