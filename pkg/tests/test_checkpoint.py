import numpy as np
import pytest

from tnvqc.checkpoint import Checkpoint, dumps, load_checkpoint, loads, save_checkpoint
from tnvqc.errors import FormatError
from tnvqc.features import fit_pca
from tnvqc.mps import init_mps
from tnvqc.vqc import init_params


def assert_same(a: Checkpoint, b: Checkpoint):
    assert a.mode == b.mode
    if a.mps is None:
        assert b.mps is None
    else:
        assert a.mps.output_site == b.mps.output_site
        np.testing.assert_array_equal(a.mps.cores, b.mps.cores)
        np.testing.assert_array_equal(a.mps.out_core, b.mps.out_core)
    np.testing.assert_array_equal(a.vqc_params, b.vqc_params)
    if a.pca is not None:
        np.testing.assert_array_equal(a.pca.mean, b.pca.mean)
        np.testing.assert_array_equal(a.pca.components, b.pca.components)
        np.testing.assert_array_equal(a.pca.explained_variances, b.pca.explained_variances)


@pytest.fixture
def checkpoints(rng):
    return [
        Checkpoint("mps-vqc", mps=init_mps(20, 3, 4, 7, seed=1, noise=0.3), vqc_params=init_params(2)),
        Checkpoint("mps-classifier", mps=init_mps(9, 2, 2, 0, seed=3, noise=0.3)),
        Checkpoint("pca-vqc", vqc_params=init_params(4), pca=fit_pca(rng.random((12, 30)))),
    ]


def test_round_trip(tmp_path, checkpoints):
    for i, ckpt in enumerate(checkpoints):
        path = tmp_path / f"{i}.ckpt"
        save_checkpoint(path, ckpt)
        assert_same(ckpt, load_checkpoint(path))


def test_layout(checkpoints):
    buf = dumps(checkpoints[1])
    assert buf[:8] == b"TNVQCKPT"
    # header, 9 sites in their true shapes, crc trailer
    sites = checkpoints[1].mps.sites
    assert len(buf) == 36 + 8 * sum(s.size for s in sites) + 4
    first = np.frombuffer(buf[36 : 36 + 8 * sites[0].size], dtype="<f8")
    np.testing.assert_array_equal(first, sites[0].ravel())


@pytest.mark.parametrize("cut", [1, 4, 100, 1000])
def test_truncated(checkpoints, cut):
    buf = dumps(checkpoints[0])
    with pytest.raises(FormatError):
        loads(buf[:-cut])


def test_bad_magic(checkpoints):
    buf = bytearray(dumps(checkpoints[0]))
    buf[0:8] = b"NOTACKPT"
    with pytest.raises(FormatError, match="magic"):
        loads(bytes(buf))


def test_corrupt_payload(checkpoints):
    buf = bytearray(dumps(checkpoints[2]))
    buf[60] ^= 0xFF
    with pytest.raises(FormatError, match="checksum"):
        loads(bytes(buf))


def test_empty_file(tmp_path):
    (tmp_path / "e").write_bytes(b"")
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "e")
