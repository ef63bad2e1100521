"""Checkpoint roundtrips and corruption detection."""

import numpy as np
import pytest

from kgembed.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    CheckpointMetadata,
    load_checkpoint,
    save_checkpoint,
)
from kgembed.errors import (
    BadMagicError,
    CheckpointError,
    ChecksumError,
    ShapeMismatchError,
    TruncatedPayloadError,
    VersionError,
)
from kgembed.models import init_model, init_transf_from_transe, param_arrays

from helpers import config_for

ALL_KINDS = ("transe", "transh", "transr", "transf")


def make_metadata(kind, config, n_entities=6, n_relations=3, epoch=7):
    return CheckpointMetadata(
        model=kind,
        n_entities=n_entities,
        n_relations=n_relations,
        dim_e=config.dim_e,
        dim_r=config.dim_r,
        n_bases=config.n_bases,
        norm=config.norm,
        normalize_projections=config.normalize_projections,
        vocab_hash="deadbeef",
        train_config={"margin": 1.0, "seed": 3},
        epoch=epoch,
    )


def saved(tmp_path, kind, seed=0):
    config = config_for(kind, dim_e=4, dim_r=5 if kind in ("transr", "transf") else 4)
    params = init_model(kind, config, 6, 3, np.random.default_rng(seed))
    metadata = make_metadata(kind, config)
    path = tmp_path / f"{kind}.kgec"
    save_checkpoint(params, metadata, path)
    return params, metadata, path


class TestRoundtrip:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_bitwise_identity(self, tmp_path, kind):
        params, metadata, path = saved(tmp_path, kind)
        loaded, loaded_meta = load_checkpoint(path)
        for name, array in param_arrays(params).items():
            restored = param_arrays(loaded)[name]
            assert restored.dtype == np.float32
            np.testing.assert_array_equal(restored, array)
        assert loaded_meta == metadata

    def test_double_roundtrip_identical_bytes(self, tmp_path):
        params, metadata, path = saved(tmp_path, "transf")
        loaded, loaded_meta = load_checkpoint(path)
        second = tmp_path / "again.kgec"
        save_checkpoint(loaded, loaded_meta, second)
        assert path.read_bytes() == second.read_bytes()

    def test_loaded_arrays_are_writable(self, tmp_path):
        _, _, path = saved(tmp_path, "transe")
        loaded, _ = load_checkpoint(path)
        loaded.ent[0, 0] = 1.0  # must not raise

    def test_transfer_composition_from_loaded_transe(self, tmp_path):
        params, metadata, path = saved(tmp_path, "transe")
        loaded, _ = load_checkpoint(path)
        config = config_for("transf", dim_e=4, dim_r=4, n_bases=2)
        warm = init_transf_from_transe(loaded, config, np.random.default_rng(1))
        np.testing.assert_array_equal(warm.ent, params.ent)


class TestCorruption:
    def test_every_payload_byte_flip_is_detected(self, tmp_path):
        _, _, path = saved(tmp_path, "transf")
        blob = bytearray(path.read_bytes())
        meta_len = int.from_bytes(blob[8:12], "little")
        payload_start = 12 + meta_len
        corrupt = tmp_path / "corrupt.kgec"
        for offset in range(payload_start, len(blob) - 4):
            mutated = bytearray(blob)
            mutated[offset] ^= 0xFF
            corrupt.write_bytes(bytes(mutated))
            with pytest.raises(CheckpointError):
                load_checkpoint(corrupt)

    def test_crc_byte_flip_is_detected(self, tmp_path):
        _, _, path = saved(tmp_path, "transe")
        blob = bytearray(path.read_bytes())
        blob[-1] ^= 0x01
        path.write_bytes(bytes(blob))
        with pytest.raises(ChecksumError):
            load_checkpoint(path)

    def test_bad_magic(self, tmp_path):
        _, _, path = saved(tmp_path, "transe")
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(BadMagicError):
            load_checkpoint(path)

    def test_future_version_rejected(self, tmp_path):
        _, _, path = saved(tmp_path, "transe")
        blob = bytearray(path.read_bytes())
        blob[4:8] = (FORMAT_VERSION + 1).to_bytes(4, "little")
        path.write_bytes(bytes(blob))
        with pytest.raises(VersionError):
            load_checkpoint(path)

    def test_truncation_detected(self, tmp_path):
        _, _, path = saved(tmp_path, "transr")
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises((TruncatedPayloadError, ChecksumError)):
            load_checkpoint(path)

    def test_shape_drift_detected(self, tmp_path):
        # metadata claiming different dims than the payload shapes
        params, metadata, path = saved(tmp_path, "transe")
        metadata.dim_e = 9
        save_path = tmp_path / "drift.kgec"
        save_checkpoint(params, metadata, save_path)
        with pytest.raises(ShapeMismatchError):
            load_checkpoint(save_path)

    def test_metadata_garble_is_reported(self, tmp_path):
        _, _, path = saved(tmp_path, "transe")
        blob = bytearray(path.read_bytes())
        blob[12] ^= 0xFF  # first metadata byte
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_magic_constant(self):
        assert MAGIC == b"KGEC"
