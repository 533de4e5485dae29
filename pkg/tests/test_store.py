"""Binary policy files: round-trip fidelity and corruption detection."""

import numpy as np
import pytest

from qcdi import (
    DigestMismatch,
    StoreFormatError,
    get_preset,
    instance_digest,
    load_policy,
    save_policy,
    solve,
)
from qcdi.store import _HEAD, MAGIC


@pytest.fixture(scope="module")
def saved(tmp_path_factory):
    preset = get_preset("m2-sym-fa10")
    vf, policy = solve(preset.model, preset.costs, 25, record_snapshots=4)
    path = tmp_path_factory.mktemp("store") / "policy.qcdp"
    save_policy(path, preset.model, preset.costs, vf, policy)
    return preset, vf, policy, path


def test_round_trip_preserves_everything(saved):
    preset, vf, policy, path = saved
    loaded = load_policy(path)
    assert loaded.digest == instance_digest(preset.model, preset.costs)
    assert instance_digest(loaded.model, loaded.costs) == loaded.digest
    assert loaded.model.p0 == preset.model.p0
    assert loaded.model.p == preset.model.p
    assert np.array_equal(loaded.model.nu, preset.model.nu)
    assert np.array_equal(loaded.model.f, preset.model.f)
    assert np.array_equal(loaded.costs.a, preset.costs.a)
    assert loaded.costs.c == preset.costs.c
    assert loaded.value_function.grid.G == vf.grid.G
    assert np.array_equal(loaded.value_function.values, vf.values)
    assert loaded.value_function.iteration_count == vf.iteration_count
    assert loaded.value_function.certified_gap == vf.certified_gap
    assert loaded.value_function.final_delta == vf.final_delta
    assert np.array_equal(loaded.policy.verdicts, policy.verdicts)
    assert np.array_equal(loaded.policy.stop_labels, policy.stop_labels)
    assert loaded.policy.eps_stop == policy.eps_stop
    assert loaded.policy.tie_eps == policy.tie_eps
    assert len(loaded.policy.region_snapshots) == 5
    for got, want in zip(loaded.policy.region_snapshots, policy.region_snapshots):
        assert np.array_equal(got, want)


def test_expected_digest_guard(saved):
    preset, _, _, path = saved
    good = instance_digest(preset.model, preset.costs)
    load_policy(path, expected_digest=good)
    with pytest.raises(DigestMismatch):
        load_policy(path, expected_digest="0" * 64)


def _mangle(path, tmp_path, mutate):
    blob = bytearray(path.read_bytes())
    mutate(blob)
    out = tmp_path / "mangled.qcdp"
    out.write_bytes(bytes(blob))
    return out


def test_bad_magic_rejected(saved, tmp_path):
    _, _, _, path = saved
    bad = _mangle(path, tmp_path, lambda b: b.__setitem__(slice(0, 4), b"NOPE"))
    with pytest.raises(StoreFormatError, match="magic"):
        load_policy(bad)


def test_unknown_version_rejected(saved, tmp_path):
    _, _, _, path = saved
    bad = _mangle(path, tmp_path, lambda b: b.__setitem__(4, 99))
    with pytest.raises(StoreFormatError, match="version"):
        load_policy(bad)


def test_truncated_file_rejected(saved, tmp_path):
    _, _, _, path = saved
    blob = path.read_bytes()
    for cut in (10, _HEAD.size + 5, len(blob) - 7):
        out = tmp_path / f"cut{cut}.qcdp"
        out.write_bytes(blob[:cut])
        with pytest.raises(StoreFormatError, match="truncated"):
            load_policy(out)


def test_trailing_bytes_rejected(saved, tmp_path):
    _, _, _, path = saved
    bad = _mangle(path, tmp_path, lambda b: b.extend(b"\x00"))
    with pytest.raises(StoreFormatError, match="trailing"):
        load_policy(bad)


def test_digest_field_must_match_embedded_instance(saved, tmp_path):
    _, _, _, path = saved
    digest_offset = _HEAD.size - 64 - 4  # digest sits before the cfg length

    def flip(blob):
        blob[digest_offset] = ord("0") if blob[digest_offset] != ord("0") else ord("1")

    bad = _mangle(path, tmp_path, flip)
    with pytest.raises(StoreFormatError, match="digest"):
        load_policy(bad)


def test_corrupted_coordinates_rejected(saved, tmp_path):
    _, _, _, path = saved
    head = _HEAD.unpack(path.read_bytes()[: _HEAD.size])
    cfg_len = head[-1]
    coord_offset = _HEAD.size + cfg_len

    def bump(blob):
        blob[coord_offset] ^= 0xFF

    bad = _mangle(path, tmp_path, bump)
    with pytest.raises(StoreFormatError, match="coordinates"):
        load_policy(bad)


def test_magic_constant_is_stable():
    assert MAGIC == b"QCDP"
    assert _HEAD.size == 4 + 4 * 3 + 8 * 2 + 8 * 4 + 4 + 64 + 4
