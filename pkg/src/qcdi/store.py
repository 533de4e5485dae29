"""Versioned binary persistence for solved policies.

Layout (little-endian):

    magic    4s   b"QCDP"
    version  u32
    M        u32
    G        u32
    n_points u64
    n_iters  u64
    certified_gap f64
    final_delta   f64
    eps_stop      f64
    tie_eps       f64
    n_snapshots   u32
    digest   64s  ascii sha256 of the instance
    cfg_len  u32  followed by cfg_len bytes of instance JSON
    coords   n_points * (M+1) u32, lexicographic order
    values   n_points f64
    verdicts n_points u8
    snapshots n_snapshots * n_points u8 (stopping sets of iterates 0..)

The stop-label tie sets are derived data and are recomputed on load.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DigestMismatch, StoreFormatError
from .grid import build_grid
from .model import CostSpec, ModelSpec, instance_digest, instance_to_dict, parse_instance
from .solver import Policy, ValueFunction

MAGIC = b"QCDP"
VERSION = 1
_HEAD = struct.Struct("<4sIIIQQddddI64sI")


@dataclass(frozen=True)
class LoadedPolicy:
    model: ModelSpec
    costs: CostSpec
    value_function: ValueFunction
    policy: Policy
    digest: str


def save_policy(path, model: ModelSpec, costs: CostSpec, vf: ValueFunction,
                policy: Policy) -> None:
    grid = vf.grid
    cfg = json.dumps(instance_to_dict(model, costs), sort_keys=True).encode("utf-8")
    digest = instance_digest(model, costs).encode("ascii")
    snapshots = [np.asarray(s, dtype=np.uint8) for s in policy.region_snapshots]
    head = _HEAD.pack(
        MAGIC,
        VERSION,
        grid.M,
        grid.G,
        grid.n_points,
        vf.iteration_count,
        vf.certified_gap,
        vf.final_delta,
        policy.eps_stop,
        policy.tie_eps,
        len(snapshots),
        digest,
        len(cfg),
    )
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(cfg)
        fh.write(np.ascontiguousarray(grid.points, dtype=np.uint32).tobytes())
        fh.write(np.ascontiguousarray(vf.values, dtype=np.float64).tobytes())
        fh.write(np.ascontiguousarray(policy.verdicts, dtype=np.uint8).tobytes())
        for snap in snapshots:
            fh.write(snap.tobytes())


def _read_exact(fh, count: int) -> bytes:
    blob = fh.read(count)
    if len(blob) != count:
        raise StoreFormatError(f"truncated file: wanted {count} bytes, got {len(blob)}")
    return blob


def load_policy(path, *, expected_digest: str | None = None) -> LoadedPolicy:
    with open(path, "rb") as fh:
        head = _read_exact(fh, _HEAD.size)
        (
            magic,
            version,
            m_hyp,
            g_res,
            n_points,
            n_iters,
            certified_gap,
            final_delta,
            eps_stop,
            tie_eps,
            n_snapshots,
            digest_raw,
            cfg_len,
        ) = _HEAD.unpack(head)
        if magic != MAGIC:
            raise StoreFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise StoreFormatError(f"unsupported version {version}")
        digest = digest_raw.decode("ascii")
        if expected_digest is not None and digest != expected_digest:
            raise DigestMismatch(
                f"file is for instance {digest[:12]}.., expected {expected_digest[:12]}.."
            )
        cfg = json.loads(_read_exact(fh, cfg_len).decode("utf-8"))
        model, costs = parse_instance(cfg)
        if instance_digest(model, costs) != digest:
            raise StoreFormatError("embedded instance does not match stored digest")
        grid = build_grid(m_hyp, g_res)
        if grid.n_points != n_points:
            raise StoreFormatError(
                f"header claims {n_points} points, grid has {grid.n_points}"
            )
        coords = np.frombuffer(
            _read_exact(fh, n_points * (m_hyp + 1) * 4), dtype=np.uint32
        ).reshape(n_points, m_hyp + 1)
        if not np.array_equal(coords, grid.points):
            raise StoreFormatError("stored coordinates disagree with grid enumeration")
        values = np.frombuffer(_read_exact(fh, n_points * 8), dtype=np.float64).copy()
        verdicts = np.frombuffer(_read_exact(fh, n_points), dtype=np.uint8).copy()
        snapshots = [
            np.frombuffer(_read_exact(fh, n_points), dtype=np.uint8).astype(bool)
            for _ in range(n_snapshots)
        ]
        trailing = fh.read(1)
        if trailing:
            raise StoreFormatError("trailing bytes after policy payload")
    vf = ValueFunction(
        grid=grid,
        values=values,
        iteration_count=n_iters,
        certified_gap=certified_gap,
        final_delta=final_delta,
        snapshots=snapshots,
    )
    h_all = grid.points_float @ costs.a
    stop = verdicts > 0
    stop_labels = stop[:, None] & (h_all <= (h_all.min(axis=1) + tie_eps)[:, None])
    policy = Policy(
        grid=grid,
        verdicts=verdicts,
        stop_labels=stop_labels,
        eps_stop=eps_stop,
        tie_eps=tie_eps,
        region_snapshots=snapshots,
    )
    return LoadedPolicy(
        model=model, costs=costs, value_function=vf, policy=policy, digest=digest
    )
