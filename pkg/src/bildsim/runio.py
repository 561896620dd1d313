"""Run output plumbing: atomic file writes, deterministic serialization,
trajectory files, and run manifests.

All numeric outputs depend only on (config, seed); the manifest additionally
records wall-clock time and is therefore written last and excluded from
byte-level reproducibility comparisons.
"""

import csv
import hashlib
import io
import json
import os
import tempfile

import numpy as np

from .brownian import TrajectoryEnsemble
from .errors import ValidationError

TRAJECTORY_SCHEMA_VERSION = 1


def write_atomic(path: str, data: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no float repr surprises, newline end."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_json(path: str, obj) -> None:
    write_atomic(path, canonical_json(obj).encode("utf-8"))


def write_csv(path: str, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    write_atomic(path, buf.getvalue().encode("utf-8"))


def config_hash(config_obj: dict) -> str:
    return hashlib.sha256(canonical_json(config_obj).encode("utf-8")).hexdigest()


def write_manifest(
    out_dir: str,
    config_obj: dict,
    version: str,
    wall_clock: float,
    seed: int,
    outputs: list[str],
) -> None:
    manifest = {
        "config_hash": config_hash(config_obj),
        "artifact_version": version,
        "wall_clock_seconds": wall_clock,
        "seed": seed,
        "outputs": sorted(outputs),
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)


def save_trajectories(path: str, ensemble: TrajectoryEnsemble) -> None:
    """Binary columnar file: one JSON header line, then raw float64 blocks.

    Blocks are little-endian, in the order listed in the header; array shapes
    are recorded there. Deterministic byte-for-byte for a given ensemble.
    """
    header = {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "config_hash": config_hash(ensemble.config.to_dict()),
        "dtype": "<f8",
        "blocks": [
            {"name": "times", "shape": list(ensemble.times.shape)},
            {"name": "x", "shape": list(ensemble.x.shape)},
        ],
    }
    arrays = [ensemble.times, ensemble.x]
    if ensemble.p is not None:
        header["blocks"].append({"name": "p", "shape": list(ensemble.p.shape)})
        arrays.append(ensemble.p)
    buf = io.BytesIO()
    buf.write(canonical_json(header).encode("utf-8"))
    for arr in arrays:
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    write_atomic(path, buf.getvalue())


def load_trajectories(path: str) -> dict:
    """Read the columnar trajectory format back into named arrays."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad trajectory header: {exc}") from exc
        if header.get("schema_version") != TRAJECTORY_SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported trajectory schema {header.get('schema_version')}"
            )
        out = {"header": header}
        for block in header["blocks"]:
            shape = tuple(block["shape"])
            count = int(np.prod(shape))
            data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
            out[block["name"]] = data.reshape(shape)
    return out


def trajectories_to_csv_rows(ensemble: TrajectoryEnsemble):
    """Long-format rows (trajectory, time, particle, x[, p]) for small runs."""
    has_p = ensemble.p is not None
    for traj in range(ensemble.x.shape[0]):
        for ti, t in enumerate(ensemble.times):
            for part in range(ensemble.x.shape[2]):
                row = [traj, repr(float(t)), part, repr(float(ensemble.x[traj, ti, part]))]
                if has_p:
                    row.append(repr(float(ensemble.p[traj, ti, part])))
                yield row
