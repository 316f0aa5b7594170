"""File formats: channel-pair CSV/NPZ, result tables and JSON sidecars."""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from corrinterf import __version__
from corrinterf.errors import ParameterError
from corrinterf.generator import ChannelPair

_HEADER_KEYS = ("sample_rate", "calibration", "seed", "config", "fingerprint")


def _default(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if is_dataclass(obj):
        return asdict(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj)!r}")


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n")
    return path


def write_pair(pair: ChannelPair, path) -> Path:
    """Write ``pair`` as CSV (index, x1, x2) or, for a ``.npz`` suffix, as NumPy arrays."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "sample_rate": pair.sample_rate,
        "calibration": pair.calibration,
        "seed": pair.provenance.get("seed"),
        "config": pair.provenance.get("config"),
        "fingerprint": pair.provenance.get("fingerprint"),
    }
    if path.suffix == ".npz":
        np.savez(path, x1=pair.x1, x2=pair.x2, meta=json.dumps(meta))
        return path
    idx = np.arange(len(pair))
    with open(path, "w", newline="") as fh:
        for k in _HEADER_KEYS:
            fh.write(f"# {k}={meta[k]!r}\n" if isinstance(meta[k], float) else f"# {k}={meta[k]}\n")
        fh.write("index,x1,x2\n")
        # repr-exact floats keep the file byte-identical across runs and round-trippable
        np.savetxt(fh, np.column_stack([idx, pair.x1, pair.x2]), fmt=["%d", "%.17g", "%.17g"], delimiter=",")
    return path


def read_pair(path) -> ChannelPair:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            return ChannelPair(z["x1"], z["x2"], float(meta["sample_rate"]), float(meta["calibration"]), meta)
    meta = {}
    with open(path) as fh:
        header = None
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
                continue
            header = line.strip()
            break
    if header != "index,x1,x2":
        raise ParameterError(f"{path}: expected columns index,x1,x2, got {header!r}")
    for k in ("sample_rate", "calibration"):
        if k not in meta:
            raise ParameterError(f"{path}: header lacks {k}")
    n_header = len(meta) + 1
    data = np.loadtxt(path, delimiter=",", skiprows=n_header, usecols=(1, 2), ndmin=2)
    prov = {"seed": meta.get("seed"), "config": meta.get("config"), "fingerprint": meta.get("fingerprint")}
    if prov["seed"] not in (None, "None"):
        prov["seed"] = int(prov["seed"])
    return ChannelPair(data[:, 0], data[:, 1], float(meta["sample_rate"]), float(meta["calibration"]), prov)


def write_table(path, columns: dict) -> Path:
    """CSV with one column per dict entry; all columns must share a length."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n = {a.shape[0] for a in arrays}
    if len(n) != 1:
        raise ParameterError(f"columns of {path.name} differ in length")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _fmt(v) -> str:
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return repr(float(v))


def provenance_sidecar(path, *, config_hash: str, seed, extra=None) -> Path:
    """Write ``<artifact>.provenance.json`` next to an artifact."""
    path = Path(path)
    payload = {"artifact": path.name, "config_hash": config_hash, "seed": seed, "tool": "corrinterf",
               "tool_version": __version__}
    if extra:
        payload.update(extra)
    return write_json(path.with_name(path.name + ".provenance.json"), payload)
