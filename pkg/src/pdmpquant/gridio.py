"""Grid files: a trained quantization tree as versioned UTF-8 JSON.

Floats are written as hexadecimal strings (``float.hex``) so a reload is
bit-exact.  Transitions are stored as sparse integer visit counts (CSR
arrays); weights and probabilities are recomputed from them.  A name
ending in ``.gz`` is gzip-compressed with a zero timestamp, so equal trees
give equal bytes.  Writers hold an advisory lock on ``<path>.lock``.
"""
from __future__ import annotations

import fcntl
import gzip
import json
import os
import tempfile
from contextlib import contextmanager

import numpy as np
from scipy import sparse

from .errors import ConfigError
from .pdmp import State
from .quantizer import Codebook, QuantizationTree

FORMAT_VERSION = 1


def _hex(a):
    return [float(v).hex() for v in np.ravel(a)]


def _unhex(a):
    return np.array([float.fromhex(v) for v in a], dtype=float)


def _jsonable(v):
    if isinstance(v, float):
        return {"hex": v.hex()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _from_jsonable(v):
    if isinstance(v, dict):
        if set(v) == {"hex"}:
            return float.fromhex(v["hex"])
        return {k: _from_jsonable(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_from_jsonable(x) for x in v]
    return v


def tree_to_dict(tree: QuantizationTree) -> dict:
    steps = []
    for k, cb in enumerate(tree.codebooks):
        step = {
            "k": k,
            "modes": [int(m) for m in cb.modes],
            "dim": int(cb.coords.shape[1]),
            "coords": _hex(cb.coords),
            "sojourns": _hex(cb.sojourns),
            "weights": _hex(cb.weights),
            "distortion": float(tree.distortion[k]).hex(),
            "distortion_Z": float(tree.distortion_Z[k]).hex(),
            "distortion_S": float(tree.distortion_S[k]).hex(),
        }
        if k > 0:
            c = tree.counts[k - 1].tocsr()
            c.sort_indices()
            step["transition_counts"] = {
                "shape": list(c.shape),
                "indptr": c.indptr.tolist(),
                "indices": c.indices.tolist(),
                "data": c.data.astype(np.int64).tolist(),
            }
        steps.append(step)
    return {
        "format_version": FORMAT_VERSION,
        "model_id": tree.model_id,
        "model_params": _jsonable(tree.model_params),
        "x0": {"mode": tree.x0.mode, "coords": _hex(tree.x0.coords)},
        "N": tree.N,
        "p": float(tree.p).hex(),
        "K": tree.K,
        "seed": tree.seed,
        "training_samples": tree.training_samples,
        "sample_count": tree.sample_count,
        "steps": steps,
    }


def tree_from_dict(d: dict) -> QuantizationTree:
    if d.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported grid format version {d.get('format_version')!r}")
    codebooks, counts = [], []
    for s in d["steps"]:
        n = len(s["modes"])
        cb = Codebook(s["k"], np.array(s["modes"], dtype=np.int64),
                      _unhex(s["coords"]).reshape(n, s["dim"]), _unhex(s["sojourns"]), _unhex(s["weights"]))
        codebooks.append(cb)
        if s["k"] > 0:
            t = s["transition_counts"]
            counts.append(sparse.csr_matrix(
                (np.array(t["data"], dtype=np.int64), np.array(t["indices"], dtype=np.int32),
                 np.array(t["indptr"], dtype=np.int32)), shape=tuple(t["shape"])))
    steps = d["steps"]
    return QuantizationTree(
        model_id=d["model_id"], x0=State(d["x0"]["mode"], _unhex(d["x0"]["coords"])), N=d["N"],
        p=float.fromhex(d["p"]), K=d["K"], seed=d["seed"], training_samples=d["training_samples"],
        sample_count=d["sample_count"], codebooks=codebooks, counts=counts,
        distortion=np.array([float.fromhex(s["distortion"]) for s in steps]),
        distortion_Z=np.array([float.fromhex(s["distortion_Z"]) for s in steps]),
        distortion_S=np.array([float.fromhex(s["distortion_S"]) for s in steps]),
        model_params=_from_jsonable(d["model_params"]),
    )


@contextmanager
def _locked(path):
    with open(str(path) + ".lock", "w") as lock:
        fcntl.flock(lock, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(lock, fcntl.LOCK_UN)


def save_tree(tree: QuantizationTree, path) -> None:
    path = os.fspath(path)
    text = json.dumps(tree_to_dict(tree), separators=(",", ":"), sort_keys=True).encode("utf-8")
    if path.endswith(".gz"):
        text = gzip.compress(text, mtime=0)
    folder = os.path.dirname(os.path.abspath(path))
    with _locked(path):
        fd, tmp = tempfile.mkstemp(dir=folder, prefix=".grid-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def load_tree(path) -> QuantizationTree:
    path = os.fspath(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if path.endswith(".gz"):
        raw = gzip.decompress(raw)
    try:
        d = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path} is not a grid file: {exc}") from exc
    return tree_from_dict(d)
