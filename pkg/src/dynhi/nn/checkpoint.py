"""Directory-based model checkpoints.

A checkpoint is a directory holding `manifest.json` (architecture, parameter
and buffer inventory, seed) plus one little-endian float64 flat binary file
per parameter and per buffer, named by the dotted attribute path. Loading is
bit-exact with respect to saving.

Optimizer/trainer state (Adam moments, shuffle RNG) is stored the same way
under the checkpoint directory when a resumable snapshot is requested.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import DataError
from .core import Parameter
from .layers import Module
from .optim import Adam

FORMAT = "dynhi-checkpoint/1"

# Model classes register themselves so checkpoints can rebuild them by name.
MODEL_REGISTRY: dict[str, type] = {}


def register_model(kind: str):
    def register(cls):
        MODEL_REGISTRY[kind] = cls
        cls.checkpoint_kind = kind
        return cls
    return register


def _write_array(path: Path, array: np.ndarray):
    path.write_bytes(np.ascontiguousarray(array, dtype="<f8").tobytes())


def _read_array(path: Path, shape) -> np.ndarray:
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    expected = int(np.prod(shape)) if shape else 1
    if raw.size != expected:
        raise DataError(f"{path.name}: expected {expected} float64 values, found {raw.size}")
    return raw.reshape(shape).astype(np.float64)


def save_checkpoint(model: Module, directory, *, seed=None, extra: dict | None = None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    params = model.named_parameters()
    buffers = model.named_buffers()
    manifest = {
        "format": FORMAT,
        "model": model.checkpoint_kind,
        "architecture": model.architecture(),
        "seed": seed,
        "parameters": [{"path": name, "shape": list(p.data.shape)} for name, p in params],
        "buffers": [{"path": name, "shape": list(b.shape)} for name, b in buffers],
        "extra": extra or {},
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for name, p in params:
        _write_array(directory / f"{name}.bin", p.data)
    for name, b in buffers:
        _write_array(directory / f"{name}.bin", b)


def load_manifest(directory) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise DataError(f"no checkpoint manifest at {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("format") != FORMAT:
        raise DataError(f"{path}: unsupported checkpoint format {manifest.get('format')!r}")
    return manifest


def load_checkpoint(directory) -> Module:
    directory = Path(directory)
    manifest = load_manifest(directory)
    kind = manifest["model"]
    if kind not in MODEL_REGISTRY:
        raise DataError(f"unknown model kind {kind!r} in {directory}")
    model = MODEL_REGISTRY[kind].from_architecture(manifest["architecture"])
    params = dict(model.named_parameters())
    for entry in manifest["parameters"]:
        name = entry["path"]
        if name not in params:
            raise DataError(f"checkpoint parameter {name!r} has no slot in the rebuilt model")
        params[name].data = _read_array(directory / f"{name}.bin", tuple(entry["shape"]))
        params[name].grad = np.zeros_like(params[name].data)
        params[name].adam_m = np.zeros_like(params[name].data)
        params[name].adam_v = np.zeros_like(params[name].data)
    buffers = dict(model.named_buffers())
    for entry in manifest["buffers"]:
        name = entry["path"]
        if name not in buffers:
            raise DataError(f"checkpoint buffer {name!r} has no slot in the rebuilt model")
        value = _read_array(directory / f"{name}.bin", tuple(entry["shape"]))
        _assign_buffer(model, name, value)
    return model


def _assign_buffer(model: Module, dotted: str, value: np.ndarray):
    parts = dotted.split(".")
    target = model
    for part in parts[:-1]:
        target = target[int(part)] if part.isdigit() else getattr(target, part)
    setattr(target, parts[-1], value)


def checkpoint_digest(directory) -> str:
    """Stable content hash over every file in a checkpoint directory."""
    directory = Path(directory)
    digest = hashlib.sha256()
    for path in sorted(directory.rglob("*")):
        if path.is_file():
            digest.update(path.relative_to(directory).as_posix().encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def save_optimizer_state(adam: Adam, model: Module, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    steps = {}
    for name, p in model.named_parameters():
        _write_array(directory / f"{name}.adam_m.bin", p.adam_m)
        _write_array(directory / f"{name}.adam_v.bin", p.adam_v)
        steps[name] = p.step_count
    (directory / "adam.json").write_text(
        json.dumps({"step_counts": steps}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_optimizer_state(model: Module, directory):
    directory = Path(directory)
    meta = json.loads((directory / "adam.json").read_text(encoding="utf-8"))
    for name, p in model.named_parameters():
        p.adam_m = _read_array(directory / f"{name}.adam_m.bin", p.data.shape)
        p.adam_v = _read_array(directory / f"{name}.adam_v.bin", p.data.shape)
        p.step_count = int(meta["step_counts"][name])
