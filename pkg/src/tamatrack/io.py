"""Text formats: MOT rows, ground truth, feature files, tag files, config files, PPM patches."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path
from typing import get_args, get_type_hints

import numpy as np

from .core import (CONFIG_FIELDS, AppearanceDescriptor, BoundingBox, ConfigError, Detection,
                   DimensionMismatch, InvalidValue, TrackerConfig, TrackingError, validate_config)
from .engine import ResultRow
from .evaluation import GtRow


class MalformedRow(TrackingError, ValueError):
    def __init__(self, line: int, message: str, path=None):
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line}: {message}")
        self.line = line


class DuplicateKey(TrackingError, ValueError):
    pass


@dataclass(frozen=True)
class MotRow:
    frame: int
    id: int
    left: float
    top: float
    width: float
    height: float
    conf: float = 1.0
    x: float = -1.0
    y: float = -1.0
    z: float = -1.0


def fmt_num(x) -> str:
    """Shortest text that parses back to the same float; integral values drop the '.0'."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _lines(path):
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield lineno, line.strip()


def _fields(line, lineno, path, minimum, maximum=None):
    parts = [p.strip() for p in line.split(",")]
    if len(parts) < minimum or (maximum is not None and len(parts) > maximum):
        raise MalformedRow(lineno, f"expected {minimum}..{maximum or minimum} fields, found {len(parts)}", path)
    return parts


def _frame_id(parts, lineno, path):
    try:
        frame = float(parts[0])
        ident = float(parts[1])
    except ValueError:
        raise MalformedRow(lineno, "frame and id must be numbers", path) from None
    if not (frame.is_integer() and ident.is_integer()):
        raise MalformedRow(lineno, "frame and id must be integers", path)
    if frame < 1:
        raise MalformedRow(lineno, f"frame must be >= 1, got {int(frame)}", path)
    return int(frame), int(ident)


def _floats(parts, lineno, path):
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise MalformedRow(lineno, "non-numeric field", path) from None
    if not all(math.isfinite(v) for v in vals):
        raise MalformedRow(lineno, "non-finite value", path)
    return vals


def parse_mot_rows(path) -> list[MotRow]:
    rows = []
    for lineno, line in _lines(path):
        parts = _fields(line, lineno, path, 6, 10)
        frame, ident = _frame_id(parts, lineno, path)
        vals = _floats(parts[2:], lineno, path)
        left, top, width, height = vals[:4]
        if not (width > 0 and height > 0):
            raise MalformedRow(lineno, f"box width/height must be positive, got {width}x{height}", path)
        rest = vals[4:] + [1.0, -1.0, -1.0, -1.0][len(vals) - 4:]
        rows.append(MotRow(frame, ident, left, top, width, height, *rest))
    return rows


def parse_detections(path) -> dict[int, list[Detection]]:
    """Detections grouped by frame; indices follow file order within a frame."""
    out = defaultdict(list)
    for row in parse_mot_rows(path):
        dets = out[row.frame]
        dets.append(Detection(row.frame, BoundingBox(row.left, row.top, row.width, row.height),
                              row.conf, None, raw_confidence=row.conf, index=len(dets)))
    return dict(sorted(out.items()))


def write_mot_rows(rows, path) -> None:
    lines = [",".join(fmt_num(v) for v in (r.frame, r.id, r.left, r.top, r.width, r.height, r.conf, r.x, r.y, r.z))
             for r in rows]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def write_results(rows, path) -> None:
    """Tracker output as MOT rows sorted by (frame, id); confidence 1, x/y/z -1."""
    ordered = sorted(rows, key=lambda r: (r.frame, r.id))
    write_mot_rows([MotRow(r.frame, r.id, r.left, r.top, r.width, r.height) for r in ordered], path)


def parse_results(path) -> list[ResultRow]:
    return [ResultRow(r.frame, r.id, r.left, r.top, r.width, r.height) for r in parse_mot_rows(path)]


def write_detections(dets_by_frame, path) -> None:
    rows = [MotRow(d.frame, -1, *d.box.as_tuple(), d.raw_confidence)
            for frame in sorted(dets_by_frame) for d in dets_by_frame[frame]]
    write_mot_rows(rows, path)


def write_gt(rows, path) -> None:
    """frame,id,left,top,width,height,consider,class,visibility"""
    lines = [",".join([fmt_num(g.frame), fmt_num(g.id), fmt_num(g.left), fmt_num(g.top), fmt_num(g.width),
                       fmt_num(g.height), "1" if g.consider else "0", "1", "1" if g.consider else "0"])
             for g in sorted(rows, key=lambda g: (g.frame, g.id))]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def parse_gt(path) -> list[GtRow]:
    rows = []
    seen = set()
    for lineno, line in _lines(path):
        parts = _fields(line, lineno, path, 6, 10)
        frame, ident = _frame_id(parts, lineno, path)
        vals = _floats(parts[2:], lineno, path)
        if not (vals[2] > 0 and vals[3] > 0):
            raise MalformedRow(lineno, "box width/height must be positive", path)
        if (frame, ident) in seen:
            raise MalformedRow(lineno, f"second row for identity {ident} in frame {frame}", path)
        seen.add((frame, ident))
        consider = len(vals) < 5 or vals[4] != 0
        rows.append(GtRow(frame, ident, *vals[:4], consider))
    return rows


# ---------------------------------------------------------------- feature / tag files

def parse_feature_file(path) -> dict[tuple[int, int], np.ndarray]:
    """``frame,det_index,dim,v1,...,v_dim`` -> {(frame, det_index): vector}."""
    lookup = {}
    dim_seen = None
    for lineno, line in _lines(path):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 4:
            raise MalformedRow(lineno, "expected frame,det_index,dim,values...", path)
        try:
            frame, index, dim = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise MalformedRow(lineno, "frame, det_index and dim must be integers", path) from None
        if frame < 1 or index < 0 or dim < 1:
            raise MalformedRow(lineno, "frame >= 1, det_index >= 0 and dim >= 1 required", path)
        if len(parts) - 3 != dim:
            raise MalformedRow(lineno, f"declared dim {dim} but {len(parts) - 3} values", path)
        if dim_seen is not None and dim != dim_seen:
            raise DimensionMismatch(f"line {lineno}: dim {dim} differs from earlier rows ({dim_seen})")
        dim_seen = dim
        key = (frame, index)
        if key in lookup:
            raise DuplicateKey(f"line {lineno}: duplicate key frame={frame} det_index={index}")
        lookup[key] = np.array(_floats(parts[3:], lineno, path))
    return lookup


def write_feature_file(lookup, path) -> None:
    lines = []
    for (frame, index) in sorted(lookup):
        vec = np.asarray(lookup[(frame, index)], dtype=np.float64)
        lines.append(",".join([str(frame), str(index), str(vec.size)] + [repr(float(v)) for v in vec]))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def parse_tag_file(path) -> dict[tuple[int, int], int]:
    """``frame,det_index,tag`` identity labels for the oracle scorer."""
    tags = {}
    for lineno, line in _lines(path):
        parts = _fields(line, lineno, path, 3, 3)
        try:
            key = (int(parts[0]), int(parts[1]))
            tag = int(parts[2])
        except ValueError:
            raise MalformedRow(lineno, "tag rows are three integers", path) from None
        if key in tags:
            raise DuplicateKey(f"line {lineno}: duplicate key frame={key[0]} det_index={key[1]}")
        tags[key] = tag
    return tags


def write_tag_file(tags, path) -> None:
    Path(path).write_text("".join(f"{f},{i},{t}\n" for (f, i), t in sorted(tags.items())), encoding="utf-8")


# ---------------------------------------------------------------- config

def _coerce(name: str, raw: str, lineno: int):
    hint = get_type_hints(TrackerConfig)[name]
    text = raw.strip()
    try:
        if hint is str:
            return text
        if hint is int:
            return int(text)
        if type(None) in get_args(hint) and text.lower() in ("none", ""):
            return None
        return float(text)
    except ValueError:
        raise ConfigError(name, f"line {lineno}: cannot parse {text!r}") from None


def parse_config_text(text: str, base: TrackerConfig | None = None) -> TrackerConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or "?", f"line {lineno}: expected 'key = value'")
        if key not in CONFIG_FIELDS:
            raise ConfigError(key, f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, value, lineno)
    cfg = (base or TrackerConfig()).with_(**values)
    return validate_config(cfg)


def parse_config(path, base: TrackerConfig | None = None) -> TrackerConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), base)


def format_config(cfg: TrackerConfig) -> str:
    out = []
    for f in dc_fields(TrackerConfig):
        value = getattr(cfg, f.name)
        out.append(f"{f.name} = {value if isinstance(value, str) or value is None else fmt_num(value)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- PPM

def read_ppm(path) -> np.ndarray:
    """Binary PPM (P6, maxval < 256) -> float array in [0, 1], shape (rows, cols, 3)."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InvalidValue(f"{path}: truncated PPM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise InvalidValue(f"{path}: only binary P6 images are supported")
    width, height, maxval = (int(t) for t in tokens[1:])
    if not 0 < maxval < 256:
        raise InvalidValue(f"{path}: maxval must be below 256")
    pos += 1  # single whitespace after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * 3, offset=pos)
    return pixels.reshape(height, width, 3).astype(np.float64) / maxval


def write_ppm(image: np.ndarray, path) -> None:
    arr = np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    height, width = arr.shape[:2]
    Path(path).write_bytes(f"P6\n{width} {height}\n255\n".encode() + arr.tobytes())


def resize_nearest(image: np.ndarray, shape=(128, 64)) -> np.ndarray:
    rows = (np.arange(shape[0]) * image.shape[0] // shape[0]).clip(0, image.shape[0] - 1)
    cols = (np.arange(shape[1]) * image.shape[1] // shape[1]).clip(0, image.shape[1] - 1)
    return image[rows][:, cols]


def load_patch(path) -> AppearanceDescriptor:
    img = read_ppm(path)
    if img.shape[:2] != (128, 64):
        img = resize_nearest(img)
    return AppearanceDescriptor(patch=img)
