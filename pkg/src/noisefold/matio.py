"""File formats: plain-text matrices, PGM images, whitened-system bundles.

The matrix format is line-oriented text: optional leading '# key: value'
metadata lines, then a 'rows cols' header, then the entries row-major,
whitespace-separated, printed with 17 significant digits so round-trips
are bit-faithful.
"""

import re
from pathlib import Path

import numpy as np


def save_matrix(path, a, header=None):
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    lines = []
    for key, value in (header or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"{a.shape[0]} {a.shape[1]}")
    for row in a:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path):
    """Returns (matrix, metadata dict from '#' lines)."""
    meta = {}
    rows = cols = None
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, val = body.partition(":")
                    meta[key.strip()] = val.strip()
                continue
            if rows is None:
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: expected 'rows cols' header, got {line!r}"
                    )
                rows, cols = int(parts[0]), int(parts[1])
                continue
            values.extend(float(tok) for tok in line.split())
    if rows is None:
        raise ValueError(f"{path}: no matrix header found")
    if len(values) != rows * cols:
        raise ValueError(
            f"{path}: expected {rows * cols} entries, found {len(values)}"
        )
    return np.array(values, dtype=np.float64).reshape(rows, cols), meta


def save_vector(path, v, header=None):
    save_matrix(path, np.asarray(v, dtype=np.float64).reshape(-1, 1), header=header)


def load_vector(path):
    a, meta = load_matrix(path)
    return a.ravel(), meta


def read_pgm(path):
    """P2 (ascii) or P5 (binary, maxval <= 255) grayscale, scaled to [0, 1]."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        magic = data[:2].decode("latin1", errors="replace")
        raise ValueError(f"{path}: not a PGM file (magic {magic!r}; need P2 or P5)")
    binary = data[:2] == b"P5"
    # header tokens (magic, width, height, maxval), '#' comments allowed
    tokens = []
    pos = 2
    while len(tokens) < 3:
        match = re.match(rb"\s*(#[^\n]*\n|\S+)", data[pos:])
        if match is None:
            raise ValueError(f"{path}: truncated PGM header")
        tok = match.group(1)
        pos += match.end()
        if not tok.startswith(b"#"):
            tokens.append(tok)
    width, height, maxval = (int(t) for t in tokens)
    if maxval <= 0:
        raise ValueError(f"{path}: bad maxval {maxval}")
    if binary:
        if maxval > 255:
            raise ValueError(f"{path}: P5 with maxval {maxval} > 255 unsupported")
        pos += 1  # single whitespace after maxval
        raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
        img = raster.astype(np.float64)
    else:
        body = data[pos:].decode("ascii")
        vals = [int(t) for t in body.split()]
        if len(vals) < width * height:
            raise ValueError(f"{path}: expected {width * height} pixels, got {len(vals)}")
        img = np.array(vals[: width * height], dtype=np.float64)
    return (img / maxval).reshape(height, width)


def write_pgm(path, img01, maxval=255, comment=None):
    """Write a [0, 1] image as ascii P2 (values rounded to integers)."""
    img = np.asarray(img01, dtype=np.float64)
    raster = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(int)
    lines = ["P2"]
    if comment:
        lines.append(f"# {comment}")
    lines.extend([f"{img.shape[1]} {img.shape[0]}", str(maxval)])
    for row in raster:
        lines.append(" ".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def save_map(path, amap, extra_header=None):
    """Write a measurement map with its ensemble metadata."""
    header = {"ensemble": amap.ensemble, "m": amap.m, "n": amap.n,
              "M": amap.M, "seed": amap.seed}
    header.update(extra_header or {})
    save_matrix(path, amap.matrix, header=header)


def load_map(path):
    """Read back a measurement map written by save_map."""
    from .sensing import MeasurementMap

    matrix, meta = load_matrix(path)
    m, n = int(meta["m"]), int(meta["n"])
    return MeasurementMap(matrix=matrix, m=m, n=n, M=matrix.shape[0],
                          ensemble=meta.get("ensemble", "user_supplied"),
                          seed=int(meta.get("seed", 0)))


def save_observation(obs, prefix, extra_header=None):
    """Write an observation bundle: y, ground truth X, matrix noise Z and
    measurement noise w as '<prefix>.<part>.txt'."""
    header = dict(extra_header or {})
    save_vector(f"{prefix}.y.txt", obs.y, header=header)
    save_matrix(f"{prefix}.X.txt", obs.ground_truth, header=header)
    save_matrix(f"{prefix}.Z.txt", obs.noise_matrix, header=header)
    save_vector(f"{prefix}.w.txt", obs.meas_noise, header=header)


def load_observation(prefix):
    from .sensing import Observation

    y, _ = load_vector(f"{prefix}.y.txt")
    x, _ = load_matrix(f"{prefix}.X.txt")
    z, _ = load_matrix(f"{prefix}.Z.txt")
    w, _ = load_vector(f"{prefix}.w.txt")
    return Observation(y=y, ground_truth=x, noise_matrix=z, meas_noise=w)


def save_whitened_system(ws, prefix, extra_header=None):
    """Write a whitened system as '<prefix>.B.txt' and '<prefix>.ytilde.txt'.

    Both files carry theta, delta, delta_eff and delta1 in their headers.
    """
    header = {
        "theta": f"{ws.theta:.17g}",
        "delta": f"{ws.delta:.17g}",
        "delta_eff": f"{ws.delta_eff:.17g}",
        "delta1": f"{ws.delta1:.17g}",
        "m": ws.m, "n": ws.n, "M": ws.M,
    }
    header.update(extra_header or {})
    save_matrix(f"{prefix}.B.txt", ws.b, header=header)
    save_vector(f"{prefix}.ytilde.txt", ws.y_tilde, header=header)


def load_whitened_bundle(prefix):
    """Read back (B, y_tilde, metadata) written by save_whitened_system."""
    b, meta = load_matrix(f"{prefix}.B.txt")
    y, _ = load_vector(f"{prefix}.ytilde.txt")
    return b, y, meta
