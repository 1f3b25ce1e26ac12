"""Plain-text matrix files: one row per line, whitespace-separated entries.

Complex matrices are stored as a pair of files with `_r` and `_i` suffixes
(real and imaginary parts); real matrices as a single file. The reader
tolerates trailing whitespace, blank lines and scientific notation.
"""

from __future__ import annotations

import os

import numpy as np

REAL_CUTOFF = 1e-14


class StateFileError(ValueError):
    """Malformed or inconsistent state text file."""


def _read_matrix(path: str) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split()])
            except ValueError as exc:
                raise StateFileError(f"{path}:{lineno}: non-numeric entry") from exc
    if not rows:
        raise StateFileError(f"{path}: no matrix rows found")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise StateFileError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)


def _write_matrix(path: str, mat: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in np.asarray(mat, dtype=float):
            fh.write(" ".join(format(v, ".17e") for v in row))
            fh.write("\n")


def _pair_paths(path: str) -> tuple[str, str]:
    root, ext = os.path.splitext(path)
    if root.endswith("_r") or root.endswith("_i"):
        root = root[:-2]
    ext = ext or ".txt"
    return root + "_r" + ext, root + "_i" + ext


def load_state(path: str) -> np.ndarray:
    """Read a matrix from `path`, or from its `_r`/`_i` pair if that exists.

    Accepts the single real file, the base name of a complex pair, or either
    member of the pair.
    """
    re_path, im_path = _pair_paths(path)
    if os.path.exists(re_path) and os.path.exists(im_path):
        re = _read_matrix(re_path)
        im = _read_matrix(im_path)
        if re.shape != im.shape:
            raise StateFileError(f"{re_path} and {im_path} have different shapes")
        return re + 1j * im
    if os.path.exists(path):
        return _read_matrix(path).astype(complex)
    if not path.endswith(".txt") and os.path.exists(path + ".txt"):
        return _read_matrix(path + ".txt").astype(complex)
    raise FileNotFoundError(f"no state file at {path} (nor an _r/_i pair)")


def save_state(path: str, mat: np.ndarray) -> list[str]:
    """Write a matrix; a complex one becomes an `_r`/`_i` pair of files.

    Returns the list of files written. `path` may omit the .txt extension.
    """
    mat = np.asarray(mat)
    if not path.endswith(".txt"):
        path = path + ".txt"
    if np.iscomplexobj(mat) and np.abs(mat.imag).max() > REAL_CUTOFF:
        re_path, im_path = _pair_paths(path)
        _write_matrix(re_path, mat.real)
        _write_matrix(im_path, mat.imag)
        return [re_path, im_path]
    _write_matrix(path, mat.real if np.iscomplexobj(mat) else mat)
    return [path]
