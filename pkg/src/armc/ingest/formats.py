"""
ARMC - File Formats

COO text       "# n=<n> p=<p>" header, then "i,j,value" lines (0-based,
               values in shortest round-trip decimal).
Metadata       key=value lines (n, r, kappa, p, alpha, sigma, seed, ...).
ARMCF1         low-rank factors: magic, n and r as <u8, then U, sigma, V
               as row-major <f8.
ARMCM1         dense matrix: magic, rows and cols as <u8, then row-major <f8.

A serialized instance is four files sharing a stem: <stem>.coo,
<stem>.meta, <stem>.truth (ARMCF1) and <stem>.outliers.coo.
"""

from __future__ import annotations

import logging
from dataclasses import asdict
from pathlib import Path
from typing import NamedTuple

import numpy as np
from dotenv import dotenv_values

from armc.errors import DataFormatError, DimensionMismatchError
from armc.linalg.factors import max_abs_entry
from armc.observations.store import build_observations, locate
from armc.types import LowRankFactors, ObservationSet, ProblemInstance, ProblemParams

logger = logging.getLogger(__name__)

FACTORS_MAGIC = b"ARMCF1"
MATRIX_MAGIC = b"ARMCM1"
_U8 = np.dtype("<u8")
_F8 = np.dtype("<f8")


class InstancePaths(NamedTuple):
    observations: Path
    metadata: Path
    truth: Path
    outliers: Path


def instance_paths(stem: Path | str) -> InstancePaths:
    stem = Path(stem)
    return InstancePaths(
        observations=stem.with_name(stem.name + ".coo"),
        metadata=stem.with_name(stem.name + ".meta"),
        truth=stem.with_name(stem.name + ".truth"),
        outliers=stem.with_name(stem.name + ".outliers.coo"),
    )


def write_coo(
    path: Path | str,
    rows: np.ndarray,
    cols: np.ndarray,
    vals: np.ndarray,
    n: int,
    p: float,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# n={n} p={float(p)!r}"]
    lines.extend(
        f"{int(i)},{int(j)},{float(v)!r}" for i, j, v in zip(rows, cols, vals, strict=True)
    )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_observations(path: Path | str, obs: ObservationSet) -> Path:
    return write_coo(path, obs.rows, obs.cols, obs.vals, obs.n, obs.p)


def read_coo(path: Path | str) -> tuple[np.ndarray, np.ndarray, np.ndarray, int, float | None]:
    """
    Parse a COO text file.

    Returns:
        (rows, cols, vals, n, p); p is None when the header omits it.

    Raises:
        DataFormatError: missing header, malformed line, or index outside
            [0, n); the message names the offending line.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read file ({exc.strerror})", path) from exc

    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise DataFormatError("missing '# n=<n> p=<p>' header", path, 1)
    header = _parse_header(lines[0], path)
    if "n" not in header:
        raise DataFormatError("header does not give n", path, 1)
    try:
        n = int(header["n"])
        p = float(header["p"]) if "p" in header else None
    except ValueError as exc:
        raise DataFormatError(f"bad header value ({exc})", path, 1) from exc

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split(",")
        if len(parts) != 3:
            raise DataFormatError(f"expected 'i,j,value', got {stripped!r}", path, lineno)
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise DataFormatError(f"unparseable entry {stripped!r}", path, lineno) from exc
        if not (0 <= i < n and 0 <= j < n):
            raise DataFormatError(f"index ({i}, {j}) outside [0, {n})", path, lineno)
        rows.append(i)
        cols.append(j)
        vals.append(v)

    return (
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
        n,
        p,
    )


def _parse_header(line: str, path: Path) -> dict[str, str]:
    fields: dict[str, str] = {}
    for token in line.lstrip("#").split():
        key, sep, value = token.partition("=")
        if not sep:
            raise DataFormatError(f"bad header token {token!r}", path, 1)
        fields[key] = value
    return fields


def read_observations(path: Path | str, p: float | None = None) -> ObservationSet:
    """COO text file to an ObservationSet; an explicit p overrides the header."""
    rows, cols, vals, n, header_p = read_coo(path)
    try:
        return build_observations(rows, cols, vals, n, p if p is not None else header_p)
    except DataFormatError as exc:
        raise DataFormatError(str(exc), path) from exc


def write_metadata(path: Path | str, params: ProblemParams) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = "".join(f"{key}={_format_value(value)}\n" for key, value in asdict(params).items())
    path.write_text(body, encoding="utf-8")
    return path


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_metadata(path: Path | str) -> ProblemParams:
    """
    Parse a metadata sidecar.

    Raises:
        DataFormatError: missing file, missing key, or unparseable value.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError("metadata file not found", path)
    raw = {k: v for k, v in dotenv_values(path).items() if v is not None}
    try:
        return ProblemParams(
            n=int(raw["n"]),
            r=int(raw["r"]),
            kappa=float(raw["kappa"]),
            p=float(raw["p"]),
            alpha=float(raw["alpha"]),
            sigma=float(raw["sigma"]),
            seed=int(raw["seed"]),
            resamples=int(raw.get("resamples", "0")),
            cap_satisfied=raw.get("cap_satisfied", "true").lower() == "true",
        )
    except KeyError as exc:
        raise DataFormatError(f"missing key {exc.args[0]!r}", path) from exc
    except ValueError as exc:
        raise DataFormatError(f"bad value ({exc})", path) from exc


def write_factors(path: Path | str, f: LowRankFactors) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(FACTORS_MAGIC)
        fh.write(np.array([f.n, f.r], dtype=_U8).tobytes())
        for block in (f.u, f.sigma, f.v):
            fh.write(np.ascontiguousarray(block, dtype=_F8).tobytes())
    return path


def read_factors(path: Path | str) -> LowRankFactors:
    """
    Read an ARMCF1 file.

    Raises:
        DataFormatError: bad magic or truncated payload.
    """
    path = Path(path)
    data = _read_bytes(path)
    n, r = _read_dims(data, FACTORS_MAGIC, path)
    expected = (2 * n * r + r) * _F8.itemsize
    payload = data[len(FACTORS_MAGIC) + 2 * _U8.itemsize :]
    if len(payload) != expected:
        raise DataFormatError(f"expected {expected} payload bytes for n={n} r={r}, got {len(payload)}", path)
    values = np.frombuffer(payload, dtype=_F8).astype(np.float64)
    u = values[: n * r].reshape(n, r)
    sigma = values[n * r : n * r + r]
    v = values[n * r + r :].reshape(n, r)
    try:
        return LowRankFactors(u=u.copy(), sigma=sigma.copy(), v=v.copy())
    except DimensionMismatchError as exc:
        raise DataFormatError(str(exc), path) from exc


def write_matrix(path: Path | str, matrix: np.ndarray) -> Path:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got shape {matrix.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(np.array(matrix.shape, dtype=_U8).tobytes())
        fh.write(np.ascontiguousarray(matrix, dtype=_F8).tobytes())
    return path


def read_matrix(path: Path | str) -> np.ndarray:
    """
    Read an ARMCM1 dense matrix.

    Raises:
        DataFormatError: bad magic or truncated payload.
        DimensionMismatchError: rows != cols.
    """
    path = Path(path)
    data = _read_bytes(path)
    rows, cols = _read_dims(data, MATRIX_MAGIC, path)
    payload = data[len(MATRIX_MAGIC) + 2 * _U8.itemsize :]
    expected = rows * cols * _F8.itemsize
    if len(payload) != expected:
        raise DataFormatError(f"expected {expected} payload bytes for {rows}x{cols}, got {len(payload)}", path)
    if rows != cols:
        raise DimensionMismatchError(f"{path}: only square matrices are supported, got {rows}x{cols}")
    return np.frombuffer(payload, dtype=_F8).astype(np.float64).reshape(rows, cols)


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read file ({exc.strerror})", path) from exc


def _read_dims(data: bytes, magic: bytes, path: Path) -> tuple[int, int]:
    head = len(magic) + 2 * _U8.itemsize
    if data[: len(magic)] != magic:
        raise DataFormatError(f"bad magic, expected {magic.decode()}", path)
    if len(data) < head:
        raise DataFormatError("truncated header", path)
    a, b = np.frombuffer(data[len(magic) : head], dtype=_U8)
    return int(a), int(b)


def is_matrix_file(path: Path | str) -> bool:
    """True when the file starts with the ARMCM1 magic."""
    try:
        with Path(path).open("rb") as fh:
            return fh.read(len(MATRIX_MAGIC)) == MATRIX_MAGIC
    except OSError:
        return False


def write_instance(stem: Path | str, instance: ProblemInstance) -> InstancePaths:
    """Serialize observations, metadata, truth factors and the outlier sidecar."""
    paths = instance_paths(stem)
    obs = instance.obs
    write_observations(paths.observations, obs)
    write_metadata(paths.metadata, instance.params)
    write_factors(paths.truth, instance.truth)
    pos = instance.outlier_positions
    write_coo(paths.outliers, obs.rows[pos], obs.cols[pos], instance.outlier_values, obs.n, obs.p)
    logger.info(f"Wrote instance n={obs.n} |Omega|={obs.count} to {paths.observations.parent}")
    return paths


def read_outlier_positions(path: Path | str, obs: ObservationSet) -> tuple[np.ndarray, np.ndarray]:
    """Outlier sidecar to (positions into obs, values)."""
    rows, cols, vals, n, _ = read_coo(path)
    if n != obs.n:
        raise DimensionMismatchError(f"{path}: outliers are {n}x{n}, observations are {obs.n}x{obs.n}")
    pos = locate(obs, rows, cols)
    order = np.argsort(rows * n + cols, kind="stable")
    return pos, vals[order]


def read_instance(stem: Path | str) -> ProblemInstance:
    """Inverse of write_instance; noise realizations are not stored."""
    paths = instance_paths(stem)
    params = read_metadata(paths.metadata)
    obs = read_observations(paths.observations)
    truth = read_factors(paths.truth)
    if truth.n != obs.n or params.n != obs.n:
        raise DimensionMismatchError(f"{paths.truth}: truth, metadata and observations disagree on n")
    if paths.outliers.is_file():
        pos, vals = read_outlier_positions(paths.outliers, obs)
    else:
        pos, vals = np.zeros(0, dtype=np.int64), np.zeros(0)
    return ProblemInstance(
        truth=truth,
        outlier_positions=pos,
        outlier_values=vals,
        sigma_noise=params.sigma,
        obs=obs,
        params=params,
        truth_linf=max_abs_entry(truth),
    )
