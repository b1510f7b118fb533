"""Table and manifest I/O.

Every table is a CSV file with a header row followed by a units row,
optionally preceded by ``# key: value`` metadata lines. Floats are written
with a fixed format so that identical inputs give identical bytes.
"""

import hashlib
import json
import os

import pandas as pd
from omegaconf import OmegaConf

FLOAT_FORMAT = "%.12e"


def write_table(path, columns, units, meta=None):
    """Write a table with a header and a units row.

    Args:
        path (str): Output CSV path.
        columns (dict): Column name to 1-D sequence, all of equal length.
        units (dict or list): Unit label per column (same order as
            `columns` when a list).
        meta (dict, optional): Metadata written as comment lines.

    Returns:
        str: Absolute path of the written file.
    """
    names = list(columns)
    if isinstance(units, dict):
        units = [units.get(name, "") for name in names]
    if len(units) != len(names):
        raise ValueError(
            f"Got {len(units)} unit labels for {len(names)} columns."
        )
    df = pd.DataFrame(columns)
    df.columns = pd.MultiIndex.from_arrays(
        [names, [u if u else "-" for u in units]]
    )
    path = os.path.abspath(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key, value in (meta or {}).items():
            f.write(f"# {key}: {value}\n")
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT)
    return path


def read_table(path):
    """Read a table written by :func:`write_table`.

    Returns:
        tuple: (DataFrame with plain column names, dict of units,
        dict of metadata).
    """
    meta = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
    df = pd.read_csv(path, comment="#", header=[0, 1])
    units = {
        name: ("" if unit == "-" else unit) for name, unit in df.columns
    }
    df.columns = [name for name, _ in df.columns]
    return df, units, meta


def write_summary(path, rows, meta=None):
    """Write (quantity, value, unit) rows as a table."""
    return write_table(
        path,
        {
            "quantity": [r[0] for r in rows],
            "value": [float(r[1]) for r in rows],
            "unit": [r[2] for r in rows],
        },
        ["", "", ""],
        meta=meta,
    )


def sha256_file(path):
    """Hex sha256 digest of a file."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def create_manifest(out_dir, experiment, cfg_path=None, cfg=None):
    """Write ``manifest.json`` listing every output of an experiment.

    Args:
        out_dir (str): Experiment output directory.
        experiment (str): Name of the experiment.
        cfg_path (str, optional): Scenario file, hashed as the input.
        cfg (DictConfig, optional): Resolved configuration to embed.

    Returns:
        str: Path to the manifest.
    """
    outputs = []
    for root, _, files in os.walk(out_dir):
        for name in sorted(files):
            if name == "manifest.json":
                continue
            full = os.path.join(root, name)
            outputs.append(
                {
                    "path": os.path.relpath(full, out_dir),
                    "sha256": sha256_file(full),
                }
            )
    outputs.sort(key=lambda x: x["path"])
    manifest = {
        "Name": experiment,
        "Input": None,
        "Outputs": outputs,
    }
    if cfg_path is not None:
        manifest["Input"] = {
            "path": os.path.basename(cfg_path),
            "sha256": sha256_file(cfg_path),
        }
    if cfg is not None:
        manifest["Config"] = OmegaConf.to_container(cfg, resolve=True)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as outfile:
        json.dump(manifest, outfile, indent=4, sort_keys=True)
    return path
