"""Run artifacts: output directory, manifests, JSON configs and SVG charts."""
from __future__ import annotations

import hashlib
import json
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

OUTPUT_ENV = "KPZLAB_OUT"
MANIFEST_SCHEMA = 1


def output_dir(explicit: str | os.PathLike | None = None) -> Path:
    """``explicit``, else $KPZLAB_OUT, else ./kpzlab_out; created if missing."""
    path = Path(explicit or os.environ.get(OUTPUT_ENV) or "kpzlab_out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def load_config(path: str | os.PathLike | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return cfg


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj, path: Path) -> Path:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class Manifest:
    command: str
    config: dict
    seed: int | None = None
    tolerances: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def check(self, name: str, value: float, tolerance: float, passed: bool | None = None, **extra) -> bool:
        ok = bool(value <= tolerance) if passed is None else bool(passed)
        self.checks.append({"name": name, "value": value, "tolerance": tolerance, "pass": ok, **extra})
        self.tolerances[name] = tolerance
        return ok

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def add_output(self, path: Path) -> Path:
        self.outputs.append(path)
        return path

    def write(self, directory: Path) -> Path:
        body = {
            "schema": MANIFEST_SCHEMA,
            "package_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "certificates": self.certificates,
            "checks": self.checks,
            "pass": self.passed,
            "outputs": [{"file": p.name, "sha256": sha256(p)} for p in self.outputs],
        }
        return dump_json(body, directory / f"{self.command}_manifest.json")


# ----------------------------------------------------------------------------
# initial data
# ----------------------------------------------------------------------------

PRESETS = ("step", "packed", "shock", "flat")


def initial_data(data, n: int, model: str) -> tuple:
    """Named or explicit initial data with at least ``n`` entries.

    step/packed: y_k = -k (RBM: all zero); flat: y_k = -2k (RBM: -k);
    shock: packed front of ceil(n/2) particles, spacing 2 behind it (RBM:
    the front sits at 0, the rest at unit spacing).
    Explicit data is a comma-separated list or a sequence.
    """
    if isinstance(data, str) and data not in PRESETS:
        data = [float(v) for v in data.split(",") if v.strip()]
    if not isinstance(data, str):
        y = tuple(float(v) for v in data)
        if len(y) < n:
            raise ValueError(f"initial data has {len(y)} entries, need {n}")
        return tuple(int(v) for v in y) if model != "rbm" and all(v == int(v) for v in y) else y
    k = np.arange(1, n + 1)
    front = -(-n // 2)
    if model == "rbm":
        y = {"step": 0 * k, "packed": 0 * k, "flat": -k, "shock": np.minimum(0, front - k)}[data]
        return tuple(float(v) for v in y)
    y = {"step": -k, "packed": -k, "flat": -2 * k, "shock": np.where(k <= front, -k, -front - 2 * (k - front))}[data]
    return tuple(int(v) for v in y)


# ----------------------------------------------------------------------------
# SVG charts
# ----------------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_chart(path: Path, lines, bands=(), title: str = "", xlabel: str = "a", ylabel: str = "F",
              width: int = 640, height: int = 400) -> Path:
    """Line chart with optional shaded bands.

    ``lines``: iterable of (label, x, y); ``bands``: (label, x, lower, upper).
    """
    lines = [(lab, np.asarray(x, float), np.asarray(y, float)) for lab, x, y in lines]
    bands = [(lab, np.asarray(x, float), np.asarray(lo, float), np.asarray(hi, float)) for lab, x, lo, hi in bands]
    xs = np.concatenate([x for _, x, _ in lines] + [x for _, x, _, _ in bands])
    ys = np.concatenate([y for _, _, y in lines] + [v for _, _, lo, hi in bands for v in (lo, hi)])
    ys = ys[np.isfinite(ys)]
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    m = 50

    def px(x):
        return m + (x - x0) / (x1 - x0) * (width - 2 * m)

    def py(y):
        return height - m - (y - y0) / (y1 - y0) * (height - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
           f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
           f'<text x="14" y="{height / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 14 {height / 2})">{_esc(ylabel)}</text>']
    for v, anchor in ((x0, "start"), (x1, "end")):
        out.append(f'<text x="{px(v):.1f}" y="{height - m + 15}" text-anchor="{anchor}" font-size="10">{v:.4g}</text>')
    for v in (y0, y1):
        out.append(f'<text x="{m - 4}" y="{py(v):.1f}" text-anchor="end" font-size="10">{v:.4g}</text>')
    for i, (lab, x, lo, hi) in enumerate(bands):
        pts = [f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, hi)]
        pts += [f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[::-1], lo[::-1])]
        color = PALETTE[(i + 3) % len(PALETTE)]
        out.append(f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.25" stroke="none">'
                   f'<title>{_esc(lab)}</title></polygon>')
    for i, (lab, x, y) in enumerate(lines):
        ok = np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{width - m - 150}" y="{m + 14 * i}" font-size="10" fill="{color}">{_esc(lab)}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
