"""Figure replicas from wfhsim CSV/JSON artifacts.

Three figure kinds, all consuming only the public CSV contracts of the
simulation CLI:

    grid3x3       3x3 panel grid of joint click probabilities P(m, m') versus
                  the half-wave-plate angle, from a fringe-scan CSV
    bell_bar      bar chart of the best CGLMP value per photon layer with the
                  local-realism bound drawn at 2, from the bell results CSV
    layer_curves  the nine four-photon expectation curves versus one LO phase

Rendering is deterministic: fixed canvas geometry, a pinned SVG hash salt and
no embedded timestamps, so rerunning on identical inputs reproduces the output
byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

SCAN_HEADER = ["phi"] + [f"P{m}{mp}" for m in range(3) for mp in range(3)]
CURVE_HEADER = ["phi"] + [f"Q{k}{kp}" for k in range(3) for kp in range(3)]
BELL_HEADER = ["M", "best_I"]
LOCAL_REALISM_BOUND = 2.0
SVG_HASH_SALT = "wfhplots"


class SchemaError(ValueError):
    """Input artifact does not follow the CLI schema."""


class MissingInput(FileNotFoundError):
    """Input artifact path does not exist."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str  # grid3x3 | bell_bar | layer_curves
    input_path: Path
    output_path: Path
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("grid3x3", "bell_bar", "layer_curves"):
            raise SchemaError(f"unknown figure kind {self.kind!r}")


def _read_csv(path: Path, expected_header: list[str]) -> np.ndarray:
    if not Path(path).exists():
        raise MissingInput(f"input artifact {path} does not exist")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != expected_header:
        raise SchemaError(
            f"{path}: header {rows[0] if rows else '(empty file)'} "
            f"does not match the CLI schema {expected_header}"
        )
    if len(rows) < 2:
        raise SchemaError(f"{path}: no data rows")
    try:
        data = np.array([[float(cell) for cell in row] for row in rows[1:]])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric cell ({exc})") from exc
    return data


def _grid_figure(data: np.ndarray, title: str | None) -> Figure:
    fig = Figure(figsize=(9.0, 7.5))
    axes = fig.subplots(3, 3, sharex=True)
    hwp = data[:, 0] / 4.0  # CSV stores the scan phase phi = 4 * HWP angle
    order = np.argsort(hwp)
    for m in range(3):
        for mp in range(3):
            ax = axes[m][mp]
            col = 1 + 3 * m + mp
            ax.plot(hwp[order], data[order, col], color="#1f4e9c", lw=1.4)
            ax.set_title(f"P({m},{mp})", fontsize=9)
            ax.margins(x=0)
            ax.tick_params(labelsize=7)
    for mp in range(3):
        axes[2][mp].set_xlabel("HWP angle (rad)", fontsize=8)
    for m in range(3):
        axes[m][0].set_ylabel("probability", fontsize=8)
    if title:
        fig.suptitle(title)
    fig.subplots_adjust(hspace=0.35, wspace=0.3)
    return fig


def _bell_figure(data: np.ndarray, title: str | None) -> Figure:
    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.subplots()
    ms = data[:, 0].astype(int)
    ax.bar(ms, data[:, 1], width=0.62, color="#3a7ebf", label="best correlator")
    ax.axhline(
        LOCAL_REALISM_BOUND, color="#b42318", lw=1.4, ls="--", label="local realism bound"
    )
    ax.set_xticks(ms)
    ax.set_xlabel("photons per side M")
    ax.set_ylabel("$I_M$")
    ax.set_ylim(0, max(3.0, float(data[:, 1].max()) * 1.15))
    ax.legend(fontsize=8, loc="upper right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def _curves_figure(data: np.ndarray, title: str | None) -> Figure:
    fig = Figure(figsize=(9.0, 7.5))
    axes = fig.subplots(3, 3, sharex=True)
    phi = data[:, 0]
    order = np.argsort(phi)
    for k in range(3):
        for kp in range(3):
            ax = axes[k][kp]
            col = 1 + 3 * k + kp
            ax.plot(phi[order], data[order, col], color="#9c3587", lw=1.4)
            ax.set_title(f"$\\langle P_{{{k}{kp}}} \\rangle$", fontsize=9)
            ax.margins(x=0)
            ax.tick_params(labelsize=7)
    for kp in range(3):
        axes[2][kp].set_xlabel("LO phase (rad)", fontsize=8)
    if title:
        fig.suptitle(title)
    fig.subplots_adjust(hspace=0.35, wspace=0.3)
    return fig


def build_figure(spec: FigureSpec) -> Figure:
    """Validate the input artifact and lay out the figure without saving it."""
    if spec.kind == "grid3x3":
        return _grid_figure(_read_csv(spec.input_path, SCAN_HEADER), spec.title)
    if spec.kind == "bell_bar":
        return _bell_figure(_read_csv(spec.input_path, BELL_HEADER), spec.title)
    return _curves_figure(_read_csv(spec.input_path, CURVE_HEADER), spec.title)


def render(spec: FigureSpec) -> Path:
    """Render the figure to its output path; deterministic for fixed inputs."""
    fig = build_figure(spec)
    out = Path(spec.output_path)
    fmt = out.suffix.lstrip(".").lower() or "svg"
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        if fmt == "svg":
            fig.savefig(out, format="svg", metadata={"Date": None})
        else:
            fig.savefig(out, format=fmt)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render figures from wfhsim artifacts"
    )
    parser.add_argument("--kind", required=True, choices=["grid3x3", "bell_bar", "layer_curves"])
    parser.add_argument("--input", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--title", default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = FigureSpec(args.kind, args.input, args.out, args.title)
        path = render(spec)
    except (SchemaError, MissingInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
