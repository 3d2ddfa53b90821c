"""Figures from circbem CSV outputs.

Reads only the documented CSV schemas (no recomputation, the solver stays
the single source of numerical truth):

  spectrum.csv    mode_index, sigma_C, sigma_CminusCc
  rank_sweep.csv  k, N, rank, rel_err_vs_dense, setup_s, per_rhs_ms

Two figure kinds:

  spectrum       log-sigma vs mode index, one curve per matrix, with
                 markers on the singular values the compression keeps
                 (sigma >= eps * max sigma, eps taken from the embedded
                 config header)
  rank-accuracy  log-log rank vs wavenumber with a k^(1/3) guide line,
                 plus the solve-accuracy curve on a twin axis

Rendering is deterministic for fixed inputs: fixed figure geometry and no
timestamps in the output metadata.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_KINDS = ("spectrum", "rank-accuracy")
GUIDE_LABEL = "k^(1/3) guide"


class PlotInputError(ValueError):
    """Missing file, empty table, or schema mismatch."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    kind: str
    out_path: str
    log_x: bool = False

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotInputError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )


def read_table(path):
    """(header config dict or None, column dict of float arrays).

    Empty cells parse as NaN; a table without data rows is an error.
    """
    p = Path(path)
    if not p.exists():
        raise PlotInputError(f"input CSV not found: {path}")
    config = None
    names = None
    rows = []
    for line in p.read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            marker = "# config:"
            if line.startswith(marker):
                try:
                    config = json.loads(line[len(marker):])
                except json.JSONDecodeError:
                    config = None
            continue
        if names is None:
            names = [c.strip() for c in line.split(",")]
            continue
        cells = line.split(",")
        if len(cells) != len(names):
            raise PlotInputError(
                f"{path}: row has {len(cells)} cells, header has {len(names)}"
            )
        rows.append([float(c) if c.strip() else np.nan for c in cells])
    if names is None or not rows:
        raise PlotInputError(f"{path}: no data rows")
    data = np.asarray(rows)
    return config, {name: data[:, i] for i, name in enumerate(names)}


def _require(columns, table, path):
    missing = [c for c in columns if c not in table]
    if missing:
        raise PlotInputError(f"{path}: missing columns {missing}")


def build_figure(spec: FigureSpec):
    """Matplotlib figure for the spec; render() saves it."""
    config, table = read_table(spec.csv_path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=130)
    if spec.kind == "spectrum":
        _require(["mode_index", "sigma_C", "sigma_CminusCc"], table, spec.csv_path)
        eps = (config or {}).get("eps")
        modes = table["mode_index"]
        for name, label, color in (
            ("sigma_C", "system matrix", "tab:blue"),
            ("sigma_CminusCc", "circle-extracted difference", "tab:red"),
        ):
            sig = table[name]
            keep = ~np.isnan(sig)
            ax.semilogy(modes[keep], sig[keep], color=color, lw=1.2, label=label)
            if eps:
                sel = keep & (sig >= eps * np.nanmax(sig))
                ax.semilogy(
                    modes[sel], sig[sel], ls="none", marker="o", ms=3,
                    mfc="none", color="tab:green",
                    label=f"kept at eps={eps:g}" if name == "sigma_C" else None,
                )
        ax.set_xlabel("Fourier mode index")
        ax.set_ylabel("singular value")
        if spec.log_x:
            ax.set_xscale("log")
        ax.legend(loc="best", fontsize=8)
    else:  # rank-accuracy
        _require(["k", "rank", "rel_err_vs_dense"], table, spec.csv_path)
        k = table["k"]
        rank = table["rank"]
        ax.loglog(k, rank, "o-", color="tab:blue", label="skeleton rank")
        guide = rank[0] * (k / k[0]) ** (1.0 / 3.0)
        ax.loglog(k, guide, "--", color="gray", label=GUIDE_LABEL)
        ax.set_xlabel("wavenumber k (1/m)")
        ax.set_ylabel("rank")
        ax2 = ax.twinx()
        ax2.loglog(
            k, table["rel_err_vs_dense"], "s-", color="tab:red",
            label="solve error vs dense",
        )
        ax2.set_ylabel("relative solve error")
        lines = ax.get_lines() + ax2.get_lines()
        ax.legend(lines, [l.get_label() for l in lines], loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Write the figure; no file is produced when the input is rejected."""
    fig = build_figure(spec)
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Software": "circbem-plots"}
    if out.suffix == ".svg":
        metadata["Date"] = None  # keep output byte-stable
    fig.savefig(out, metadata=metadata)
    plt.close(fig)
    return str(out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="circbem-plot", description="Render circbem CSV outputs as figures"
    )
    parser.add_argument("--in", dest="csv_path", required=True, help="input CSV")
    parser.add_argument("--out", dest="out_path", required=True, help="output image")
    parser.add_argument("--kind", choices=FIGURE_KINDS, required=True)
    parser.add_argument("--log-x", action="store_true", help="log-scale mode axis")
    args = parser.parse_args(argv)
    try:
        path = render(
            FigureSpec(args.csv_path, args.kind, args.out_path, log_x=args.log_x)
        )
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
