"""File-only figures (SVG) and their plain-text data companions."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .verify import adlb_bounds, explicit_lower_bound  # noqa: E402

# fixed ids and no timestamp so that repeated runs give identical bytes
matplotlib.rcParams["svg.hashsalt"] = "hedgehog"
matplotlib.rcParams["svg.fonttype"] = "none"
SVG_META = {"Date": None, "Creator": "hedgehog"}


def read_csv(path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = rows[0]
    return header, rows[1:]


def detect_kind(header) -> str:
    h = set(header)
    if {"r", "u", "w"} <= h:
        return "solution"
    if {"branch_id", "r", "u"} <= h:
        return "branches"
    if "lambda_min" in h and "beta" in h:
        return "scan"
    raise ValueError(f"unrecognised CSV header {header}")


def _columns(header, rows):
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(row[j]) for row in rows])
        except ValueError:
            cols[name] = np.array([row[j] for row in rows])
    return cols


def _write_text(path, names, columns):
    with open(path, "w") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for vals in zip(*columns):
            fh.write(" ".join(repr(float(v)) for v in vals) + "\n")


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)


def plot_solution(csv_path, out_dir, summary: Optional[dict] = None, stem: str = "solution"):
    """u(r) with the bound overlays, and w(r); returns the written paths."""
    header, rows = read_csv(csv_path)
    c = _columns(header, rows)
    r, u, w = c["r"], c["u"], c["w"]
    names, cols = ["r", "u", "w"], [r, u, w]
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.4, 7.2), sharex=True)
    ax0.plot(r, u, color="k", lw=1.6, label="u")
    summary = summary or {}
    model = summary.get("model") or {}
    s_plus = summary.get("s_plus")
    alpha, beta = summary.get("alpha"), summary.get("beta")
    if s_plus is not None and alpha is not None and beta is not None:
        lb1, ub1, ub2 = adlb_bounds(r, s_plus, alpha, beta)
        ax0.plot(r, lb1, "--", lw=1, label="lower bound (alpha)")
        ax0.plot(r, ub1, ":", lw=1, label="upper bound (beta)")
        ax0.plot(r, ub2, "-.", lw=1, label="upper bound (alpha)")
        names += ["lower_alpha", "upper_beta", "upper_alpha"]
        cols += [lb1, ub1, ub2]
    if model.get("kind") == "physical-cubic" and model.get("elastic_rescale", 1.0) == 1.0 \
            and summary.get("p") == 2 and summary.get("q") == 6 and model.get("b2", 0) > 0:
        ex = explicit_lower_bound(r, model["b2"], model["c2"])
        ax0.plot(r, ex, lw=1, color="tab:gray", label="explicit sub-solution")
        names.append("explicit_lower")
        cols.append(ex)
    ax0.set_ylabel("u")
    ax0.legend(fontsize=8, loc="lower right")
    ax1.plot(r, w, color="tab:blue", lw=1.4)
    ax1.set_ylabel("w = r u'/u")
    ax1.set_xlabel("r")
    for ax in (ax0, ax1):
        if r[0] > 0 and r[-1] / r[0] > 1e3:
            ax.set_xscale("log")
    fig.tight_layout()
    out = Path(out_dir)
    svg, txt = out / f"{stem}.svg", out / f"{stem}_plot.txt"
    _save(fig, svg)
    _write_text(txt, names, cols)
    return [svg, txt]


def plot_branches(csv_path, out_dir, stem: str = "branches"):
    header, rows = read_csv(csv_path)
    c = _columns(header, rows)
    ids = c["branch_id"].astype(int)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for b in np.unique(ids):
        m = ids == b
        ax.plot(c["r"][m], c["u"][m], lw=1.3, label=f"branch {b}")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("r")
    ax.set_ylabel("u")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(out_dir)
    svg, txt = out / f"{stem}.svg", out / f"{stem}_plot.txt"
    _save(fig, svg)
    _write_text(txt, ["branch_id", "r", "u"], [ids, c["r"], c["u"]])
    return [svg, txt]


def plot_scan(csv_path, out_dir, stem: str = "scan"):
    header, rows = read_csv(csv_path)
    c = _columns(header, rows)
    par = header[0]
    x = c[par]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(x, c["beta"], "o-", ms=3, label="beta (extracted)")
    names, cols = [par, "beta"], [x, c["beta"]]
    if "beta_far_field" in c:
        ax.plot(x, c["beta_far_field"], "k--", lw=1, label="q s+ / F'(s+)")
        names.append("beta_far_field")
        cols.append(c["beta_far_field"])
    ax.set_xlabel(par)
    ax.set_ylabel("beta")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(out_dir)
    svg, txt = out / f"{stem}.svg", out / f"{stem}_plot.txt"
    _save(fig, svg)
    _write_text(txt, names, cols)
    return [svg, txt]
