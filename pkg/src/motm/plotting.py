"""Figures for the CLI reports. Tables are the contract; these are conveniences."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["smile_figure", "converge_figure", "digital_figure"]

_METADATA = {"Software": None}


def _column(rows, name):
    return [r.get(name) for r in rows]


def _finite(xs, ys):
    pairs = [(x, y) for x, y in zip(xs, ys)
             if isinstance(x, float) and isinstance(y, float) and math.isfinite(x) and math.isfinite(y)]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_METADATA)
    plt.close(fig)


def smile_figure(rows, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    t = _column(rows, "t")
    ax.plot(*_finite(t, _column(rows, "iv_exact")), "k-", label="exact")
    ax.plot(*_finite(t, _column(rows, "iv_approx")), "r--", label="expansion")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\sigma_{imp}(k_t, t)$")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)


def converge_figure(rows, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    t = _column(rows, "t")
    for name, style in (("log_c_first", "b:"), ("log_c_second", "g-."), ("log_c_refined", "r--")):
        exact = _column(rows, "log_c_exact")
        approx = _column(rows, name)
        diffs = [abs(a - b) if isinstance(a, float) and isinstance(b, float) else None
                 for a, b in zip(exact, approx)]
        xs, ys = _finite(t, diffs)
        if xs:
            ax.plot(xs, ys, style, marker="o", label=name.replace("log_c_", ""))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("|log c exact - log c approx|")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)


def digital_figure(rows, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    t = _column(rows, "t")
    ax.plot(*_finite(t, _column(rows, "scaled_log_call")), "k-o", label="(t/k^2) log c")
    ax.plot(*_finite(t, _column(rows, "scaled_log_digital")), "b-s", label="(t/k^2) log P")
    limits = [r for r in _column(rows, "md_limit") if isinstance(r, float)]
    if limits:
        ax.axhline(limits[0], color="r", ls="--", label="-1/(2 v0)")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)
