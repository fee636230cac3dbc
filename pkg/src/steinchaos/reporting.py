"""Deterministic report emission: JSON, delimited text, and figures.

Every artifact the command line produces funnels through this module so the
byte-level guarantees live in one place:

* JSON reports are ``json.dumps(..., indent=2, sort_keys=True)`` plus a
  trailing newline.  Floats therefore print in Python's shortest
  round-trip form and two runs with the same inputs produce identical
  bytes.
* CSV cells hold shortest round-trip floats, bare integers, or the empty
  string for a missing value.  No quoting is ever needed because no cell
  contains a comma.
* Reports embed provenance (seed, package and dependency versions, node
  counts, the tolerance values actually used) but never timestamps,
  hostnames, or thread counts, so re-runs and different ``--threads``
  settings stay byte-identical.

Figures are a convenience rendering of the same data and carry no
determinism promise; they are written next to the delimited output with
the matplotlib Agg backend so no display is required.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ValidationError

SEED_ENV_VAR = "STEINCHAOS_SEED"
DEFAULT_SEED = 42

_FIGURE_DPI = 120


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation: which command, with what knobs.

    ``tolerances`` holds the numeric tolerances the run will actually use
    (defaults merged with any command-line overrides); they are echoed
    into the report so a report is self-describing.
    """

    command: str
    seed: int
    samples: int
    tolerances: tuple[tuple[str, float], ...]
    out_path: str | None
    out_format: str  # "json" or "csv"

    def __post_init__(self):
        if self.out_format not in ("json", "csv"):
            raise ValidationError(f"unknown output format {self.out_format!r}")
        if not isinstance(self.seed, int):
            raise ValidationError("seed must be an int")
        names = [name for name, _ in self.tolerances]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate tolerance override")

    def tolerance(self, name: str) -> float:
        for key, value in self.tolerances:
            if key == name:
                return value
        raise KeyError(name)

    def tolerance_dict(self) -> dict:
        return {name: value for name, value in self.tolerances}


def resolve_seed(cli_value: int | None) -> int:
    """Explicit ``--seed`` wins; else the environment; else the default."""
    if cli_value is not None:
        return int(cli_value)
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(
            f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None


def merge_tolerances(defaults: dict, overrides: list[str] | None) -> tuple:
    """Apply ``name=value`` strings from the command line over defaults."""
    merged = dict(defaults)
    for item in overrides or ():
        name, sep, raw = item.partition("=")
        if not sep or not name:
            raise ValidationError(
                f"tolerance override {item!r} is not of the form name=value")
        if name not in merged:
            known = ", ".join(sorted(merged))
            raise ValidationError(
                f"unknown tolerance {name!r}; this command accepts: {known}")
        try:
            merged[name] = float(raw)
        except ValueError:
            raise ValidationError(
                f"tolerance {name!r} needs a float value, got {raw!r}") from None
        if not merged[name] > 0.0:
            raise ValidationError(f"tolerance {name!r} must be positive")
    return tuple(sorted(merged.items()))


def versions() -> dict:
    return {
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "steinchaos": __version__,
    }


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def render_json(payload: dict) -> str:
    """Canonical JSON text: sorted keys, two-space indent, final newline."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if not np.isfinite(x):
            raise ValidationError("reports must not contain non-finite numbers")
        return repr(x)
    return str(value)


def render_csv(header: list[str], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValidationError("csv row width does not match the header")
        lines.append(",".join(csv_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def write_text(path: str | None, text: str) -> None:
    """Write to ``path``, or stdout when no path was given."""
    if path is None:
        # print() would append its own newline; the text already ends in one.
        import sys

        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def report_payload(config: RunConfig, body: dict) -> dict:
    """Wrap a command-specific body with the shared provenance fields."""
    payload = dict(body)
    payload["command"] = config.command
    payload["seed"] = config.seed
    payload["tolerances"] = config.tolerance_dict()
    payload["versions"] = versions()
    return payload


def asdict_clean(obj) -> dict:
    """Dataclass to plain dict with numpy scalars unwrapped."""
    out = {}
    for key, value in dataclasses.asdict(obj).items():
        if isinstance(value, np.floating):
            value = float(value)
        elif isinstance(value, np.integer):
            value = int(value)
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def figure_path(out_path: str) -> str:
    return str(Path(out_path).with_suffix(".png"))


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_stein_figure(path: str, w, f, fprime, title: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(w, f, label="f", lw=1.4)
    ax.plot(w, fprime, label="f'", lw=1.0, alpha=0.8)
    ax.set_xlabel("w")
    ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIGURE_DPI)
    plt.close(fig)


def render_constants_figure(path: str, labels, observed, bounds) -> None:
    """Observed/bound ratios, one point per inequality; all must sit at or
    below the line at 1."""
    plt = _pyplot()
    ratios = [o / b if b else np.nan for o, b in zip(observed, bounds)]
    pos = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    ax.plot(pos, ratios, "o", ms=4)
    ax.axhline(1.0, color="tab:red", lw=1.0, label="bound")
    ax.set_ylim(0.0, 1.15)
    ax.set_xlabel("inequality index")
    ax.set_ylabel("observed / bound")
    ax.set_title("Stein-factor sup norms relative to their constants")
    if labels:
        worst = int(np.nanargmax(ratios))
        ax.annotate(labels[worst], (pos[worst], ratios[worst]),
                    textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIGURE_DPI)
    plt.close(fig)


def render_distance_figure(path: str, sample_sorted: np.ndarray, title: str) -> None:
    from scipy.stats import norm

    plt = _pyplot()
    n = sample_sorted.size
    # Subsample the ECDF for plotting; the report keeps the exact value.
    idx = np.unique(np.linspace(0, n - 1, min(n, 4000)).astype(int))
    xs = sample_sorted[idx]
    ecdf = (idx + 1) / n
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.step(xs, ecdf, where="post", label="empirical CDF", lw=1.0)
    grid = np.linspace(xs[0] - 0.5, xs[-1] + 0.5, 400)
    ax.plot(grid, norm.cdf(grid), label="standard normal CDF", lw=1.2)
    ax.set_xlabel("w")
    ax.set_ylabel("CDF")
    ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIGURE_DPI)
    plt.close(fig)


def render_density_gap_figure(path: str, density, support, title: str) -> None:
    from scipy.stats import norm

    plt = _pyplot()
    lo = max(support[0], -8.0)
    hi = min(support[1], 8.0)
    grid = np.linspace(lo, hi, 800)
    pdf_vals = np.asarray([float(density(t)) for t in grid])
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(grid, pdf_vals, label="density", lw=1.2)
    ax.plot(grid, norm.pdf(grid), label="standard normal", lw=1.2)
    ax.fill_between(grid, pdf_vals, norm.pdf(grid), alpha=0.25, label="gap")
    ax.set_xlabel("w")
    ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIGURE_DPI)
    plt.close(fig)


def render_curve_figure(path: str, rows: list[dict], family: str) -> None:
    plt = _pyplot()
    ns = [row["n"] for row in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    series = (
        ("d_W_bound", "o-", "Wasserstein bound"),
        ("d_K_bound", "s-", "Kolmogorov bound"),
        ("d_TV_bound", "^-", "total variation bound"),
        ("empirical_d_W", "o--", "empirical Wasserstein"),
        ("empirical_d_K", "s--", "empirical Kolmogorov"),
    )
    for key, style, label in series:
        ys = [row.get(key) for row in rows]
        if any(y is None for y in ys):
            continue
        ax.loglog(ns, ys, style, label=label, ms=4, lw=1.1)
    ax.set_xlabel("n")
    ax.set_ylabel("distance")
    ax.set_title(f"normal-approximation rates, family {family}")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIGURE_DPI)
    plt.close(fig)
