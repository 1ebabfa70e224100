"""SVG line charts of metric series. Requires matplotlib."""
from __future__ import annotations

from pathlib import Path

SERIES_METRICS = ("accuracy", "likelihood", "handled", "S_T")


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("plotting needs matplotlib; install the 'plot' extra") from exc
    matplotlib.use("Agg")
    # fixed ids and no timestamp keep the files reproducible
    matplotlib.rcParams["svg.hashsalt"] = "skytier"
    import matplotlib.pyplot as plt

    return plt


def line_chart(path, lines: dict, xlabel: str, ylabel: str, title: str = "") -> Path:
    """``lines`` maps a legend label to ``(xs, ys)``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (xs, ys) in lines.items():
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(lines) > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def plot_runs(out, runs) -> list[Path]:
    """One chart per metric with a line per run, indexed by iteration."""
    files = []
    for m in SERIES_METRICS:
        lines = {f"{r.algorithm} seed {r.seed}": (r.series.column("iter"), r.series.column(m)) for r in runs}
        files.append(line_chart(Path(out) / f"{m}.svg", lines, "iteration", m))
    return files


def plot_aggregates(out, aggregates: list, axis: str) -> list[Path]:
    """One chart per final metric: cell mean against the swept value, a line per algorithm."""
    files = []
    for m in SERIES_METRICS + ("iterations_to_converge",):
        lines: dict = {}
        for a in aggregates:
            xs, ys = lines.setdefault(a["algo"], ([], []))
            xs.append(float(a["value"]))
            ys.append(a[m]["mean"])
        files.append(line_chart(Path(out) / f"{m}_vs_{axis}.svg", lines, axis, f"mean {m}"))
    return files
