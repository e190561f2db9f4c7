"""Standalone SVG log-log plots carrying their data in an XML comment."""

from __future__ import annotations

import io
import math


def _data_comment(series):
    lines = ["embedlab data"]
    for name, (xs, ys) in series.items():
        lines.append(f"# {name}")
        lines.extend(f"{x!r},{y!r}" for x, y in zip(xs, ys))
    # "--" is not allowed inside XML comments
    return "<!--\n" + "\n".join(lines).replace("--", "- -") + "\n-->\n"


def loglog_svg(path, title, xlabel, ylabel, series):
    """Write a log-log line plot of ``{name: (xs, ys)}``; non-positive values are skipped."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "embedlab", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name, (xs, ys) in series.items():
            pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0 and math.isfinite(y)]
            if pts:
                ax.loglog(*zip(*pts), marker="o", ms=3, label=name)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if ax.get_legend_handles_labels()[0]:
            ax.legend()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    svg = buf.getvalue()
    head, sep, rest = svg.partition("?>\n")
    text = head + sep + _data_comment(series) + rest if sep else _data_comment(series) + svg
    with open(path, "w") as fh:
        fh.write(text)
