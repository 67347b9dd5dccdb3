"""Deterministic series-to-PNG rendering shared by verification and eval."""

from __future__ import annotations

import io
from datetime import datetime

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402

WIDTH_PX = 1024
HEIGHT_PX = 512
DPI = 100


def render_plot(
    values: list[float],
    timestamps: list[datetime],
    *,
    title: str = "",
    ylabel: str = "",
) -> bytes:
    """Render one channel to PNG bytes. Same inputs, same bytes."""
    fig, ax = plt.subplots(
        figsize=(WIDTH_PX / DPI, HEIGHT_PX / DPI), dpi=DPI, facecolor="white"
    )
    try:
        ax.set_facecolor("white")
        ax.plot(timestamps, values, color="#1f77b4", linewidth=1.2)
        if title:
            ax.set_title(title)
        if ylabel:
            ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        ax.xaxis.set_major_formatter(mdates.DateFormatter("%Y-%m-%d %H:%M"))
        fig.autofmt_xdate()
        buf = io.BytesIO()
        fig.savefig(buf, format="png", dpi=DPI, metadata={"Software": None})
        return buf.getvalue()
    finally:
        plt.close(fig)
