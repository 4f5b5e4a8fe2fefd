"""Delimited reports and matplotlib figures for the command-line harness.

Every figure function renders straight to a file with the Agg backend, so
the harness works headless.  Text output is plain CSV or aligned columns;
JSON mirrors the same content for machine consumption.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def text_table(header: list, rows: list) -> str:
    cells = [[str(h) for h in header]]
    for row in rows:
        cells.append([f"{v:.6f}" if isinstance(v, float) else str(v)
                      for v in row])
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def save_metric_figure(report, path) -> None:
    """Per-image PSNR and SSIM bars with mean lines."""
    names = report.names or ["-"]
    x = np.arange(len(names))
    fig, axes = plt.subplots(1, 2, figsize=(max(6, 1.2 * len(names) + 3), 3.5))
    for ax, values, label, mean in (
        (axes[0], report.psnr_values, "PSNR (dB)", report.mean_psnr),
        (axes[1], report.ssim_values, "SSIM", report.mean_ssim),
    ):
        ax.bar(x, values or [0.0], color="#4878d0")
        if values:
            ax.axhline(mean, color="#d65f5f", linewidth=1,
                       label=f"mean {mean:.4f}")
            ax.legend(fontsize=8)
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=45, ha="right", fontsize=7)
        ax.set_ylabel(label)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_loss_curve(steps: list, values: list, path, label: str = "loss") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(steps, values, color="#4878d0", linewidth=1.2, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_comparison_curves(steps: list, series: dict, path) -> None:
    """Overlay several loss curves (name -> values)."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for name, values in series.items():
        ax.plot(steps, values, linewidth=1.2, label=name)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_pyramid_figure(pyramid, path) -> None:
    """Grid of subband planes, lowpass shown as-is, details centred."""
    labels = pyramid.labels
    planes = [np.asarray(p, dtype=np.float64) for p in pyramid.subbands]
    planes = [p[0, 0] if p.ndim == 4 else p for p in planes]
    cols = min(4, len(planes))
    rows = (len(planes) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3 * cols, 3 * rows))
    axes = np.atleast_1d(axes).ravel()
    for ax in axes[len(planes):]:
        ax.axis("off")
    for ax, label, plane in zip(axes, labels, planes):
        if label.startswith("LL"):
            ax.imshow(plane, cmap="gray")
        else:
            bound = max(1e-12, float(np.abs(plane).max()))
            ax.imshow(plane, cmap="RdBu_r", vmin=-bound, vmax=bound)
        ax.set_title(label, fontsize=9)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_subband_loss_figure(labels: list, values: list, weights: list,
                             path) -> None:
    """Weighted per-subband contributions to the training objective."""
    x = np.arange(len(labels))
    contrib = [w * v for w, v in zip(weights, values)]
    fig, ax = plt.subplots(figsize=(max(5, 0.8 * len(labels) + 2), 3.5))
    ax.bar(x, contrib, color="#4878d0")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("weighted L1")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
