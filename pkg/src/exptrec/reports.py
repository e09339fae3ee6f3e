"""Report writers: delimited tables, plain-text summaries, and matplotlib
figures rendered alongside them."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .chains import ChainDirection, PoolAnalysisRow, mean_pool_metrics
from .corpus import EntityKind
from .evalharness import EvalResult


def write_eval_report(
    results: dict[EntityKind, EvalResult],
    out_dir: str | Path,
    stem: str = "eval",
) -> list[Path]:
    """TSV rows {method, kind, metric, k, value}, a text summary, and a figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv_path = out_dir / f"{stem}.tsv"
    txt_path = out_dir / f"{stem}.txt"
    png_path = out_dir / f"{stem}.png"

    rows: list[tuple[str, str, str, int, float]] = []
    for kind, result in results.items():
        for k, v in sorted(result.mean_recall.items()):
            rows.append((result.method, kind.value, "recall", k, v))
        for k, v in sorted(result.mean_hit.items()):
            rows.append((result.method, kind.value, "hitrate", k, v))

    fingerprint = next(iter(results.values())).fingerprint if results else ""
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write(f"# config {fingerprint}\n")
        fh.write("method\tkind\tmetric\tk\tvalue\n")
        for method, kind, metric, k, v in rows:
            fh.write(f"{method}\t{kind}\t{metric}\t{k}\t{v:.6f}\n")

    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(f"Evaluation summary (config {fingerprint})\n")
        for kind, result in results.items():
            fh.write(f"\n{kind.value} side  method={result.method}  queries={len(result.per_query)}  excluded={result.excluded}\n")
            recall = "  ".join(f"R@{k}={v:.4f}" for k, v in sorted(result.mean_recall.items()))
            hits = "  ".join(f"HR@{k}={v:.4f}" for k, v in sorted(result.mean_hit.items()))
            fh.write(f"  {recall}\n  {hits}\n")

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    for ax, metric in zip(axes, ("recall", "hitrate")):
        for kind, result in results.items():
            values = result.mean_recall if metric == "recall" else result.mean_hit
            ks = sorted(values)
            ax.bar(
                [f"{k}\n{kind.value[:4]}" for k in ks],
                [values[k] for k in ks],
                label=kind.value,
            )
        ax.set_title(f"mean {metric}@k")
        ax.set_ylim(0, 1.05)
    axes[0].set_ylabel("value")
    fig.suptitle(f"config {fingerprint}")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [tsv_path, txt_path, png_path]


def write_chain_report(
    rows: list[PoolAnalysisRow],
    out_dir: str | Path,
    stem: str = "chain_pools",
    fingerprint: str = "",
) -> list[Path]:
    """Per-paper pool table plus mean recall/precision text and figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv_path = out_dir / f"{stem}.tsv"
    txt_path = out_dir / f"{stem}.txt"
    png_path = out_dir / f"{stem}.png"

    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write(f"# config {fingerprint}\n")
        fh.write("paper\tdirection\tpool_size\tgold_size\trecall\tprecision\n")
        for r in rows:
            fh.write(
                f"{r.paper_id}\t{r.direction.value}\t{r.pool_size}\t{r.gold_size}\t"
                f"{r.recall:.6f}\t{r.precision:.6f}\n"
            )

    means = mean_pool_metrics(rows)
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(f"Chain-derived candidate pools (config {fingerprint})\n")
        for direction, (recall, precision) in means.items():
            side = "baseline" if direction is ChainDirection.D_TO_B else "dataset"
            fh.write(
                f"  {side} side ({direction.value}): mean recall {recall:.4f}, "
                f"mean precision {precision:.4f} over {sum(1 for r in rows if r.direction is direction)} papers\n"
            )

    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    labels, recalls, precisions = [], [], []
    for direction, (recall, precision) in means.items():
        labels.append("baselines" if direction is ChainDirection.D_TO_B else "datasets")
        recalls.append(recall)
        precisions.append(precision)
    x = range(len(labels))
    ax.bar([i - 0.18 for i in x], recalls, width=0.36, label="recall")
    ax.bar([i + 0.18 for i in x], precisions, width=0.36, label="precision")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylim(0, 1.05)
    ax.set_title("chain-derived pool vs gold")
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [tsv_path, txt_path, png_path]


def write_loss_trace(trace: list[float], out_dir: str | Path, stem: str = "loss_trace", fingerprint: str = "") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv_path = out_dir / f"{stem}.tsv"
    png_path = out_dir / f"{stem}.png"
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write(f"# config {fingerprint}\n")
        fh.write("epoch\tloss\n")
        for epoch, value in enumerate(trace, start=1):
            fh.write(f"{epoch}\t{value:.10f}\n")
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(range(1, len(trace) + 1), trace, marker="o", markersize=3)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean batch loss")
    ax.set_title("adapter training loss")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [tsv_path, png_path]
