"""Matplotlib rendering of experiment summaries, written alongside the CSV
output of a sweep."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import fraction_recovered_by_n, mean_error_by_n  # noqa: E402


def _save(fig, path):
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_error_curves(records_by_label, path):
    """Log-log mean total error vs n, one curve per labelled record set."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for label, records in records_by_label.items():
        means = mean_error_by_n(records)
        ax.loglog(list(means.keys()), list(means.values()), marker="o", label=str(label))
    ax.set_xlabel("n")
    ax.set_ylabel("mean total error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, path)


def render_fraction_curves(records_by_label, path):
    """Recovery fraction vs n (log x), one curve per labelled record set."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for label, records in records_by_label.items():
        fracs = fraction_recovered_by_n(records)
        ax.semilogx(list(fracs.keys()), list(fracs.values()), marker="o", label=str(label))
    ax.set_xlabel("n")
    ax.set_ylabel("recovery fraction")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, path)
