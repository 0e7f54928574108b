"""Optional PNG figures next to the CSV output (needs matplotlib)."""

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _by_beta(summary, key):
    out = {}
    for g in summary["groups"]:
        out.setdefault(g["beta"], []).append((g["n"], g[key]))
    return out


def render_figures(summary, out_dir):
    """Draw the summary of one experiment; returns the list of written files."""
    plt = _pyplot()
    out = Path(out_dir)
    exp = summary["experiment"]
    written = []
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if exp == "convergence":
        for key, style in (("norm_MR_op_median", "-o"), ("norm_MP_F_median", "--s")):
            for beta, pts in sorted(_by_beta(summary, key).items()):
                ns, vals = zip(*pts)
                ax.plot(ns, vals, style, label=f"{key.split('_median')[0]}, beta={beta:g}")
        ax.set_xlabel("n")
        ax.set_ylabel("median norm")
    elif exp == "frobenius_appendix":
        for beta, pts in sorted(_by_beta(summary, "mean").items()):
            ns, vals = zip(*pts)
            ax.plot(ns, vals, "-o", label=f"beta={beta:g}")
        ax.set_xlabel("n")
        ax.set_ylabel("mean ||P(1+b^2-bG)-I||_F^2")
    elif exp == "rate_probe":
        terms = sorted({g["term"] for g in summary["groups"]})
        for term in terms:
            pts = [(g["n"], g["l2"]) for g in summary["groups"] if g["term"] == term and g["l2"] > 0]
            if pts:
                ns, vals = zip(*pts)
                ax.loglog(ns, vals, "-o", label=term)
        ns = sorted({g["n"] for g in summary["groups"]})
        if ns:
            ref = np.array(ns, dtype=float)
            ax.loglog(ref, ref ** -1.5 * 0.1, "k:", label="n^-3/2")
        ax.set_xlabel("n")
        ax.set_ylabel("L2 norm")
    elif exp == "zhat_dist":
        labels = [f"n={g['n']}, b={g['beta']:g}" for g in summary["groups"]]
        x = np.arange(len(labels))
        ax.bar(x - 0.2, [g["var_log_hat_z"] for g in summary["groups"]], 0.4, label="var log hat_z")
        ax.bar(x + 0.2, [g["sigma2"] for g in summary["groups"]], 0.4, label="sigma^2")
        ax.set_xticks(x, labels)
    else:
        plt.close(fig)
        return written
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = out / f"{exp}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written
