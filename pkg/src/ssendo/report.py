"""Figure rendering for experiment outputs.

Renders the two frequency series (gcd-coprimality and generation) as bar
charts, one PNG per experiment, alongside the delimited output.  PNG
metadata is pinned so repeated runs produce byte-identical files.
"""

from fractions import Fraction

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

_META = {"Software": "ssendo"}


def render_frequency_figure(agg_rows, title: str, path: str):
    """Bar chart of the per-bit-size frequencies from aggregate rows."""
    bits = [r["bits"] for r in agg_rows]
    fg = [float(Fraction(r["freq_gcd"])) for r in agg_rows]
    fgen = [float(Fraction(r["freq_generate"])) for r in agg_rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    w = 0.38
    xs = range(len(bits))
    ax.bar([x - w / 2 for x in xs], fg, width=w, color="tab:orange",
           label="gcd condition holds")
    ax.bar([x + w / 2 for x in xs], fgen, width=w, color="tab:blue",
           label="five elements generate the index-p suborder")
    avg_g = sum(fg) / len(fg)
    avg_gen = sum(fgen) / len(fgen)
    ax.axhline(avg_g, color="tab:orange", linestyle="--", linewidth=1)
    ax.axhline(avg_gen, color="tab:blue", linestyle="--", linewidth=1)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([str(b) for b in bits])
    ax.set_xlabel("bit size of p")
    ax.set_ylabel("frequency")
    ax.set_ylim(0, 1.05)
    ax.set_title(title)
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
