"""The three figure kinds: regret-curve, scaling, pac-gap.

Each renderer takes already-validated rows and an output path; the suffix
picks the format (.svg default, .png works too).
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .stats import quartiles_by_checkpoint


class EmptyPlotError(ValueError):
    """No data rows to draw."""


def _require_rows(rows, kind):
    if not rows:
        raise EmptyPlotError(f"{kind}: no data rows to plot")


def _by_algorithm(rows):
    groups: dict[str, list[dict]] = {}
    for row in rows:
        groups.setdefault(row["algorithm"], []).append(row)
    return groups


def render_regret_curve(rows: list[dict], out_path) -> None:
    """Median regret vs checkpoint per algorithm, IQR band across seeds."""
    _require_rows(rows, "regret-curve")
    fig, ax = plt.subplots(figsize=(6, 4))
    for algo, g in sorted(_by_algorithm(rows).items()):
        cks, q25, q50, q75 = quartiles_by_checkpoint(g, "regret")
        line, = ax.plot(cks, q50, marker="o", label=algo)
        if len({row["seed"] for row in g}) > 1:
            ax.fill_between(cks, q25, q75, alpha=0.2,
                            color=line.get_color(), linewidth=0)
    ax.set_xlabel("step")
    ax.set_ylabel("cumulative pseudo-regret")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def render_scaling(rows: list[dict], out_path) -> None:
    """Samples used vs the structural budget r(S+K)/eps^2, with a reference
    line through the first point (slope 1 in log-log)."""
    _require_rows(rows, "scaling")
    fig, ax = plt.subplots(figsize=(6, 4))
    for algo, g in sorted(_by_algorithm(rows).items()):
        pts = {}
        for row in g:
            eps = row["eps_or_T"]
            if eps <= 0:
                continue
            x = row["r"] * (row["S"] + row["K"]) / eps ** 2
            pts.setdefault(x, []).append(row["samples"])
        if not pts:
            continue
        xs = sorted(pts)
        ys = [sum(pts[x]) / len(pts[x]) for x in xs]
        ax.plot(xs, ys, marker="s", linestyle="", label=algo)
        ref = [ys[0] * x / xs[0] for x in xs]
        ax.plot(xs, ref, linestyle="--", linewidth=0.8, color="gray")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"$r(S+K)/\epsilon^2$")
    ax.set_ylabel("samples used")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def render_pac_gap(rows: list[dict], out_path,
                   threshold: float | None = None) -> None:
    """Exact policy gap vs target eps, one marker per run, optional success
    threshold line."""
    _require_rows(rows, "pac-gap")
    fig, ax = plt.subplots(figsize=(6, 4))
    for algo, g in sorted(_by_algorithm(rows).items()):
        xs = [row["eps_or_T"] for row in g]
        ys = [row["gap"] for row in g]
        ax.scatter(xs, ys, label=algo, alpha=0.7)
    if threshold is not None:
        ax.axhline(threshold, linestyle=":", color="black",
                   label=f"threshold {threshold:g}")
    ax.set_xlabel(r"target $\epsilon$")
    ax.set_ylabel("exact policy gap")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


RENDERERS = {
    "regret-curve": render_regret_curve,
    "scaling": render_scaling,
    "pac-gap": render_pac_gap,
}
