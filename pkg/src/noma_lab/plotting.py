"""Figure rendering for scenario results.

Renders a PNG next to the CSV: mean EE (with 95% CI band) versus the sweep
value per scheme for multi-point sweeps, and the match-operation CDF for
single-metric scenarios (fig2/fig3-style runs).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import ResultTable, cdf, mean_ci95

_SCHEME_STYLE = {
    "SSPA-1": dict(color="tab:blue", marker="o"),
    "SSPA-2": dict(color="tab:red", marker="s"),
    "RA-NOMA": dict(color="tab:green", marker="^"),
}

_SWEEP_LABEL = {
    "M": "number of user pairs M",
    "N": "number of subcarriers N",
    "Pc_dB": "circuit power (dB-configured)",
    "sigma2_dBm": "noise power per SC (dBm)",
    "P_Am_over_sigma2_dB": "P_A / sigma^2 (dB)",
}


def _plot_ee_vs_sweep(ax, table: ResultTable) -> None:
    schemes = sorted({r.scheme for r in table.rows})
    values = sorted({r.sweep_value for r in table.rows})
    for scheme in schemes:
        means, los, his = [], [], []
        for v in values:
            ee = [r.ee_bps_per_w for r in table.select(scheme, v)]
            mean, lo, hi = mean_ci95(ee)
            means.append(mean)
            los.append(lo)
            his.append(hi)
        style = _SCHEME_STYLE.get(scheme, {})
        ax.plot(values, means, label=scheme, **style)
        ax.fill_between(values, los, his, alpha=0.15,
                        color=style.get("color"))
    param = table.rows[0].sweep_param
    ax.set_xlabel(_SWEEP_LABEL.get(param, param))
    ax.set_ylabel("secrecy energy efficiency (bit/s/W)")
    ax.legend()


def _plot_match_ops_cdf(ax, table: ResultTable) -> None:
    values = sorted({r.sweep_value for r in table.rows})
    param = table.rows[0].sweep_param
    for v in values:
        for scheme in sorted({r.scheme for r in table.select(sweep_value=v)}):
            ops = [r.match_ops for r in table.select(scheme, v)]
            pts = cdf(ops)
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            ax.step(xs, ys, where="post",
                    label=f"{scheme}, {param}={v:g}")
    ax.set_xlabel("match operations")
    ax.set_ylabel("C.D.F.")
    ax.set_ylim(0.0, 1.05)
    ax.legend()


def render_scenario(table: ResultTable, path: str) -> None:
    """Render the natural figure for a result table to `path`."""
    if not table.rows:
        raise ValueError("cannot render an empty result table")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    name = table.rows[0].scenario
    if name in ("fig2", "fig3"):
        _plot_match_ops_cdf(ax, table)
    else:
        _plot_ee_vs_sweep(ax, table)
    ax.set_title(name)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
