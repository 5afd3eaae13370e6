"""Static SVG figures for error histograms and sweeps.

Figures are rendered with a fixed hash salt and no date metadata so the same
data always produces the same bytes.
"""
import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {"svg.hashsalt": "cubesat-battery", "svg.fonttype": "none"}


def _to_svg(fig):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def histogram_svg(report, title=None):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        e = report.histogram_edges
        ax.bar(0.5 * (e[:-1] + e[1:]), report.histogram_counts, width=0.45, color="#3b6ea5")
        ax.set_xlabel("error, LSB")
        ax.set_ylabel("samples")
        ax.set_title(title or f"{report.label} prediction error (LSB = {report.lsb_step:g} V)")
        return _to_svg(fig)


def sweep_svg(sweep, title=None):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for d, row in zip(sweep.dod_levels, sweep.values):
            ax.plot(sweep.currents, row, label=f"DOD {d:g} mA·h")
        ax.set_xlabel("I_batt, mA")
        ax.set_ylabel("ΔU/ΔI, V/mA" if sweep.kind == "dU/dI" else "V_batt, V")
        ax.set_title(title or f"T = {sweep.temperature:g} °C")
        ax.legend(fontsize=7, ncol=2)
        return _to_svg(fig)
