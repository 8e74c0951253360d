"""
The CV dot plot
===============

Every gene that reaches the CV stage gets a dot; the thick rule marks the
cut. Writes cv_plot.svg next to this script.
"""

# %%
from pathlib import Path

from genesift import SynthSpec, generate_synthetic, run_pipeline
from genesift.report import PlotSpec, render_dot_plot_svg

matrix, _ = generate_synthetic(SynthSpec(n_genes=2000, n_samples=12, marker_fraction=0.04, seed=4))
result = run_pipeline(matrix)
screened = result.screened_cv
print(f"{len(screened)} genes reached the CV stage, {len(result.cv_table)} fall under 36%")

# %%
out = Path(__file__).with_name("cv_plot.svg")
with out.open("w", encoding="utf-8") as fh:
    render_dot_plot_svg(screened, PlotSpec(threshold_percent=36.0), fh)
print("wrote", out)
