"""Statistical filtering of time-series expression matrices down to candidate marker genes."""

__version__ = "0.1.0"

from .core import (
    ChannelPairMatrix,
    ConfigError,
    ExpressionMatrix,
    FilterOutcome,
    GenesiftError,
    PipelineConfig,
    PipelineResult,
    StageReport,
    ValidationError,
    validate_matrix,
)
from .filters import dedupe_replicates, filter_cv, filter_fold_change, filter_missing, filter_significance
from .ingest import ParseError, TableSchema, parse_table, write_table
from .pipeline import PIPELINE_STAGES, StageError, run_pipeline, run_stage
from .report import PlotSpec, render_dot_plot_svg, render_gene_table, render_summary
from .stats import coefficient_of_variation, mean, std_dev, t_pvalue, t_statistic
from .synth import SynthSpec, generate_synthetic
from .transform import compute_ma, log2_ratio, logsigmoid, logsigmoid_matrix, lowess_fit, lowess_normalize
