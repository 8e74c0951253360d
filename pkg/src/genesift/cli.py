"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .core import ConfigError, GenesiftError, PipelineConfig
from .ingest import TableSchema, parse_table, write_table
from .pipeline import PIPELINE_STAGES, run_pipeline, run_stage
from .report import PlotSpec, read_gene_table, render_dot_plot_svg, render_gene_table, render_summary
from .synth import SynthSpec, generate_synthetic

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

PUBLISHED_PROFILE = {
    "input_mode": "log_ratios",
    "lowess_enabled": False,
    "missing_max_frac": 0.4,
    "significance_enabled": False,
    "replicate_policy": "mean",
    "fold_mean_threshold": 1.0,
    "cv_max_percent": 36.0,
    "sd_mode": "sample",
}

# flag dest -> PipelineConfig field
_FLAG_FIELDS = {
    "input_mode": "input_mode",
    "lowess": "lowess_enabled",
    "lowess_frac": "lowess_frac",
    "lowess_iters": "lowess_iterations",
    "missing_max": "missing_max_frac",
    "significance": "significance_enabled",
    "alpha": "significance_alpha",
    "replicate_policy": "replicate_policy",
    "fold_threshold": "fold_mean_threshold",
    "cv_max": "cv_max_percent",
    "sd_mode": "sd_mode",
    "seed": "rng_seed",
}

log = logging.getLogger("genesift")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_usage().rstrip()}")


def load_config_overrides(path) -> dict:
    """Read a flat JSON object of PipelineConfig fields; unknown keys are errors."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object of key/value pairs")
    known = set(PipelineConfig.field_names())
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s): {', '.join(unknown)}")
    return data


def load_config(path) -> PipelineConfig:
    return PipelineConfig(**load_config_overrides(path))


def resolve_config(args) -> PipelineConfig:
    """Built-in defaults < --profile < --config file < individual flags."""
    values = PipelineConfig().to_dict()
    if getattr(args, "profile", None) == "paper":
        values.update(PUBLISHED_PROFILE)
    if getattr(args, "config", None):
        values.update(load_config_overrides(args.config))
        PipelineConfig(**values)
    for dest, name in _FLAG_FIELDS.items():
        flag_value = getattr(args, dest, None)
        if flag_value is not None:
            values[name] = flag_value
    try:
        return PipelineConfig(**values)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _add_config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("pipeline settings")
    g.add_argument("--config", help="JSON file of pipeline settings")
    g.add_argument("--profile", choices=["default", "paper"],
                   help="preset; 'paper' applies the published thresholds with the t-test off")
    g.add_argument("--input-mode", choices=["log_ratios", "two_channel"])
    g.add_argument("--lowess", dest="lowess", action="store_true", default=None)
    g.add_argument("--no-lowess", dest="lowess", action="store_false")
    g.add_argument("--lowess-frac", type=float)
    g.add_argument("--lowess-iters", type=int)
    g.add_argument("--missing-max", type=float, help="max fraction of missing cells per gene")
    g.add_argument("--alpha", type=float, help="t-test significance level")
    g.add_argument("--significance", dest="significance", action="store_true", default=None)
    g.add_argument("--no-significance", dest="significance", action="store_false")
    g.add_argument("--replicate-policy", choices=["mean", "first", "drop_all"])
    g.add_argument("--fold-threshold", type=float, help="min |mean log2 ratio|")
    g.add_argument("--cv-max", type=float, help="keep genes with CV below this percent")
    g.add_argument("--sd-mode", choices=["sample", "population"])
    g.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="genesift", description="Filter time-series expression data down to marker genes.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)

    p = sub.add_parser("stage", help="run a single stage and write its table")
    p.add_argument("--input", required=True)
    p.add_argument("--stage", required=True, choices=PIPELINE_STAGES)
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)

    p = sub.add_parser("synth", help="write a synthetic matrix with planted markers")
    p.add_argument("--genes", type=int, default=100)
    p.add_argument("--samples", type=int, default=12)
    p.add_argument("--markers", type=float, default=0.1, help="fraction of planted marker genes")
    p.add_argument("--missing-frac", type=float, default=0.05)
    p.add_argument("--duplicates", type=int, default=0)
    p.add_argument("--noise-sd", type=float, default=0.25)
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)

    p = sub.add_parser("plot", help="render the CV dot plot from a gene table")
    p.add_argument("--input", required=True, help="gene_id/cv table")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cv-max", type=float, default=36.0, help="threshold line (percent)")

    sub.add_parser("version", help="print the version")
    return parser


def _read_input(path: str, config: PipelineConfig):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            if config.input_mode == "log_ratios":
                return parse_table(fh)
            header = fh.readline().rstrip("\r\n").split("\t")
            fh.seek(0)
            if (len(header) - 1) % 2:
                raise DataError(f"{path}: two-channel input needs (red, green) column pairs after the ID")
            pairs = [(header[k], header[k + 1]) for k in range(1, len(header), 2)]
            return parse_table(fh, TableSchema(value_columns=pairs), "two_channel")
    except OSError as exc:
        raise DataError(f"cannot read input {path}: {exc.strerror or exc}") from exc


@contextlib.contextmanager
def _atomic_outputs(out_dir: Path, names):
    """Yield {name: text handle}; rename all files into place only if the block succeeds."""
    out_dir.mkdir(parents=True, exist_ok=True)
    handles = {}
    try:
        for name in names:
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out_dir)
            handles[name] = (os.fdopen(fd, "w", encoding="utf-8", newline="\n"), tmp)
        yield {name: fh for name, (fh, _) in handles.items()}
        for fh, _ in handles.values():
            fh.close()
        for name, (_, tmp) in handles.items():
            os.replace(tmp, out_dir / name)
    finally:
        for fh, tmp in handles.values():
            fh.close()
            if os.path.exists(tmp):
                os.unlink(tmp)


def _cmd_run(args) -> int:
    config = resolve_config(args)
    data = _read_input(args.input, config)
    result = run_pipeline(data, config)
    with _atomic_outputs(Path(args.out), ["genes.tsv", "summary.json", "cv_plot.svg"]) as out:
        render_gene_table(result.cv_table, out["genes.tsv"])
        render_summary(result, out["summary.json"], config)
        spec = PlotSpec(threshold_percent=config.cv_max_percent)
        render_dot_plot_svg(result.screened_cv, spec, out["cv_plot.svg"])
    for report in result.stages:
        log.info("%-12s %6d -> %6d", report.stage_name, report.genes_in, report.genes_out)
    return EXIT_OK


def _cmd_stage(args) -> int:
    config = resolve_config(args)
    data = _read_input(args.input, config)
    outcome = run_stage(data, args.stage, config)
    report = outcome.report
    with _atomic_outputs(Path(args.out), [f"{args.stage}.tsv", f"{args.stage}_report.json"]) as out:
        write_table(outcome.kept, out[f"{args.stage}.tsv"])
        json.dump(
            {
                "stage": report.stage_name,
                "in": report.genes_in,
                "out": report.genes_out,
                "dropped": [{"id": g, "reason": r} for g, r in report.dropped],
            },
            out[f"{args.stage}_report.json"],
            indent=2,
        )
        out[f"{args.stage}_report.json"].write("\n")
    return EXIT_OK


def _cmd_synth(args) -> int:
    config = resolve_config(args)
    spec = SynthSpec(
        n_genes=args.genes,
        n_samples=args.samples,
        marker_fraction=args.markers,
        missing_fraction=args.missing_frac,
        duplicate_count=args.duplicates,
        noise_sd=args.noise_sd,
        seed=config.rng_seed,
    )
    matrix, truth = generate_synthetic(spec, config)
    with _atomic_outputs(Path(args.out), ["matrix.tsv", "ground_truth.txt"]) as out:
        write_table(matrix, out["matrix.tsv"])
        for gid in sorted(truth):
            out["ground_truth.txt"].write(gid + "\n")
    return EXIT_OK


def _cmd_plot(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as fh:
            table = read_gene_table(fh)
    except OSError as exc:
        raise DataError(f"cannot read input {args.input}: {exc.strerror or exc}") from exc
    with _atomic_outputs(Path(args.out), ["cv_plot.svg"]) as out:
        render_dot_plot_svg(table, PlotSpec(threshold_percent=args.cv_max), out["cv_plot.svg"])
    return EXIT_OK


def _diag(message: str) -> None:
    colored = sys.stderr.isatty() and not os.environ.get("GENESIFT_NO_COLOR")
    prefix = "\033[31mgenesift: error:\033[0m" if colored else "genesift: error:"
    print(f"{prefix} {message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _diag(str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="genesift: %(message)s")
    commands = {"run": _cmd_run, "stage": _cmd_stage, "synth": _cmd_synth, "plot": _cmd_plot}
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command is None:
        _diag("a subcommand is required\n\n" + parser.format_usage().rstrip())
        return EXIT_USAGE
    try:
        return commands[args.command](args)
    except UsageError as exc:
        _diag(str(exc))
        return EXIT_USAGE
    except (DataError, GenesiftError) as exc:
        _diag(str(exc))
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        _diag(f"internal error: {exc!r}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
