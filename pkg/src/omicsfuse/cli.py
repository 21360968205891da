"""Batch command-line front-end.

Subcommands: ``pipeline`` (full run with artifacts), ``synth`` (planted
dataset files), ``survival`` (log-rank report for a labeling), and
``metrics`` (ARI/NMI between two label files).

Exit codes: 0 success, 1 usage or unparseable input, 2 sample-alignment
failure, 3 numerical/degenerate failure, 4 I/O failure.  The default
output directory comes from the OMICSFUSE_OUTDIR environment variable
when no flag is given.  Config files are flat ``key = value`` lines;
explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .clustering import Partition, ari, nmi
from .errors import (
    AlignmentError,
    DegenerateInputError,
    DomainError,
    NumericalFailure,
)
from .io import (
    read_labels_csv,
    read_matrix_csv,
    read_survival_csv,
    write_json,
    write_labels_csv,
    write_matrix_csv,
    write_survival_csv,
    write_table_csv,
)
from .pipeline import PipelineConfig, run_pipeline
from .survival import SIGNIFICANCE_NEG_LOG10_P, logrank_test
from .synthgen import SynthSpec, generate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ALIGNMENT = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

OUTDIR_ENV = "OMICSFUSE_OUTDIR"


class CliParser(argparse.ArgumentParser):
    """argparse parser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _int_pair(text: str) -> tuple[int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return int(parts[0]), int(parts[1])


def _int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in text.split(","))


def _int_triple(text: str) -> tuple[int, int, int]:
    parts = _int_tuple(text)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three counts, got {text!r}")
    return parts


# pipeline knobs: flag/config-file name -> parser from text
_KNOB_PARSERS = {
    "zero_fraction_threshold": float,
    "impute_k": int,
    "transform": str,
    "cumulative_target": float,
    "max_components": int,
    "k1": int,
    "stage1_k2": _int_pair,
    "stage2_k2": _int_pair,
    "stage3_k2": _int_pair,
    "k3_set": _int_tuple,
    "clusters": int,
    "cluster_on": str,
    "seed": int,
    "restarts": int,
    "max_iter": int,
    "tol": float,
}
_PATH_KEYS = ("gene_expression", "mirna", "methylation", "survival", "labels", "outdir")


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment; blank lines ignored."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _KNOB_PARSERS:
            try:
                values[key] = _KNOB_PARSERS[key](val)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        elif key in _PATH_KEYS:
            values[key] = val
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return values


def build_parser() -> CliParser:
    parser = CliParser(prog="omicsfuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = sub.add_parser("pipeline", help="run the full integration pipeline")
    p.add_argument("--gene-expression", dest="gene_expression", help="gene expression matrix CSV")
    p.add_argument("--mirna", help="miRNA matrix CSV")
    p.add_argument("--methylation", help="methylation matrix CSV")
    p.add_argument("--survival", help="survival CSV (sample_id,time,event)")
    p.add_argument("--labels", help="optional true labels CSV for evaluation")
    p.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV})")
    p.add_argument("--config", help="flat key = value config file; flags override")
    p.add_argument("--zero-fraction-threshold", dest="zero_fraction_threshold", type=float)
    p.add_argument("--impute-k", dest="impute_k", type=int)
    p.add_argument("--transform", choices=("yeo_johnson", "box_cox"))
    p.add_argument("--cumulative-target", dest="cumulative_target", type=float)
    p.add_argument("--max-components", dest="max_components", type=int)
    p.add_argument("--k1", type=int)
    p.add_argument("--stage1-k2", dest="stage1_k2", type=_int_pair, metavar="LO,HI")
    p.add_argument("--stage2-k2", dest="stage2_k2", type=_int_pair, metavar="LO,HI")
    p.add_argument("--stage3-k2", dest="stage3_k2", type=_int_pair, metavar="LO,HI")
    p.add_argument("--k3-set", dest="k3_set", type=_int_tuple, metavar="K,K,...")
    p.add_argument("--clusters", type=int)
    p.add_argument("--cluster-on", dest="cluster_on", choices=("network", "spectral"))
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)

    s = sub.add_parser("synth", help="write a planted synthetic dataset")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--dims", type=_int_triple, default=(60, 40, 50), metavar="D1,D2,D3")
    s.add_argument("--separation", type=float, default=8.0)
    s.add_argument("--noise-fraction", dest="noise_fraction", type=float, default=0.3)
    s.add_argument("--missing-rate", dest="missing_rate", type=float, default=0.05)
    s.add_argument("--hazard-ratio", dest="hazard_ratio", type=float, default=3.0)
    s.add_argument("--high-missing-fraction", dest="high_missing_fraction",
                   type=float, default=0.0)
    s.add_argument("--high-missing-rate", dest="high_missing_rate",
                   type=float, default=0.4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV})")

    v = sub.add_parser("survival", help="log-rank report for a labeling")
    v.add_argument("--labels", required=True, help="labels CSV (sample_id,label)")
    v.add_argument("--survival", required=True, help="survival CSV")
    v.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV})")

    m = sub.add_parser("metrics", help="ARI/NMI between two label files")
    m.add_argument("--labels", required=True, help="labels CSV to score")
    m.add_argument("--reference", required=True, help="reference labels CSV")
    m.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV})")
    return parser


def _resolve_outdir(flag_value) -> Path:
    outdir = flag_value or os.environ.get(OUTDIR_ENV)
    if not outdir:
        raise ValueError(
            f"no output directory: pass --outdir or set ${OUTDIR_ENV}"
        )
    path = Path(outdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _align_labels_to(order: list[str], label_path) -> Partition:
    ids, labels = read_labels_csv(label_path)
    by_id = dict(zip(ids, labels))
    if len(by_id) != len(ids):
        raise AlignmentError(f"{label_path}: duplicate sample IDs")
    if set(by_id) != set(order):
        missing = sorted(set(order) - set(by_id))[:10]
        extra = sorted(set(by_id) - set(order))[:10]
        raise AlignmentError(
            f"{label_path}: sample IDs do not match the matrices"
            f" (missing: {missing}, unexpected: {extra})"
        )
    return Partition.from_labels([by_id[sid] for sid in order])


def _write_square_csv(path, ids: list[str], matrix: np.ndarray) -> None:
    rows = [[sid, *(float(v) for v in row)] for sid, row in zip(ids, matrix)]
    write_table_csv(path, ["sample_id", *ids], rows)


def _stage_payload(stage) -> dict:
    return {
        "k2": stage.k2,
        "gamma": stage.gamma,
        "k2_grid": stage.k2_grid.tolist(),
        "rr_values": stage.rr_values.tolist(),
        "alpha": stage.state.alpha.tolist(),
        "objective_trace": stage.state.objective_trace.tolist(),
        "converged": stage.state.converged,
    }


def cmd_pipeline(args) -> int:
    file_cfg = read_config_file(args.config) if args.config else {}

    def pick(name):
        flag = getattr(args, name, None)
        return flag if flag is not None else file_cfg.get(name)

    paths = {key: pick(key) for key in _PATH_KEYS}
    missing = [k for k in ("gene_expression", "mirna", "methylation", "survival")
               if not paths[k]]
    if missing:
        raise ValueError(f"missing required input path(s): {', '.join(missing)}")

    knobs = {}
    for name in _KNOB_PARSERS:
        val = pick(name)
        if val is not None:
            knobs[name] = val
    config = PipelineConfig(**knobs)
    outdir = _resolve_outdir(paths["outdir"])

    matrices = [
        read_matrix_csv(paths["gene_expression"], kind="gene_expression"),
        read_matrix_csv(paths["mirna"], kind="mirna"),
        read_matrix_csv(paths["methylation"], kind="methylation"),
    ]
    records = read_survival_csv(paths["survival"])
    true_labels = None
    if paths["labels"]:
        true_labels = _align_labels_to(matrices[0].sample_ids, paths["labels"])

    result = run_pipeline(matrices, records, true_labels, config)

    echo = asdict(config)
    echo.update({k: paths[k] for k in _PATH_KEYS if paths[k] and k != "outdir"})
    write_json(outdir / "config.json", echo)

    write_json(outdir / "preprocess_report.json",
               {rep.kind: asdict(rep) for rep in result.preprocess})

    ids = result.sample_ids
    aff_dir = outdir / "affinities"
    aff_dir.mkdir(exist_ok=True)
    for kind, a in result.intra_affinities.items():
        _write_square_csv(aff_dir / f"intra_{kind}.csv", ids, a)
    for label, a in result.inter_affinities.items():
        _write_square_csv(aff_dir / f"inter_{label}.csv", ids, a)

    fusion = result.fusion
    write_json(outdir / "fusion_stages.json", {
        "stage1": _stage_payload(fusion.stage1),
        "stage2": _stage_payload(fusion.stage2),
        "stage3": {"selected_k2": fusion.selected_k2,
                   "eigenvector_count": fusion.eigenvector_count},
    })

    cand_dir = outdir / "stage3_candidates"
    cand_dir.mkdir(exist_ok=True)
    cand_rows = []
    for cand in fusion.candidates:
        cand_rows.append([cand.k2, cand.gamma, cand.objective, cand.n_iter,
                          cand.error or ""])
        if cand.s is not None:
            _write_square_csv(cand_dir / f"s_k2_{cand.k2:03d}.csv", ids, cand.s)
    write_table_csv(outdir / "stage3_candidates.csv",
                    ["k2", "gamma", "objective", "n_iter", "error"], cand_rows)
    _write_square_csv(outdir / "s_final.csv", ids, fusion.s_final)

    write_labels_csv(outdir / "labels_final.csv", ids,
                     result.final_partition.labels.tolist())
    for k3, part in sorted(result.partitions_by_k3.items()):
        write_labels_csv(outdir / f"labels_k3_{k3}.csv", ids, part.labels.tolist())

    survival_payload = {
        "threshold_neg_log10_p": SIGNIFICANCE_NEG_LOG10_P,
        "by_k3": {str(k3): asdict(rep) for k3, rep in result.survival_by_k3.items()},
    }
    write_json(outdir / "survival_report.json", survival_payload)

    if result.metrics_rows is not None:
        write_table_csv(
            outdir / "metrics_k2_sweep.csv",
            ["k2", "ari", "nmi", "error"],
            [[r.k2, r.ari, r.nmi, r.error or ""] for r in result.metrics_rows],
        )
        write_json(outdir / "metrics_final.json",
                   {"ari": result.final_ari, "nmi": result.final_nmi,
                    "selected_k2": fusion.selected_k2})
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n=args.n,
        k=args.k,
        dims=args.dims,
        separation=args.separation,
        noise_features_fraction=args.noise_fraction,
        missing_rate=args.missing_rate,
        hazard_ratio=args.hazard_ratio,
        seed=args.seed,
        high_missing_fraction=args.high_missing_fraction,
        high_missing_rate=args.high_missing_rate,
    )
    outdir = _resolve_outdir(args.outdir)
    matrices, labels, records = generate(spec)
    for m in matrices:
        write_matrix_csv(outdir / f"{m.kind}.csv", m)
    write_survival_csv(outdir / "survival.csv", records)
    write_labels_csv(outdir / "labels.csv", matrices[0].sample_ids,
                     labels.labels.tolist())
    return EXIT_OK


def cmd_survival(args) -> int:
    records = read_survival_csv(args.survival)
    order = [r.sample_id for r in records]
    if len(set(order)) != len(order):
        raise AlignmentError(f"{args.survival}: duplicate sample IDs")
    part = _align_labels_to(order, args.labels)
    report = logrank_test(part, records)
    outdir = _resolve_outdir(args.outdir)
    payload = asdict(report)
    payload["threshold_neg_log10_p"] = SIGNIFICANCE_NEG_LOG10_P
    write_json(outdir / "survival_report.json", payload)
    return EXIT_OK


def cmd_metrics(args) -> int:
    ids, labels = read_labels_csv(args.labels)
    part = Partition.from_labels(labels)
    ref = _align_labels_to(ids, args.reference)
    outdir = _resolve_outdir(args.outdir)
    write_json(outdir / "metrics.json",
               {"ari": ari(part, ref), "nmi": nmi(part, ref)})
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "pipeline": cmd_pipeline,
        "synth": cmd_synth,
        "survival": cmd_survival,
        "metrics": cmd_metrics,
    }[args.command]
    try:
        return handler(args)
    except AlignmentError as exc:
        print(f"omicsfuse: alignment error: {exc}", file=sys.stderr)
        return EXIT_ALIGNMENT
    except (NumericalFailure, DegenerateInputError, DomainError) as exc:
        print(f"omicsfuse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"omicsfuse: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"omicsfuse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
