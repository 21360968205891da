"""End-to-end orchestration: preprocessing, affinity construction,
three-stage fusion, clustering, evaluation, and survival testing.

Sample alignment contract: the three matrices (and the survival file,
when given) must cover exactly the same sample IDs; everything is
reordered to the first matrix's order before any computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .affinity import affinity_from_distance, euclidean_distance_matrix
from .bgmm import fit_bayesian_gmm
from .cca import all_directed_pair_distances
from .clustering import Partition, SweepRow, ari, kmeans_pp, nmi, sweep_k2_metrics
from .errors import AlignmentError
from .fusion import ThreeStageResult, eigenvector_count, three_stage_fuse
from .numkernel import sym_eig
from .preprocess import (
    OmicsMatrix,
    apply_power_transform,
    filter_sparse_features,
    fit_power_transform,
    knn_impute,
    select_features_bgmm,
    zscore_standardize,
)
from .survival import SurvivalRecord, SurvivalReport, logrank_test

CLUSTER_INPUTS = ("network", "spectral")


@dataclass
class PipelineConfig:
    zero_fraction_threshold: float = 0.20
    impute_k: int | None = None  # None -> round(sqrt(n))
    transform: str = "yeo_johnson"
    cumulative_target: float = 0.95
    max_components: int = 10
    k1: int | None = None  # None -> round(sqrt(n))
    stage1_k2: tuple[int, int] = (2, 100)
    stage2_k2: tuple[int, int] | None = None  # None -> (2, n + 2)
    stage3_k2: tuple[int, int] = (2, 100)
    k3_set: tuple[int, ...] = (3, 4, 5)
    clusters: int = 2  # evaluation cluster count for labeled runs
    cluster_on: str = "network"  # "network": rows of S; "spectral": rows of F
    seed: int = 0
    restarts: int = 10
    max_iter: int = 100
    tol: float = 1e-6

    def __post_init__(self):
        if self.cluster_on not in CLUSTER_INPUTS:
            raise ValueError(f"cluster_on must be one of {CLUSTER_INPUTS}, got {self.cluster_on!r}")
        if self.transform not in ("yeo_johnson", "box_cox"):
            raise ValueError(f"transform must be yeo_johnson or box_cox, got {self.transform!r}")
        if not 0.0 < self.cumulative_target <= 1.0:
            raise ValueError(f"cumulative_target must be in (0, 1], got {self.cumulative_target}")
        if self.clusters < 2:
            raise ValueError(f"clusters must be >= 2, got {self.clusters}")
        if any(k3 < 2 for k3 in self.k3_set):
            raise ValueError(f"every k3 must be >= 2, got {self.k3_set}")


@dataclass
class PreprocessReport:
    kind: str
    features_in: int
    sparse_removed: list[str]
    imputed_cells: int
    constant_dropped: list[str]
    transform_method: str
    lambda_min: float
    lambda_max: float
    selected_features: list[str]
    effective_components: int

    @property
    def features_out(self) -> int:
        return len(self.selected_features)


@dataclass
class PipelineResult:
    sample_ids: list[str]
    preprocess: list[PreprocessReport]
    processed: list[OmicsMatrix]
    intra_affinities: dict[str, np.ndarray]
    inter_affinities: dict[str, np.ndarray]
    fusion: ThreeStageResult
    final_partition: Partition
    partitions_by_k3: dict[int, Partition] = field(default_factory=dict)
    survival_by_k3: dict[int, SurvivalReport] = field(default_factory=dict)
    metrics_rows: list[SweepRow] | None = None
    final_ari: float | None = None
    final_nmi: float | None = None


def _id_mismatch(reference, other, what: str):
    ref_set, other_set = set(reference), set(other)
    missing = sorted(ref_set - other_set)[:10]
    extra = sorted(other_set - ref_set)[:10]
    return AlignmentError(
        f"{what}: sample IDs do not match the first matrix"
        f" (missing: {missing}, unexpected: {extra})"
    )


def _reorder_matrix(m: OmicsMatrix, order: list[str]) -> OmicsMatrix:
    if m.sample_ids == order:
        return m
    pos = {sid: i for i, sid in enumerate(m.sample_ids)}
    idx = np.array([pos[sid] for sid in order])
    return OmicsMatrix(
        values=m.values[idx],
        sample_ids=list(order),
        feature_ids=list(m.feature_ids),
        kind=m.kind,
        missing_mask=m.missing_mask[idx],
    )


def align_inputs(
    omics: list[OmicsMatrix],
    records: list[SurvivalRecord] | None,
) -> tuple[list[OmicsMatrix], list[SurvivalRecord] | None]:
    """Reorder every input to the first matrix's sample order; the ID sets
    must already coincide."""
    if len(omics) != 3:
        raise ValueError(f"expected exactly 3 omics matrices, got {len(omics)}")
    order = omics[0].sample_ids
    aligned = [omics[0]]
    for m in omics[1:]:
        if set(m.sample_ids) != set(order):
            raise _id_mismatch(order, m.sample_ids, f"{m.kind} matrix")
        aligned.append(_reorder_matrix(m, order))
    aligned_records = None
    if records is not None:
        by_id = {r.sample_id: r for r in records}
        if len(by_id) != len(records):
            raise AlignmentError("survival file: duplicate sample IDs")
        if set(by_id) != set(order):
            raise _id_mismatch(order, list(by_id), "survival file")
        aligned_records = [by_id[sid] for sid in order]
    return aligned, aligned_records


def preprocess_matrix(
    m: OmicsMatrix, config: PipelineConfig, seed: int
) -> tuple[OmicsMatrix, PreprocessReport]:
    """One matrix through the shared chain: sparse filter, KNN imputation,
    standardization, power transform, model-based feature selection."""
    features_in = m.n_features
    filtered, removed_idx = filter_sparse_features(m, config.zero_fraction_threshold)
    sparse_removed = [m.feature_ids[i] for i in removed_idx]

    imputed, n_imputed = knn_impute(filtered, config.impute_k)
    standardized, constant_dropped = zscore_standardize(imputed)

    params = fit_power_transform(standardized, config.transform)
    transformed = apply_power_transform(standardized, params)

    model = fit_bayesian_gmm(transformed, max_components=config.max_components, seed=seed)
    selected, _ = select_features_bgmm(
        transformed,
        cumulative_target=config.cumulative_target,
        model=model,
    )
    report = PreprocessReport(
        kind=m.kind,
        features_in=features_in,
        sparse_removed=sparse_removed,
        imputed_cells=n_imputed,
        constant_dropped=constant_dropped,
        transform_method=config.transform,
        lambda_min=float(params.lambdas.min()),
        lambda_max=float(params.lambdas.max()),
        selected_features=list(selected.feature_ids),
        effective_components=model.effective_components,
    )
    return selected, report


def _cluster_points(fusion: ThreeStageResult, config: PipelineConfig) -> np.ndarray:
    if config.cluster_on == "network":
        return fusion.s_final
    s_sym = 0.5 * (fusion.s_final + fusion.s_final.T)
    n = s_sym.shape[0]
    _, f = sym_eig(np.eye(n) - s_sym, fusion.eigenvector_count, which="smallest")
    return f


def run_pipeline(
    omics: list[OmicsMatrix],
    records: list[SurvivalRecord] | None = None,
    true_labels: Partition | None = None,
    config: PipelineConfig | None = None,
) -> PipelineResult:
    """Full labeled or unlabeled run.  ``true_labels`` must follow the first
    matrix's sample order."""
    config = config or PipelineConfig()
    omics, records = align_inputs(omics, records)
    order = omics[0].sample_ids
    if true_labels is not None and true_labels.n != len(order):
        raise AlignmentError(
            f"true labels cover {true_labels.n} samples, matrices have {len(order)}"
        )

    processed = []
    reports = []
    for idx, m in enumerate(omics):
        sel, rep = preprocess_matrix(m, config, seed=config.seed + idx)
        processed.append(sel)
        reports.append(rep)

    intra = {}
    for m in processed:
        d = euclidean_distance_matrix(m.values)
        intra[m.kind] = affinity_from_distance(d, config.k1)

    inter = {}
    for pair, d in all_directed_pair_distances(processed):
        inter[pair.label()] = affinity_from_distance(d, config.k1)

    fusion = three_stage_fuse(
        list(intra.values()),
        list(inter.values()),
        cluster_count=config.clusters,
        stage1_k2_range=config.stage1_k2,
        stage2_k2_range=config.stage2_k2,
        stage3_k2_range=config.stage3_k2,
        k1=config.k1,
        max_iter=config.max_iter,
        tol=config.tol,
    )

    points = _cluster_points(fusion, config)
    final_partition = kmeans_pp(
        points, config.clusters, seed=config.seed, restarts=config.restarts
    )

    metrics_rows = None
    final_ari = final_nmi = None
    if true_labels is not None:
        metrics_rows = sweep_k2_metrics(
            fusion.candidates,
            true_labels,
            k=config.clusters,
            seed=config.seed,
            restarts=config.restarts,
        )
        final_ari = ari(final_partition, true_labels)
        final_nmi = nmi(final_partition, true_labels)

    partitions_by_k3 = {}
    survival_by_k3 = {}
    for k3 in config.k3_set:
        if k3 > len(order):
            continue
        part = kmeans_pp(points, k3, seed=config.seed, restarts=config.restarts)
        partitions_by_k3[k3] = part
        if records is not None:
            survival_by_k3[k3] = logrank_test(part, records)

    return PipelineResult(
        sample_ids=list(order),
        preprocess=reports,
        processed=processed,
        intra_affinities=intra,
        inter_affinities=inter,
        fusion=fusion,
        final_partition=final_partition,
        partitions_by_k3=partitions_by_k3,
        survival_by_k3=survival_by_k3,
        metrics_rows=metrics_rows,
        final_ari=final_ari,
        final_nmi=final_nmi,
    )
