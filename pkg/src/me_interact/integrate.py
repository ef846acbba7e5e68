"""Within-module PCA and assembly of the downstream feature set.

Each module's member columns (genes first, then regulators) are reduced to
the leading principal-component scores covering at least the requested share
of variance; columns outside every module pass through unchanged as Z.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, FeatureSet, ModuleBlock
from .errors import StructuralError

PCA_THRESHOLD = 0.80


def module_pca(stacked: np.ndarray, threshold: float = PCA_THRESHOLD):
    """PCA by SVD of the column-centered input.

    Keeps the smallest component count whose cumulative explained variance
    reaches the threshold.  Component signs are fixed so the largest-magnitude
    loading in each component is positive.  Returns (scores, loadings,
    explained ratios, column means).
    """
    stacked = np.asarray(stacked, dtype=np.float64)
    if stacked.ndim != 2 or stacked.shape[0] < 2:
        raise StructuralError("PCA input must have at least two rows")
    col_means = stacked.mean(axis=0)
    centered = stacked - col_means
    U, sing, Vt = np.linalg.svd(centered, full_matrices=False)
    total = float((sing ** 2).sum())
    if total <= 0.0:
        raise StructuralError("rank-zero input: no variance to decompose")
    ratios = sing ** 2 / total
    k = int(np.searchsorted(np.cumsum(ratios), threshold - 1e-12) + 1)
    k = min(k, sing.size)
    loadings = Vt[:k].T.copy()
    scores = U[:, :k] * sing[:k]
    for i in range(k):
        j = int(np.argmax(np.abs(loadings[:, i])))
        if loadings[j, i] < 0:
            loadings[:, i] = -loadings[:, i]
            scores[:, i] = -scores[:, i]
    return scores, loadings, ratios[:k].copy(), col_means


def assemble_features(dataset: Dataset, modules, threshold: float = PCA_THRESHOLD) -> FeatureSet:
    """Build per-module PC blocks and the leftover matrix Z.

    Z holds the gene then regulator columns belonging to no module; provenance
    for every block and Z column is recorded so selections map back to the
    original measurements.
    """
    G, R = dataset.G, dataset.R
    p, q = G.shape[1], R.shape[1]
    blocks = []
    meta = []
    for module in modules:
        genes = np.asarray(module.genes, dtype=np.int64)
        regs = np.asarray(module.regulators, dtype=np.int64)
        if genes.size and (genes.min() < 0 or genes.max() >= p):
            raise StructuralError("module gene indices out of range")
        if regs.size and (regs.min() < 0 or regs.max() >= q):
            raise StructuralError("module regulator indices out of range")
        stacked = np.hstack([G[:, genes], R[:, regs]])
        scores, loadings, explained, col_means = module_pca(stacked, threshold)
        blocks.append(scores)
        meta.append(ModuleBlock(
            gene_indices=genes, regulator_indices=regs,
            loadings=loadings, col_means=col_means, explained=explained,
        ))
    in_module_genes = np.zeros(p, dtype=bool)
    in_module_regs = np.zeros(q, dtype=bool)
    for block in meta:
        in_module_genes[block.gene_indices] = True
        in_module_regs[block.regulator_indices] = True
    free_genes = np.flatnonzero(~in_module_genes)
    free_regs = np.flatnonzero(~in_module_regs)
    Z = np.hstack([G[:, free_genes], R[:, free_regs]]) if (free_genes.size + free_regs.size) else np.empty((dataset.n, 0))
    z_meta = [("gene", int(j)) for j in free_genes] + [("regulator", int(l)) for l in free_regs]
    return FeatureSet(X_blocks=blocks, Z=Z, block_meta=meta, z_meta=z_meta)


def assemble_raw_groups(dataset: Dataset, modules) -> FeatureSet:
    """Alt-style grouping: raw member columns form each block, no PCA."""
    G, R = dataset.G, dataset.R
    p, q = G.shape[1], R.shape[1]
    blocks = []
    meta = []
    for module in modules:
        genes = np.asarray(module.genes, dtype=np.int64)
        regs = np.asarray(module.regulators, dtype=np.int64)
        stacked = np.hstack([G[:, genes], R[:, regs]])
        width = stacked.shape[1]
        blocks.append(stacked)
        meta.append(ModuleBlock(
            gene_indices=genes, regulator_indices=regs,
            loadings=np.eye(width), col_means=np.zeros(width),
            explained=np.full(width, 1.0 / width),
        ))
    in_module_genes = np.zeros(p, dtype=bool)
    in_module_regs = np.zeros(q, dtype=bool)
    for block in meta:
        in_module_genes[block.gene_indices] = True
        in_module_regs[block.regulator_indices] = True
    free_genes = np.flatnonzero(~in_module_genes)
    free_regs = np.flatnonzero(~in_module_regs)
    Z = np.hstack([G[:, free_genes], R[:, free_regs]]) if (free_genes.size + free_regs.size) else np.empty((dataset.n, 0))
    z_meta = [("gene", int(j)) for j in free_genes] + [("regulator", int(l)) for l in free_regs]
    return FeatureSet(X_blocks=blocks, Z=Z, block_meta=meta, z_meta=z_meta, raw_blocks=True)


def assemble_individual(dataset: Dataset) -> FeatureSet:
    """No modules at all: every gene and regulator is an individual feature."""
    return assemble_features(dataset, [])


def transform_features(features: FeatureSet, G: np.ndarray, R: np.ndarray):
    """Apply a fitted feature map to new (already standardized) rows."""
    G = np.asarray(G, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    blocks = []
    for block in features.block_meta:
        stacked = np.hstack([G[:, block.gene_indices], R[:, block.regulator_indices]])
        if features.raw_blocks:
            blocks.append(stacked)
        else:
            blocks.append((stacked - block.col_means) @ block.loadings)
    cols = []
    for kind, idx in features.z_meta:
        cols.append(G[:, idx] if kind == "gene" else R[:, idx])
    Z = np.column_stack(cols) if cols else np.empty((G.shape[0], 0))
    return blocks, Z
