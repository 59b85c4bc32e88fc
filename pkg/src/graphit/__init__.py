"""Graph transformer with kernel-modulated attention and structural node features.

The library is organized bottom-up:

    graphs     graph container, adjacency / degrees / normalized Laplacian
    spectral   Jacobi eigensolver, spectral matrix functions, matrix powers
    kernels    diffusion / p-step walk / normalized adjacency kernels, LapPE
    paths      simple-path enumeration and Nystrom path-feature embeddings
    autodiff   minimal reverse-mode engine over dense numpy tensors
    optim      Adam and the halving / warmup learning-rate schedules
    checkpoint binary parameter + optimizer-state container
    model      the encoder: kernel-modulated multi-head attention
    data       TU-format and ZINC loaders, split plans
    train      epoch loop, sign-flip augmentation, selection protocol
    cli        experiment commands (kernel, train, sweep, export-attention,
               prepare-splits)
"""
from .graphs import Graph, adjacency, degree_vector, normalized_laplacian, permute
from .spectral import EigenDecomposition, matrix_function, matrix_power, symmetric_eig
from .kernels import (KernelMatrix, KernelSpec, adjacency_pe, all_ones_kernel,
                      apply_zero_diagonal, build_kernel, diffusion_kernel,
                      laplacian_pe, p_step_rw_kernel)
from .paths import (NystromEmbedding, embed_nodes, enumerate_paths,
                    fit_path_embedding, fit_unsupervised, path_features)
from .model import GraphBatch, GraphiT, ModelConfig, build_batch, build_input_features
from .data import DatasetBundle, SplitPlan, load_tu, load_zinc, make_splits, one_hot
from .train import RunRecord, TrainSettings, prepare_dataset, train_one

__version__ = "0.1.0"
