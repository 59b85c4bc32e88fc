"""Positive-definite kernels on graphs and Laplacian eigenvector coordinates.

Every kernel here is a function of the normalized Laplacian spectrum:

    diffusion        exp(-beta * L)            dense, PSD, nonnegative
    p-step walk      (I - gamma * L)^p         support limited to distance p
    adjacency        D^{-1/2} A D^{-1/2}       symmetric but NOT PSD
    all-ones         ones matrix               neutral element for modulated
                                               attention (reduces it to softmax)

The p-step walk with p=1, gamma=1 coincides with the normalized adjacency on
graphs without isolated nodes. Defaults follow the experiment protocol:
gamma fixed to 0.5 for 2- and 3-step walks, beta fixed to 1.0.

A kernel matrix can additionally have its diagonal zeroed (`zero_diagonal`),
which removes self-attention weight at the price of the PSD guarantee.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .graphs import Graph, adjacency, inv_sqrt_degrees, normalized_laplacian
from .spectral import matrix_function, matrix_power, symmetric_eig

FAMILIES = ("diffusion", "p_step_rw", "adjacency", "all_ones")


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel family to build, with its parameters.

    beta applies to diffusion, p/gamma to the p-step walk; unused parameters
    stay None. `zero_diagonal` marks the diagonal-zeroing variant.
    """

    family: str
    beta: float | None = None
    p: int | None = None
    gamma: float | None = None
    zero_diagonal: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "diffusion":
            if self.beta is None or self.beta <= 0:
                raise ValueError("diffusion kernel needs beta > 0")
        elif self.family == "p_step_rw":
            if self.p is None or self.p < 1:
                raise ValueError("p-step walk kernel needs p >= 1")
            if self.gamma is None or not (0 < self.gamma <= 1):
                raise ValueError("p-step walk kernel needs 0 < gamma <= 1")

    @staticmethod
    def diffusion(beta: float = 1.0, zero_diagonal: bool = False) -> "KernelSpec":
        return KernelSpec("diffusion", beta=beta, zero_diagonal=zero_diagonal)

    @staticmethod
    def p_step(p: int, gamma: float = 0.5, zero_diagonal: bool = False) -> "KernelSpec":
        return KernelSpec("p_step_rw", p=p, gamma=gamma, zero_diagonal=zero_diagonal)

    @staticmethod
    def adjacency(zero_diagonal: bool = False) -> "KernelSpec":
        return KernelSpec("adjacency", zero_diagonal=zero_diagonal)

    @staticmethod
    def all_ones() -> "KernelSpec":
        return KernelSpec("all_ones")

    def label(self) -> str:
        if self.family == "diffusion":
            body = f"diffusion beta={self.beta:g}"
        elif self.family == "p_step_rw":
            body = f"p_step_rw p={self.p} gamma={self.gamma:g}"
        else:
            body = self.family
        return body + (" zero_diagonal" if self.zero_diagonal else "")


@dataclass(frozen=True)
class KernelMatrix:
    """An n x n kernel Gram matrix together with how it was built."""

    spec: KernelSpec
    values: np.ndarray


def diffusion_kernel(g: Graph, beta: float = 1.0) -> KernelMatrix:
    """Heat kernel exp(-beta * L) of the normalized Laplacian."""
    spec = KernelSpec.diffusion(beta)
    lap = normalized_laplacian(g)
    values = matrix_function(lap, lambda lam: np.exp(-beta * lam))
    return KernelMatrix(spec, values)


def p_step_rw_kernel(g: Graph, p: int, gamma: float = 0.5) -> KernelMatrix:
    """(I - gamma * L)^p; entry (i, j) vanishes beyond graph distance p."""
    spec = KernelSpec.p_step(p, gamma)
    lap = normalized_laplacian(g)
    base = np.eye(g.n) - gamma * lap
    values = matrix_power(base, p)
    return KernelMatrix(spec, 0.5 * (values + values.T))


def adjacency_pe(g: Graph) -> KernelMatrix:
    """Normalized adjacency D^{-1/2} A D^{-1/2} (symmetric, not PSD).

    Computed directly rather than as I - L so isolated nodes get an all-zero
    row/column instead of a unit diagonal.
    """
    dis = inv_sqrt_degrees(g)
    values = dis[:, None] * adjacency(g) * dis[None, :]
    return KernelMatrix(KernelSpec.adjacency(), values)


def all_ones_kernel(g: Graph) -> KernelMatrix:
    """Constant kernel; modulated attention degenerates to plain softmax."""
    return KernelMatrix(KernelSpec.all_ones(), np.ones((g.n, g.n)))


def apply_zero_diagonal(k: KernelMatrix) -> KernelMatrix:
    """Copy with the diagonal forced to zero (drops the PSD guarantee)."""
    values = k.values.copy()
    np.fill_diagonal(values, 0.0)
    return KernelMatrix(replace(k.spec, zero_diagonal=True), values)


def build_kernel(g: Graph, spec: KernelSpec) -> KernelMatrix:
    """Dispatch on the spec, including the zero-diagonal variant."""
    if spec.family == "diffusion":
        k = diffusion_kernel(g, spec.beta)
    elif spec.family == "p_step_rw":
        k = p_step_rw_kernel(g, spec.p, spec.gamma)
    elif spec.family == "adjacency":
        k = adjacency_pe(g)
    else:
        k = all_ones_kernel(g)
    if spec.zero_diagonal:
        k = apply_zero_diagonal(k)
    return k


def laplacian_pe(g: Graph, k: int) -> np.ndarray:
    """First k non-trivial Laplacian eigenvector coordinates per node.

    Eigenvectors of the normalized Laplacian sorted by ascending eigenvalue;
    the first (smoothest) one is skipped. Columns beyond the available n-1
    non-trivial eigenvectors are zero-padded. Only the single globally
    smallest eigenvalue is skipped, which is fragile for disconnected graphs
    (they have several constant-per-component eigenvectors at 0).

    Signs follow the eigensolver convention and are deterministic; consumers
    that want sign-invariance must randomize them explicitly.
    """
    if k < 1:
        raise ValueError("embedding dimension must be >= 1")
    eig = symmetric_eig(normalized_laplacian(g))
    out = np.zeros((g.n, k))
    avail = min(k, g.n - 1)
    if avail > 0:
        out[:, :avail] = eig.eigenvectors[:, 1:1 + avail]
    return out


def write_kernel_dump(k: KernelMatrix, fp: io.TextIOBase) -> None:
    """Plain-text matrix dump: one header line, then n rows of values.

    Header fields are space-separated `key=value` pairs: n, family, the
    family's parameters, and zero_diagonal as 0/1.
    """
    spec = k.spec
    fields = [f"n={k.values.shape[0]}", f"family={spec.family}"]
    if spec.beta is not None:
        fields.append(f"beta={spec.beta:.17g}")
    if spec.p is not None:
        fields.append(f"p={spec.p}")
    if spec.gamma is not None:
        fields.append(f"gamma={spec.gamma:.17g}")
    fields.append(f"zero_diagonal={1 if spec.zero_diagonal else 0}")
    fp.write(" ".join(fields) + "\n")
    for row in k.values:
        fp.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def read_kernel_dump(fp: io.TextIOBase) -> KernelMatrix:
    """Inverse of write_kernel_dump."""
    header = fp.readline().split()
    kv = dict(item.split("=", 1) for item in header)
    n = int(kv["n"])
    spec = KernelSpec(
        family=kv["family"],
        beta=float(kv["beta"]) if "beta" in kv else None,
        p=int(kv["p"]) if "p" in kv else None,
        gamma=float(kv["gamma"]) if "gamma" in kv else None,
        zero_diagonal=kv.get("zero_diagonal", "0") == "1",
    )
    rows = [[float(x) for x in fp.readline().split()] for _ in range(n)]
    values = np.array(rows, dtype=float)
    if values.shape != (n, n):
        raise ValueError(f"dump promised {n}x{n} values, got {values.shape}")
    return KernelMatrix(spec, values)
