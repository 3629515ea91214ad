#!/usr/bin/env python3
"""
The Wahkon architecture: univariate kernel link functions composed in layers.

Each unit sums learned univariate links of the previous layer's coordinates,

    x^(l)_j = sum_k phi^(l)_jk( x^(l-1)_k ),

and every link is a kernel expansion phi(t) = sum_m c_m K(center_m, t).
Two parameterizations share one code path:

* ``LinkBank`` anchors all links of a layer on a fixed inducing grid
  (the trained estimator);
* ``RepresenterBank`` anchors the links on per-coordinate training outputs
  (exact representer form, used for verification on small samples).

Both expose ``n_layers``, ``centers(index)`` of shape (M, D_in) and
``coeffs[index]`` of shape (M, D_out, D_in).
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DomainError, NotFitted
from .kernel import KernelConfig, cross, gram

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 9
DEFAULT_TAU_INIT = 0.1
DEFAULT_GRID_EXPAND = 0.1
INPUT_RANGE = (-1.0, 1.0)


@dataclass(frozen=True)
class Architecture:
    """Layer widths (D0, D1, ..., DL)."""

    widths: tuple

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2:
            raise DomainError(f"an architecture needs at least one layer, got widths {widths}")
        if any(w < 1 for w in widths):
            raise DomainError(f"every layer width must be >= 1, got {widths}")
        object.__setattr__(self, "widths", widths)

    @property
    def depth(self):
        return len(self.widths) - 1

    @property
    def input_dim(self):
        return self.widths[0]

    @property
    def link_count(self):
        return sum(a * b for a, b in zip(self.widths[:-1], self.widths[1:]))

    def require_scalar_output(self):
        if self.widths[-1] != 1:
            raise DomainError(f"scalar regression needs D_L = 1, got widths {self.widths}")
        return self

    def __str__(self):
        return "[" + " -> ".join(str(w) for w in self.widths) + "]"


@dataclass
class LinkBank:
    """Grid-parameterized links for consecutive layers starting at layer 1."""

    grids: list
    coeffs: list

    def __post_init__(self):
        if len(self.grids) != len(self.coeffs):
            raise DimensionMismatch("one grid is required per coefficient tensor")
        for grid, coeff in zip(self.grids, self.coeffs):
            if coeff.ndim != 3 or coeff.shape[0] != len(grid):
                raise DimensionMismatch(
                    f"coefficient tensor {coeff.shape} does not match grid of size {len(grid)}")
            if len(grid) > 1 and np.any(np.diff(grid) <= 0):
                raise DomainError("inducing grid points must be strictly increasing")

    @property
    def n_layers(self):
        return len(self.coeffs)

    def centers(self, index):
        grid = self.grids[index]
        return np.repeat(grid[:, None], self.coeffs[index].shape[2], axis=1)

    def with_coeffs(self, coeffs):
        return LinkBank([g for g in self.grids], [np.asarray(c, dtype=float) for c in coeffs])

    def copy(self):
        return LinkBank([g.copy() for g in self.grids], [c.copy() for c in self.coeffs])

    def head(self, count):
        return LinkBank(self.grids[:count], self.coeffs[:count])

    def tail(self, start):
        return LinkBank(self.grids[start:], self.coeffs[start:])


@dataclass
class RepresenterBank:
    """Links anchored on per-coordinate centers (exact representer form)."""

    centers_list: list
    coeffs: list

    def __post_init__(self):
        if len(self.centers_list) != len(self.coeffs):
            raise DimensionMismatch("one center matrix is required per coefficient tensor")
        for centers, coeff in zip(self.centers_list, self.coeffs):
            if coeff.ndim != 3 or centers.shape[0] != coeff.shape[0] or centers.shape[1] != coeff.shape[2]:
                raise DimensionMismatch(
                    f"coefficient tensor {coeff.shape} does not match centers {centers.shape}")

    @property
    def n_layers(self):
        return len(self.coeffs)

    def centers(self, index):
        return self.centers_list[index]

    def with_coeffs(self, coeffs):
        return RepresenterBank(list(self.centers_list), [np.asarray(c, dtype=float) for c in coeffs])

    def copy(self):
        return RepresenterBank([c.copy() for c in self.centers_list], [c.copy() for c in self.coeffs])


@dataclass
class LayerOutputs:
    """Per-layer output matrices, layer 0 being the raw inputs."""

    layers: list

    def __getitem__(self, index):
        return self.layers[index]

    def __len__(self):
        return len(self.layers)

    @property
    def final(self):
        return self.layers[-1]


@dataclass
class WahkonModel:
    """
    Fitted (or initialized) Wahkon regressor.

    ``links`` hold layers 1..L-1 on inducing grids. The last layer is kept in
    representer form: the layer-(L-1) training outputs ``last_inputs`` and
    the shared ridge coefficient vector ``alpha``.
    """

    architecture: Architecture
    kernel: KernelConfig
    links: LinkBank
    lambda_lower: float
    lambda_last: float
    seed: int = 0
    last_inputs: np.ndarray = None
    alpha: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    @property
    def is_fitted(self):
        return self.last_inputs is not None and self.alpha is not None


def link_eval_grid(kernel, grid, a, t):
    """Evaluate sum_g a_g K(u_g, t) at scalar t."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if grid.shape != a.shape:
        raise DimensionMismatch(f"grid has {grid.shape[0]} points, coefficients {a.shape[0]}")
    return float(cross(kernel, [t], grid)[0] @ a)


def link_eval_representer(kernel, centers, c, t):
    """Evaluate sum_i c_i K(center_i, t) at scalar t."""
    return link_eval_grid(kernel, centers, c, t)


def layer_basis(kernel, inputs, centers):
    """
    Kernel features of one layer.

    Returns ``(basis, diff)`` of shape (n, D_in, M): basis[i, k, m] is
    K(centers[m, k], inputs[i, k]) and diff[i, k, m] is inputs[i, k] - centers[m, k].
    """
    diff = inputs[:, :, None] - centers.T[None, :, :]
    return np.exp(-0.5 * (diff / kernel.lengthscale) ** 2), diff


def layer_apply(kernel, inputs, centers, coeffs):
    basis, _ = layer_basis(kernel, inputs, centers)
    return np.einsum("nkm,mjk->nj", basis, coeffs)


def forward(source, X, kernel=None, include_last=False):
    """
    Propagate inputs through the network.

    ``source`` is a LinkBank / RepresenterBank (with ``kernel``) or a
    WahkonModel. For a model, ``include_last=True`` appends the prediction
    layer from the stored last-layer state.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]

    model = source if isinstance(source, WahkonModel) else None
    if model is not None:
        kernel = model.kernel
        bank = model.links
        input_dim = model.architecture.input_dim
    else:
        if kernel is None:
            raise DomainError("a kernel configuration is required to evaluate a link bank")
        bank = source
        input_dim = bank.coeffs[0].shape[2] if bank.n_layers else X.shape[1]

    if X.shape[1] != input_dim:
        raise DimensionMismatch(f"inputs have {X.shape[1]} columns, network expects {input_dim}")

    layers = [X]
    current = X
    for index in range(bank.n_layers):
        current = layer_apply(kernel, current, bank.centers(index), bank.coeffs[index])
        layers.append(current)

    if include_last:
        if model is None or not model.is_fitted:
            raise NotFitted("the last layer requires a fitted model")
        prediction = last_layer_predict(kernel, model.last_inputs, model.alpha, current)
        layers.append(prediction[:, None])

    return LayerOutputs(layers)


def last_layer_predict(kernel, train_inputs, alpha, test_inputs):
    """
    Shared-coefficient last layer: sum_k sum_m alpha_m K(z_mk, t_ik).
    """
    train_inputs = np.asarray(train_inputs, dtype=float)
    test_inputs = np.asarray(test_inputs, dtype=float)
    if train_inputs.shape[1] != test_inputs.shape[1]:
        raise DimensionMismatch(
            f"test layer has {test_inputs.shape[1]} units, stored layer has {train_inputs.shape[1]}")
    if train_inputs.shape[0] != len(alpha):
        raise DimensionMismatch("stored layer outputs and ridge coefficients disagree in length")
    prediction = np.zeros(test_inputs.shape[0])
    for k in range(train_inputs.shape[1]):
        prediction += cross(kernel, test_inputs[:, k], train_inputs[:, k]) @ alpha
    return prediction


def rkhs_norm_sq_grid(K_UU, a):
    """Grid approximation a' K_UU a of a link's squared RKHS norm."""
    K_UU = np.asarray(K_UU, dtype=float)
    a = np.asarray(a, dtype=float)
    if K_UU.shape != (a.shape[0], a.shape[0]):
        raise DimensionMismatch(f"Gram matrix {K_UU.shape} does not match coefficients {a.shape}")
    return max(float(a @ K_UU @ a), 0.0)


def rkhs_norm_sq_representer(Q, c):
    """Exact squared RKHS norm c' Q c of a representer expansion."""
    return rkhs_norm_sq_grid(Q, c)


def layer_grams(kernel, bank, index):
    """Per-coordinate Gram matrices of one layer's centers, shape (D_in, M, M)."""
    centers = bank.centers(index)
    return np.stack([gram(kernel, centers[:, k]) for k in range(centers.shape[1])])


def layer_norms_sq(kernel, bank, index):
    """Matrix of squared link norms, entry (j, k) for link k -> j."""
    grams = layer_grams(kernel, bank, index)
    coeffs = bank.coeffs[index]
    return np.einsum("kmp,mjk,pjk->jk", grams, coeffs, coeffs)


def _grid_for(values, grid_size, expand, min_half_width):
    lo, hi = float(np.min(values)), float(np.max(values))
    center = 0.5 * (lo + hi)
    half = max(0.5 * (hi - lo), min_half_width) * (1.0 + expand)
    return np.linspace(center - half, center + half, grid_size)


def init_links(rng, architecture, kernel, X_train, grid_size=DEFAULT_GRID_SIZE,
               tau_init=DEFAULT_TAU_INIT, grid_expand=DEFAULT_GRID_EXPAND,
               include_last=False):
    """
    Draw initial link coefficients and freeze the per-layer inducing grids.

    Layer 1 spans the benchmark input range [-1, 1] (widened to cover the
    training inputs); each hidden layer spans its outputs after one forward
    pass. Spans are widened by ``grid_expand`` and never narrower than one
    kernel lengthscale on each side. Coefficients are i.i.d.
    N(0, tau_init / (G * D_{l-1})).

    Parameters:
    -----------
    rng : numpy.random.Generator
        Stream consumed layer by layer in a fixed order
    architecture : Architecture
        Layer widths
    kernel : KernelConfig
        Kernel of the links
    X_train : array_like
        Training inputs (n x D0) used to place the grids
    include_last : bool
        Also initialize the last layer on a grid (direct objective)

    Returns:
    --------
    LinkBank
        Layers 1..L-1, or 1..L with ``include_last``
    """
    if grid_size < 2:
        raise DomainError(f"the inducing grid needs at least 2 points, got {grid_size}")
    if tau_init < 0:
        raise DomainError(f"tau_init must be nonnegative, got {tau_init}")

    X_train = np.asarray(X_train, dtype=float)
    widths = architecture.widths
    if X_train.shape[1] != widths[0]:
        raise DimensionMismatch(f"inputs have {X_train.shape[1]} columns, network expects {widths[0]}")

    n_layers = architecture.depth if include_last else architecture.depth - 1
    grids, coeffs = [], []
    current = X_train
    for index in range(n_layers):
        d_in, d_out = widths[index], widths[index + 1]
        if index == 0:
            span_values = np.concatenate([current.ravel(), INPUT_RANGE])
        else:
            span_values = current.ravel()
        grid = _grid_for(span_values, grid_size, grid_expand, kernel.lengthscale)

        scale = np.sqrt(tau_init / (grid_size * d_in))
        coeff = scale * rng.standard_normal((grid_size, d_out, d_in))

        grids.append(grid)
        coeffs.append(coeff)
        current = layer_apply(kernel, current, np.repeat(grid[:, None], d_in, axis=1), coeff)
        logger.debug("Layer %d grid [%.3f, %.3f], coefficient sd %.4f",
                     index + 1, grid[0], grid[-1], scale)

    return LinkBank(grids, coeffs)
