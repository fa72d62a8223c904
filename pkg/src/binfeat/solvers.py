"""Linear-model solvers over feature matrices.

Two training paths:

* cg_ridge: conjugate gradient on the normal equations (Z'Z + lam*I)w = Z'y,
  never forming Z'Z; each iteration costs two sparse matvecs.
* rcd_train / parallel_rcd_train: randomized coordinate descent on
  (1/N) sum_i L(w'z_i, y_i) + lam*||w||_1 with exact prox steps against the
  per-column majorizer M_j = beta * (1/N) * sum_i z_ij^2.

The parallel path is asynchronous: worker threads share w and the response
vector, read them without locks, and apply their deltas with per-element
atomic float adds. Because both w_j and every touched response receive the
same delta additively, the invariant y_hat = Z w survives interleaving.
"""

import enum
import time
import threading
from dataclasses import dataclass, field

import numpy as np
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic

from .sparse import ColumnView, SparseMatrix, column_view, matvec, matvec_transpose


# ---------------------------------------------------------------------------
# losses

class LossKind(enum.Enum):
    SQUARE = "square"
    LOGISTIC = "logistic"
    SQUARED_HINGE = "squared_hinge"


_BETA = {LossKind.SQUARE: 1.0, LossKind.LOGISTIC: 0.25, LossKind.SQUARED_HINGE: 1.0}
_CODE = {LossKind.SQUARE: 0, LossKind.LOGISTIC: 1, LossKind.SQUARED_HINGE: 2}


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    beta: float

    def __post_init__(self):
        if self.beta != _BETA[self.kind]:
            raise ValueError(f"beta for {self.kind.value} must be {_BETA[self.kind]}")


def loss_spec(kind) -> LossSpec:
    kind = LossKind(kind) if not isinstance(kind, LossKind) else kind
    return LossSpec(kind, _BETA[kind])


def loss_value(spec: LossSpec, z, y):
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if spec.kind is LossKind.SQUARE:
        return 0.5 * (z - y) ** 2
    if spec.kind is LossKind.LOGISTIC:
        return np.logaddexp(0.0, -y * z)
    m = np.maximum(1.0 - y * z, 0.0)
    return 0.5 * m * m


def loss_deriv(spec: LossSpec, z, y):
    """Derivative in the first argument."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if spec.kind is LossKind.SQUARE:
        return z - y
    if spec.kind is LossKind.LOGISTIC:
        # -y * sigmoid(-y z), written to avoid overflow for large |y z|
        return -y * 0.5 * (1.0 + np.tanh(-0.5 * y * z))
    return -y * np.maximum(1.0 - y * z, 0.0)


@njit(inline="always")
def _dloss(code, z, y):
    if code == 0:
        return z - y
    elif code == 1:
        return -y * 0.5 * (1.0 + np.tanh(-0.5 * y * z))
    else:
        m = 1.0 - y * z
        if m > 0.0:
            return -y * m
        return 0.0


@njit(cache=True)
def _loss_sum(code, z, y):
    acc = 0.0
    for i in range(z.shape[0]):
        if code == 0:
            d = z[i] - y[i]
            acc += 0.5 * d * d
        elif code == 1:
            acc += np.logaddexp(0.0, -y[i] * z[i])
        else:
            m = 1.0 - y[i] * z[i]
            if m > 0.0:
                acc += 0.5 * m * m
    return acc


# ---------------------------------------------------------------------------
# models

class Regularizer(enum.Enum):
    L2 = "l2"
    L1 = "l1"


@dataclass
class Model:
    weights: np.ndarray
    lam: float
    loss: LossSpec
    regularizer: Regularizer

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "lambda": self.lam,
            "loss": self.loss.kind.value,
            "regularizer": self.regularizer.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Model":
        return cls(
            np.asarray(obj["weights"], dtype=np.float64),
            float(obj["lambda"]),
            loss_spec(obj["loss"]),
            Regularizer(obj["regularizer"]),
        )


@dataclass
class MulticlassModel:
    """One-vs-rest stack: weight row c scores class c."""

    weights: np.ndarray  # (C, D)
    lam: float
    loss: LossSpec
    regularizer: Regularizer
    classes: np.ndarray  # original label values, length C

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "lambda": self.lam,
            "loss": self.loss.kind.value,
            "regularizer": self.regularizer.value,
            "classes": self.classes.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MulticlassModel":
        return cls(
            np.asarray(obj["weights"], dtype=np.float64),
            float(obj["lambda"]),
            loss_spec(obj["loss"]),
            Regularizer(obj["regularizer"]),
            np.asarray(obj["classes"]),
        )


# ---------------------------------------------------------------------------
# conjugate gradient ridge

@dataclass
class CgResult:
    model: Model
    converged: bool
    n_iter: int
    residual: float  # relative residual at exit


def cg_ridge(z: SparseMatrix, y, lam: float, tol: float = 1e-3, max_iter: int = 1000) -> CgResult:
    """Solve (Z'Z + lam*I) w = Z'y without forming Z'Z.

    Stops when the relative residual ||b - Aw|| / ||b|| drops to tol; if
    max_iter runs out first the best iterate is returned with
    converged=False.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (z.n_rows,):
        raise ValueError(f"y must have length {z.n_rows}")
    b = matvec_transpose(z, y)
    b_norm = np.linalg.norm(b)
    w = np.zeros(z.n_cols)
    spec = loss_spec(LossKind.SQUARE)
    if b_norm == 0.0:
        return CgResult(Model(w, lam, spec, Regularizer.L2), True, 0, 0.0)
    r = b.copy()
    p = r.copy()
    rs = np.dot(r, r)
    k = 0
    for k in range(1, max_iter + 1):
        ap = matvec_transpose(z, matvec(z, p)) + lam * p
        alpha = rs / np.dot(p, ap)
        w += alpha * p
        r -= alpha * ap
        rs_new = np.dot(r, r)
        if np.sqrt(rs_new) <= tol * b_norm:
            return CgResult(Model(w, lam, spec, Regularizer.L2), True, k, float(np.sqrt(rs_new) / b_norm))
        p = r + (rs_new / rs) * p
        rs = rs_new
    return CgResult(Model(w, lam, spec, Regularizer.L2), False, k, float(np.sqrt(rs) / b_norm))


# ---------------------------------------------------------------------------
# coordinate descent

def prox(v: float, t: float) -> float:
    """Soft threshold: pull v toward zero by t, clamping at zero."""
    if t <= 0:
        raise ValueError("threshold must be positive")
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0


@dataclass
class CdState:
    """Mutable descent state: weights, maintained responses and column bounds.

    y_hat is kept equal to Z w incrementally; m[j] is the majorizer constant
    beta * (1/N) * sum_i z_ij^2 (zero for empty columns, which are skipped).
    Targets ride along so steps are self-contained.
    """

    w: np.ndarray
    y_hat: np.ndarray
    m: np.ndarray
    y: np.ndarray


def make_cd_state(z: SparseMatrix, y, loss: LossSpec, cols: ColumnView = None) -> CdState:
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (z.n_rows,):
        raise ValueError(f"y must have length {z.n_rows}")
    if cols is None:
        cols = column_view(z)
    m = np.zeros(z.n_cols)
    counts = np.diff(cols.col_ptr)
    sq = np.zeros(z.n_cols)
    np.add.at(sq, np.repeat(np.arange(z.n_cols), counts), cols.values**2)
    m[:] = loss.beta * sq / z.n_rows
    return CdState(np.zeros(z.n_cols), np.zeros(z.n_rows), m, y)


def cd_step(state: CdState, j: int, lam: float, cols: ColumnView, loss: LossSpec) -> CdState:
    """One exact prox step on coordinate j; updates state in place.

    Cost is proportional to the number of entries in column j. Empty
    columns are a no-op.
    """
    mj = state.m[j]
    if mj <= 0.0:
        return state
    rows, vals = cols.column(j)
    n = state.y_hat.shape[0]
    g = np.dot(loss_deriv(loss, state.y_hat[rows], state.y[rows]), vals) / n
    wj = state.w[j]
    wn = prox(wj - g / mj, lam / mj) if lam > 0 else wj - g / mj
    d = wn - wj
    if d != 0.0:
        state.w[j] = wn
        state.y_hat[rows] += d * vals
    return state


def objective(state: CdState, lam: float, loss: LossSpec) -> float:
    n = state.y_hat.shape[0]
    return float(np.sum(loss_value(loss, state.y_hat, state.y)) / n + lam * np.abs(state.w).sum())


@njit(cache=True)
def _cd_run(col_ptr, row_idx, vals, y, draws, w, y_hat, m, lam, loss_code):
    n = y_hat.shape[0]
    for t in range(draws.shape[0]):
        j = draws[t]
        mj = m[j]
        if mj <= 0.0:
            continue
        lo = col_ptr[j]
        hi = col_ptr[j + 1]
        g = 0.0
        for p in range(lo, hi):
            i = row_idx[p]
            g += _dloss(loss_code, y_hat[i], y[i]) * vals[p]
        g /= n
        wj = w[j]
        v = wj - g / mj
        thr = lam / mj
        if v > thr:
            wn = v - thr
        elif v < -thr:
            wn = v + thr
        else:
            wn = 0.0
        d = wn - wj
        if d != 0.0:
            # additive form, same arithmetic as the atomic path so a
            # one-thread parallel run replays this trajectory bit-exactly
            w[j] = wj + d
            for p in range(lo, hi):
                y_hat[row_idx[p]] += d * vals[p]


@dataclass
class RcdResult:
    model: Model
    objective: float
    trace: list = field(default_factory=list)  # (epoch, objective, seconds)


def rcd_train(z: SparseMatrix, y, lam: float, loss: LossSpec, epochs: int, rng) -> RcdResult:
    """Sequential randomized coordinate descent: epochs * D uniform draws."""
    if epochs < 1:
        raise ValueError("epochs must be at least 1")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    cols = column_view(z)
    state = make_cd_state(z, y, loss, cols)
    rng = np.random.default_rng(rng)
    code = _CODE[loss.kind]
    draws = rng.integers(0, z.n_cols, size=epochs * z.n_cols, dtype=np.int64)
    trace = []
    t0 = time.perf_counter()
    for e in range(epochs):
        chunk = draws[e * z.n_cols : (e + 1) * z.n_cols]
        _cd_run(cols.col_ptr, cols.row_idx, cols.values, state.y, chunk,
                state.w, state.y_hat, state.m, lam, code)
        trace.append((e + 1, objective(state, lam, loss), time.perf_counter() - t0))
    model = Model(state.w, lam, loss, Regularizer.L1)
    return RcdResult(model, trace[-1][1], trace)


# ---------------------------------------------------------------------------
# asynchronous parallel coordinate descent

@intrinsic
def _atomic_add(typingctx, arr_ty, idx_ty, val_ty):
    """Atomic w[i] += v on a float64 array, monotonic ordering."""
    sig = types.float64(arr_ty, types.intp, types.float64)

    def codegen(context, builder, signature, args):
        arr, idx, val = args
        ary = context.make_array(signature.args[0])(context, builder, arr)
        ptr = cgutils.get_item_pointer(context, builder, signature.args[0], ary, [idx])
        return builder.atomic_rmw("fadd", ptr, val, "monotonic")

    return sig, codegen


@njit(nogil=True)
def _cd_run_atomic(col_ptr, row_idx, vals, y, draws, w, y_hat, m, lam, loss_code):
    n = y_hat.shape[0]
    for t in range(draws.shape[0]):
        j = draws[t]
        mj = m[j]
        if mj <= 0.0:
            continue
        lo = col_ptr[j]
        hi = col_ptr[j + 1]
        g = 0.0
        for p in range(lo, hi):
            i = row_idx[p]
            g += _dloss(loss_code, y_hat[i], y[i]) * vals[p]
        g /= n
        wj = w[j]
        v = wj - g / mj
        thr = lam / mj
        if v > thr:
            wn = v - thr
        elif v < -thr:
            wn = v + thr
        else:
            wn = 0.0
        d = wn - wj
        if d != 0.0:
            _atomic_add(w, j, d)
            for p in range(lo, hi):
                _atomic_add(y_hat, row_idx[p], d * vals[p])


@dataclass
class ParallelResult:
    model: Model
    objective: float
    wall_seconds: float
    total_updates: int
    tau: int


def parallel_rcd_train(z: SparseMatrix, y, lam: float, loss: LossSpec, epochs: int,
                       tau: int, rng) -> ParallelResult:
    """Asynchronous RCD with tau threads sharing w and the responses.

    The full draw sequence comes from one root generator and is split into
    tau contiguous chunks, so tau=1 replays the sequential trajectory
    exactly. Races only reorder atomic additions, which keeps y_hat equal
    to Z w up to the float reordering the tolerance absorbs.
    """
    if tau < 1:
        raise ValueError("tau must be at least 1")
    if epochs < 1:
        raise ValueError("epochs must be at least 1")
    cols = column_view(z)
    state = make_cd_state(z, y, loss, cols)
    rng = np.random.default_rng(rng)
    code = _CODE[loss.kind]
    total = epochs * z.n_cols
    draws = rng.integers(0, z.n_cols, size=total, dtype=np.int64)
    chunks = np.array_split(draws, tau)
    args = lambda c: (cols.col_ptr, cols.row_idx, cols.values, state.y, c,
                      state.w, state.y_hat, state.m, lam, code)
    # compile before timing
    _cd_run_atomic(*args(draws[:0]))
    t0 = time.perf_counter()
    if tau == 1:
        _cd_run_atomic(*args(draws))
    else:
        threads = [threading.Thread(target=_cd_run_atomic, args=args(c)) for c in chunks]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    wall = time.perf_counter() - t0
    model = Model(state.w, lam, loss, Regularizer.L1)
    return ParallelResult(model, objective(state, lam, loss), wall, total, tau)


# ---------------------------------------------------------------------------
# speedup model and prediction

def predicted_speedup(r: int, d: int, tau: int) -> float:
    """Expected parallel throughput gain for tau workers on R-per-row
    features with D columns: tau / (1 + (R-1)(tau-1)/(D-1))."""
    if d < 2:
        raise ValueError("need at least two columns")
    if not 1 <= r <= d:
        raise ValueError("need 1 <= R <= D")
    if tau < 1:
        raise ValueError("tau must be at least 1")
    return tau / (1.0 + (r - 1) * (tau - 1) / (d - 1))


def _feature_matrix(transform, x):
    # late import keeps this module importable without the transform types
    from .binning import RbTransform, transform as rb_transform

    if isinstance(transform, RbTransform):
        return rb_transform(transform, x)
    return transform.feature_matrix(x)


def decision_scores(model, transform, x) -> np.ndarray:
    """Raw scores z(x).w, one per row (binary/regression) or per class column."""
    feats = _feature_matrix(transform, x)
    n_cols = feats.n_cols if isinstance(feats, SparseMatrix) else feats.shape[1]
    w = model.weights
    if w.ndim == 1:
        if w.shape[0] != n_cols:
            raise ValueError(f"model has {w.shape[0]} weights, features have {n_cols}")
        return matvec(feats, w) if isinstance(feats, SparseMatrix) else feats @ w
    if w.shape[1] != n_cols:
        raise ValueError(f"model has {w.shape[1]} weights, features have {n_cols}")
    if isinstance(feats, SparseMatrix):
        return np.column_stack([matvec(feats, w[c]) for c in range(w.shape[0])])
    return feats @ w.T


def predict(model, transform, x, task: str = None) -> np.ndarray:
    """Predictions for rows of x.

    Regression returns raw scores. Binary classification returns +-1 with
    0 falling to -1; multiclass returns the argmax class (ties to the
    lowest index).
    """
    scores = decision_scores(model, transform, x)
    if isinstance(model, MulticlassModel):
        return model.classes[np.argmax(scores, axis=1)]
    if task is None:
        task = "regression" if model.loss.kind is LossKind.SQUARE else "binary"
    if task == "regression":
        return scores
    return np.where(scores > 0, 1.0, -1.0)
