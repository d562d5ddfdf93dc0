"""Bulk lattice Hamiltonians: validated parameter sets, gradings, and momentum-space matrices.

A model is the data (V, A_1..A_R, B_1..B_R) of on-site, right-hopping and
left-hopping matrices acting on a d_V-dimensional unit cell.  The
momentum-space matrix at exponentiated momentum lambda is

    H(lambda) = V + sum_r (lambda^-r B_r + lambda^r A_r),

Hermitian on the unit circle whenever the model is self-adjoint
(V = V*, B_r = A_r*).  A grading splits the cell space into +/- sectors;
for models anticommuting with it, H(lambda) is block off-diagonal with lower-left
block h_pm and upper-right block h_mp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (
    NotChiral,
    NotSelfAdjoint,
    ParseError,
    RangeZero,
    ShapeMismatch,
    UnbalancedGradingWarning,
    ZeroMomentum,
)

import warnings


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Validated bulk parameters of a finite-range lattice Hamiltonian."""

    dim_v: int
    hop_range: int
    on_site: np.ndarray     # (d, d)
    right_hops: np.ndarray  # (R, d, d), range-r right hop A_r at index r-1
    left_hops: np.ndarray   # (R, d, d), range-r left hop B_r at index r-1
    self_adjoint: bool

    @property
    def norm_scale(self) -> float:
        """Largest operator norm among the coefficient matrices, floored at 1."""
        norms = [np.linalg.norm(self.on_site, 2)]
        norms += [np.linalg.norm(m, 2) for m in self.right_hops]
        norms += [np.linalg.norm(m, 2) for m in self.left_hops]
        return max(1.0, *norms)

    def lipschitz_bound(self) -> float:
        """Upper bound on ||dH(e^{ik})/dk|| from the coefficient norms."""
        return float(
            sum(
                (r + 1) * (np.linalg.norm(self.right_hops[r], 2) + np.linalg.norm(self.left_hops[r], 2))
                for r in range(self.hop_range)
            )
        )


def build_model(dim_v, hop_range, on_site, right_hops, left_hops=None, tol: Tolerances = DEFAULT_TOL) -> ModelParams:
    """Validate shapes and assemble a ModelParams.

    left_hops defaults to the adjoints of right_hops, which makes the model
    self-adjoint.  A singular leading hop A_R is allowed here; only the
    companion-matrix route refuses it later.
    """
    dim_v = int(dim_v)
    hop_range = int(hop_range)
    if dim_v < 1:
        raise ShapeMismatch(f"dim_v must be positive, got {dim_v}")
    if hop_range < 1:
        raise RangeZero(f"hopping range must be >= 1, got {hop_range}")

    on_site = np.asarray(on_site, dtype=complex)
    if on_site.shape != (dim_v, dim_v):
        raise ShapeMismatch(f"on_site has shape {on_site.shape}, expected {(dim_v, dim_v)}")

    right = np.asarray(right_hops, dtype=complex)
    if right.shape != (hop_range, dim_v, dim_v):
        raise ShapeMismatch(
            f"right_hops has shape {right.shape}, expected {(hop_range, dim_v, dim_v)}"
        )
    if left_hops is None:
        left = np.conj(np.transpose(right, (0, 2, 1)))
    else:
        left = np.asarray(left_hops, dtype=complex)
        if left.shape != (hop_range, dim_v, dim_v):
            raise ShapeMismatch(
                f"left_hops has shape {left.shape}, expected {(hop_range, dim_v, dim_v)}"
            )

    scale = max(
        1.0,
        np.linalg.norm(on_site, 2),
        *[np.linalg.norm(m, 2) for m in right],
        *[np.linalg.norm(m, 2) for m in left],
    )
    thresh = tol.structural * scale
    sa = np.linalg.norm(on_site - on_site.conj().T, 2) <= thresh and all(
        np.linalg.norm(left[r] - right[r].conj().T, 2) <= thresh for r in range(hop_range)
    )
    return ModelParams(dim_v, hop_range, _freeze(on_site), _freeze(right), _freeze(left), bool(sa))


@dataclass(frozen=True, eq=False)
class ChiralModel:
    """A self-adjoint model together with a grading it anticommutes with.

    Blocks are stored in the grading-adapted ordering: v_block and a_pm map the
    + sector to the - sector, a_mp maps back.  plus_idx/minus_idx record where
    the sectors sit in the user-supplied basis.
    """

    base: ModelParams
    grading: np.ndarray    # (d,) entries +1/-1
    plus_idx: np.ndarray
    minus_idx: np.ndarray
    dim_plus: int
    dim_minus: int
    v_block: np.ndarray    # (d_-, d_+)
    a_pm: np.ndarray       # (R, d_-, d_+)
    a_mp: np.ndarray       # (R, d_+, d_-)

    @property
    def balanced(self) -> bool:
        return self.dim_plus == self.dim_minus

    @property
    def hop_range(self) -> int:
        return self.base.hop_range

    @property
    def dim_v(self) -> int:
        return self.base.dim_v

    def gamma(self) -> np.ndarray:
        return np.diag(self.grading.astype(complex))


def chiral_split(model: ModelParams, grading, tol: Tolerances = DEFAULT_TOL) -> ChiralModel:
    """Split a self-adjoint model into graded blocks, checking anticommutation."""
    if not model.self_adjoint:
        raise NotSelfAdjoint("chiral splitting requires a self-adjoint model")
    grading = np.asarray(grading, dtype=int)
    if grading.shape != (model.dim_v,) or not np.all(np.abs(grading) == 1):
        raise ShapeMismatch("grading must be a vector of +1/-1 per basis index")

    plus_idx = np.flatnonzero(grading == 1)
    minus_idx = np.flatnonzero(grading == -1)
    if len(plus_idx) == 0 or len(minus_idx) == 0:
        raise NotChiral("grading must contain both +1 and -1 entries")

    thresh = tol.structural * model.norm_scale

    def diag_block_norm(m):
        return max(
            np.linalg.norm(m[np.ix_(plus_idx, plus_idx)]),
            np.linalg.norm(m[np.ix_(minus_idx, minus_idx)]),
        )

    offenders = [diag_block_norm(model.on_site)]
    offenders += [diag_block_norm(a) for a in model.right_hops]
    if max(offenders) > thresh:
        raise NotChiral(
            f"diagonal graded block of size {max(offenders):.3e} exceeds tolerance {thresh:.3e}"
        )

    if len(plus_idx) != len(minus_idx):
        warnings.warn(
            "graded components have unequal dimensions; winding and edge-index "
            "operations will refuse this model",
            UnbalancedGradingWarning,
            stacklevel=2,
        )

    v_block = model.on_site[np.ix_(minus_idx, plus_idx)]
    a_pm = np.stack([a[np.ix_(minus_idx, plus_idx)] for a in model.right_hops])
    a_mp = np.stack([a[np.ix_(plus_idx, minus_idx)] for a in model.right_hops])
    grading = grading.copy()
    grading.flags.writeable = False
    return ChiralModel(
        base=model,
        grading=grading,
        plus_idx=_freeze_int(plus_idx),
        minus_idx=_freeze_int(minus_idx),
        dim_plus=len(plus_idx),
        dim_minus=len(minus_idx),
        v_block=_freeze(v_block),
        a_pm=_freeze(a_pm),
        a_mp=_freeze(a_mp),
    )


def _freeze_int(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def reassemble(cm: ChiralModel) -> ModelParams:
    """Rebuild the full model from graded blocks; inverse of chiral_split."""
    d = cm.dim_v
    on_site = np.zeros((d, d), dtype=complex)
    on_site[np.ix_(cm.minus_idx, cm.plus_idx)] = cm.v_block
    on_site[np.ix_(cm.plus_idx, cm.minus_idx)] = cm.v_block.conj().T
    hops = []
    for r in range(cm.hop_range):
        a = np.zeros((d, d), dtype=complex)
        a[np.ix_(cm.minus_idx, cm.plus_idx)] = cm.a_pm[r]
        a[np.ix_(cm.plus_idx, cm.minus_idx)] = cm.a_mp[r]
        hops.append(a)
    return build_model(d, cm.hop_range, on_site, np.stack(hops))


def detect_grading(model: ModelParams, tol: Tolerances = DEFAULT_TOL):
    """Propose a +1/-1 grading by 2-coloring the nonzero pattern of V and the A_r.

    Returns None if the pattern is not bipartite.  Never applied automatically.
    """
    d = model.dim_v
    thresh = tol.structural * model.norm_scale
    adj = np.zeros((d, d), dtype=bool)
    for m in (model.on_site, *model.right_hops):
        adj |= np.abs(m) > thresh
    adj |= adj.T
    color = np.zeros(d, dtype=int)
    for start in range(d):
        if color[start] != 0:
            continue
        color[start] = 1
        queue = [start]
        while queue:
            i = queue.pop()
            for j in np.flatnonzero(adj[i]):
                if color[j] == 0:
                    color[j] = -color[i]
                    queue.append(j)
                elif color[j] == color[i]:
                    return None
    return color


@dataclass(frozen=True, eq=False)
class BlochSample:
    """Momentum-space matrix at a single nonzero lambda, with graded blocks when known."""

    lam: complex
    matrix: np.ndarray
    h_pm: np.ndarray | None = None
    h_mp: np.ndarray | None = None


def bloch_matrix(model: ModelParams, lam: complex) -> np.ndarray:
    lam = complex(lam)
    if lam == 0:
        raise ZeroMomentum("exponentiated momentum must be nonzero")
    h = model.on_site.astype(complex).copy()
    for r in range(1, model.hop_range + 1):
        h += lam ** (-r) * model.left_hops[r - 1] + lam**r * model.right_hops[r - 1]
    return h


def bloch_curve(model: ModelParams, lams: np.ndarray) -> np.ndarray:
    """Stacked H(lambda) over an array of momenta; shape (K, d, d)."""
    lams = np.asarray(lams, dtype=complex)
    if np.any(lams == 0):
        raise ZeroMomentum("exponentiated momentum must be nonzero")
    out = np.broadcast_to(model.on_site, lams.shape + model.on_site.shape).astype(complex).copy()
    for r in range(1, model.hop_range + 1):
        out += (lams ** (-r))[..., None, None] * model.left_hops[r - 1]
        out += (lams**r)[..., None, None] * model.right_hops[r - 1]
    return out


def h_pm_curve(cm: ChiralModel, lams: np.ndarray) -> np.ndarray:
    """Lower-left graded block of H(lambda) over an array of momenta."""
    lams = np.asarray(lams, dtype=complex)
    if np.any(lams == 0):
        raise ZeroMomentum("exponentiated momentum must be nonzero")
    out = np.broadcast_to(cm.v_block, lams.shape + cm.v_block.shape).astype(complex).copy()
    for r in range(1, cm.hop_range + 1):
        out += (lams ** (-r))[..., None, None] * cm.a_mp[r - 1].conj().T
        out += (lams**r)[..., None, None] * cm.a_pm[r - 1]
    return out


def h_mp_curve(cm: ChiralModel, lams: np.ndarray) -> np.ndarray:
    """Upper-right graded block of H(lambda) over an array of momenta."""
    lams = np.asarray(lams, dtype=complex)
    if np.any(lams == 0):
        raise ZeroMomentum("exponentiated momentum must be nonzero")
    out = np.broadcast_to(cm.v_block.conj().T, lams.shape + cm.v_block.T.shape).astype(complex).copy()
    for r in range(1, cm.hop_range + 1):
        out += (lams ** (-r))[..., None, None] * cm.a_pm[r - 1].conj().T
        out += (lams**r)[..., None, None] * cm.a_mp[r - 1]
    return out


def bloch_at(model, lam: complex) -> BlochSample:
    """Momentum-space sample; accepts a ModelParams or a ChiralModel.

    For a chiral model the matrix is assembled from the graded blocks, so its
    diagonal blocks vanish identically.
    """
    if isinstance(model, ChiralModel):
        cm = model
        lam = complex(lam)
        h_pm = h_pm_curve(cm, np.array([lam]))[0]
        h_mp = h_mp_curve(cm, np.array([lam]))[0]
        d = cm.dim_v
        full = np.zeros((d, d), dtype=complex)
        full[np.ix_(cm.minus_idx, cm.plus_idx)] = h_pm
        full[np.ix_(cm.plus_idx, cm.minus_idx)] = h_mp
        return BlochSample(lam=lam, matrix=full, h_pm=h_pm, h_mp=h_mp)
    return BlochSample(lam=complex(lam), matrix=bloch_matrix(model, lam))


# --- model file format ------------------------------------------------------
#
# JSON document with complex entries serialized as [re, im] pairs:
#   {"dim_v": int, "range": int, "on_site": [[[re,im], ...], ...],
#    "right_hops": [matrix, ...], "left_hops": optional, "grading": optional}


def _matrix_to_pairs(m: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _pairs_to_matrix(obj, what: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: expected nested [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ParseError(f"{what}: expected a matrix of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def model_to_dict(model: ModelParams, grading=None) -> dict:
    doc = {
        "dim_v": model.dim_v,
        "range": model.hop_range,
        "on_site": _matrix_to_pairs(model.on_site),
        "right_hops": [_matrix_to_pairs(m) for m in model.right_hops],
        "left_hops": [_matrix_to_pairs(m) for m in model.left_hops],
    }
    if grading is not None:
        doc["grading"] = [int(g) for g in grading]
    return doc


def model_from_dict(doc: dict, tol: Tolerances = DEFAULT_TOL):
    """Parse a model document; returns (ModelParams, grading-or-None)."""
    if not isinstance(doc, dict):
        raise ParseError("model file must contain a JSON object")
    known = {"dim_v", "range", "on_site", "right_hops", "left_hops", "grading"}
    unknown = set(doc) - known
    if unknown:
        raise ParseError(f"unknown model fields: {sorted(unknown)}")
    for field in ("dim_v", "range", "on_site", "right_hops"):
        if field not in doc:
            raise ParseError(f"missing required model field '{field}'")
    try:
        dim_v = int(doc["dim_v"])
        hop_range = int(doc["range"])
    except (TypeError, ValueError) as exc:
        raise ParseError("dim_v and range must be integers") from exc
    on_site = _pairs_to_matrix(doc["on_site"], "on_site")
    if not isinstance(doc["right_hops"], list) or len(doc["right_hops"]) != hop_range:
        raise ParseError(f"right_hops must list exactly {hop_range} matrices")
    right = np.stack([_pairs_to_matrix(m, f"right_hops[{i}]") for i, m in enumerate(doc["right_hops"])])
    left = None
    if "left_hops" in doc and doc["left_hops"] is not None:
        if not isinstance(doc["left_hops"], list) or len(doc["left_hops"]) != hop_range:
            raise ParseError(f"left_hops must list exactly {hop_range} matrices")
        left = np.stack([_pairs_to_matrix(m, f"left_hops[{i}]") for i, m in enumerate(doc["left_hops"])])
    grading = None
    if "grading" in doc and doc["grading"] is not None:
        grading = np.asarray(doc["grading"], dtype=int)
        if grading.shape != (dim_v,) or not np.all(np.abs(grading) == 1):
            raise ParseError("grading must be a list of +1/-1 of length dim_v")
    try:
        model = build_model(dim_v, hop_range, on_site, right, left, tol=tol)
    except (ShapeMismatch, RangeZero) as exc:
        raise ParseError(str(exc)) from exc
    return model, grading


def load_model(path, tol: Tolerances = DEFAULT_TOL):
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return model_from_dict(doc, tol=tol)


def save_model(path, model: ModelParams, grading=None):
    Path(path).write_text(json.dumps(model_to_dict(model, grading), sort_keys=True, indent=1) + "\n")
