"""Constructive homotopies reducing a gapped graded symbol to a diagonal of monomials.

A balanced graded model is equivalent to its lower-left block symbol, a matrix
Laurent loop invertible on the unit circle.  The pipeline deforms any such
loop, through loops that stay invertible, to diag(lambda, ..., lambda^-1, ...,
1, ...) in four moves:

  1. stabilize by trivial bands and rotate  h (+) 1  to  p (+) lambda^-R 1,
     where p = lambda^R h is polynomial; split each lambda^-R into R copies
     of lambda^-1 by the same rotation trick;
  2. enlarge p by trivial bands and reduce it to a linear pencil
     l(lambda) = lambda C + D by unipotent row/column operations (these leave
     the determinant literally unchanged);
  3. scale by l(1)^-1, check the spectrum of the new coefficient avoids the
     Re = 1/2 line, and homotope it linearly to its spectral projection Q,
     ending at the projection loop lambda Q + (1 - Q);
  4. conjugate by plane rotations to sort the diagonal.

Every stage records an invertibility certificate (sampled min singular value
on its parameter-by-momentum grid) and the winding of its determinant, which
must be one constant along the whole path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .config import (
    CERT_GRID_CAP,
    CERT_GRID_K,
    CERT_GRID_T,
    DEFAULT_TOL,
    Tolerances,
)
from .errors import CertificateFailed, SpectrumOnCriticalLine, UnbalancedGrading
from .models import ChiralModel, build_model, chiral_split
from .winding import winding_of_curve


# --- matrix loops -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixLoop:
    """Laurent loop h(lambda) = sum_j coeffs[j - lowest_power] lambda^j."""

    lowest_power: int
    coeffs: np.ndarray  # (P, m, m)

    @property
    def size(self) -> int:
        return self.coeffs.shape[1]

    @property
    def highest_power(self) -> int:
        return self.lowest_power + self.coeffs.shape[0] - 1

    def eval_many(self, lams) -> np.ndarray:
        lams = np.asarray(lams, dtype=complex)
        powers = np.arange(self.lowest_power, self.highest_power + 1)
        weights = lams[:, None] ** powers[None, :]
        return np.einsum("kp,pij->kij", weights, self.coeffs)

    def __call__(self, lam: complex) -> np.ndarray:
        return self.eval_many(np.array([lam]))[0]

    def det_fn(self):
        return lambda lams: np.linalg.det(self.eval_many(lams))

    def min_singular_on_circle(self, num_k: int = 256) -> float:
        lams = np.exp(2j * np.pi * np.arange(num_k) / num_k)
        sv = np.linalg.svd(self.eval_many(lams), compute_uv=False)
        return float(sv[:, -1].min())

    def trimmed(self, rel_tol: float = 1e-12) -> "MatrixLoop":
        mags = np.array([np.abs(c).max() for c in self.coeffs])
        floor = rel_tol * max(float(mags.max()), 1e-300)
        nz = np.flatnonzero(mags > floor)
        if len(nz) == 0:
            return MatrixLoop(0, np.zeros((1, self.size, self.size), dtype=complex))
        lo, hi = int(nz[0]), int(nz[-1])
        return MatrixLoop(self.lowest_power + lo, self.coeffs[lo : hi + 1].copy())

    @property
    def natural_range(self) -> int:
        t = self.trimmed()
        return max(0, -t.lowest_power, t.highest_power)


def monomial_loop(power: int, size: int = 1) -> MatrixLoop:
    return MatrixLoop(power, np.eye(size, dtype=complex)[None, :, :])


def diagonal_monomials(powers) -> MatrixLoop:
    """diag(lambda^p) for a list of scalar powers."""
    powers = list(powers)
    lo, hi = min(powers), max(powers)
    n = len(powers)
    coeffs = np.zeros((hi - lo + 1, n, n), dtype=complex)
    for i, p in enumerate(powers):
        coeffs[p - lo, i, i] = 1.0
    return MatrixLoop(lo, coeffs)


def block_diag_loops(loops) -> MatrixLoop:
    lo = min(l.lowest_power for l in loops)
    hi = max(l.highest_power for l in loops)
    n = sum(l.size for l in loops)
    coeffs = np.zeros((hi - lo + 1, n, n), dtype=complex)
    offset = 0
    for l in loops:
        s = l.size
        for j, c in enumerate(l.coeffs):
            coeffs[l.lowest_power + j - lo, offset : offset + s, offset : offset + s] = c
        offset += s
    return MatrixLoop(lo, coeffs)


def loop_from_model(cm: ChiralModel) -> MatrixLoop:
    """Lower-left block symbol as a loop with powers -R..R (zero planes kept)."""
    if not cm.balanced:
        raise UnbalancedGrading("loop extraction needs a square lower-left block")
    big_r = cm.hop_range
    q = cm.dim_plus
    coeffs = np.zeros((2 * big_r + 1, q, q), dtype=complex)
    coeffs[big_r] = cm.v_block
    for r in range(1, big_r + 1):
        coeffs[big_r + r] = cm.a_pm[r - 1]
        coeffs[big_r - r] = cm.a_mp[r - 1].conj().T
    return MatrixLoop(-big_r, coeffs)


def model_from_loop(loop: MatrixLoop, tol: Tolerances = DEFAULT_TOL) -> ChiralModel:
    """Balanced graded model whose lower-left block symbol is the given loop."""
    m = loop.size
    big_r = max(1, -loop.lowest_power, loop.highest_power)
    v = np.zeros((m, m), dtype=complex)
    a_pm = np.zeros((big_r, m, m), dtype=complex)
    a_mp = np.zeros((big_r, m, m), dtype=complex)
    for j, c in enumerate(loop.coeffs):
        power = loop.lowest_power + j
        if power == 0:
            v = c
        elif power > 0:
            a_pm[power - 1] = c
        else:
            a_mp[-power - 1] = c.conj().T
    d = 2 * m
    on_site = np.zeros((d, d), dtype=complex)
    on_site[m:, :m] = v
    on_site[:m, m:] = v.conj().T
    hops = np.zeros((big_r, d, d), dtype=complex)
    for r in range(big_r):
        hops[r, m:, :m] = a_pm[r]
        hops[r, :m, m:] = a_mp[r]
    model = build_model(d, big_r, on_site, hops, tol=tol)
    grading = np.array([1] * m + [-1] * m)
    return chiral_split(model, grading, tol=tol)


# --- homotopy paths ---------------------------------------------------------


@dataclass(eq=False)
class Stage:
    """One parameterized leg of a homotopy; evaluate(t, lams) -> (K, n, n)."""

    description: str
    t_start: float
    t_end: float
    evaluate: object
    size: int


@dataclass(eq=False)
class HomotopyPath:
    stages: list
    certificates: list
    winding_per_stage: list
    endpoint: MatrixLoop
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "stages": [
                {"description": s.description, "size": s.size, "certificate": c, "winding": w}
                for s, c, w in zip(self.stages, self.certificates, self.winding_per_stage)
            ],
            "winding": self.winding_per_stage[0] if self.winding_per_stage else None,
            "endpoint_size": self.endpoint.size,
            "notes": {k: v for k, v in self.notes.items() if isinstance(v, (int, float, str, list, tuple))},
        }


def _rotation(n: int, idx_a, idx_b, t: float) -> np.ndarray:
    """Simultaneous plane rotations pairing idx_a[i] with idx_b[i]."""
    r = np.eye(n, dtype=complex)
    ia = np.asarray(idx_a, dtype=int)
    ib = np.asarray(idx_b, dtype=int)
    c, s = np.cos(t), np.sin(t)
    r[ia, ia] = c
    r[ib, ib] = c
    r[ia, ib] = -s
    r[ib, ia] = s
    return r


def _gl_path(target: np.ndarray):
    """Path G(t) in GL from the identity (t=0) to `target` (t=1) via polar factors."""
    u, p = scipy.linalg.polar(target)
    t_diag, z = scipy.linalg.schur(u, output="complex")
    phases = np.angle(np.diag(t_diag))
    eye = np.eye(target.shape[0], dtype=complex)

    def g(t: float) -> np.ndarray:
        ut = (z * np.exp(1j * t * phases)[None, :]) @ z.conj().T
        return ut @ ((1.0 - t) * eye + t * p)

    return g


class _Builder:
    """Tracks the full loop as an evolving active block plus scalar monomial channels."""

    def __init__(self, active_eval, active_size: int):
        self.stages: list[Stage] = []
        self.active_idx = list(range(active_size))
        self.active = active_eval  # callable(lams) -> (K, a, a), or None once dissolved
        self.tail: dict[int, int] = {}
        self.n = active_size

    def _full_eval(self, sub_idx, sub_eval):
        active_idx = list(self.active_idx)
        active = self.active
        tail = dict(self.tail)
        n = self.n
        sub_set = set(sub_idx)
        if active_idx:
            inside = sum(1 for c in active_idx if c in sub_set)
            if inside not in (0, len(active_idx)):
                raise AssertionError("stage must cover the active block entirely or not at all")
            include_active = inside > 0
        else:
            include_active = False
        others = sorted((c, p) for c, p in tail.items() if c not in sub_set)
        sub_arr = np.asarray(sub_idx, dtype=int)
        act_arr = np.asarray(active_idx, dtype=int)

        def ev(t, lams):
            lams = np.asarray(lams, dtype=complex)
            k = lams.shape[0]
            out = np.zeros((k, n, n), dtype=complex)
            if active_idx and not include_active:
                out[:, act_arr[:, None], act_arr[None, :]] = active(lams)
            for c, p in others:
                out[:, c, c] = lams**p
            out[:, sub_arr[:, None], sub_arr[None, :]] = sub_eval(t, lams)
            return out

        return ev

    def add_stage(self, description, t_start, t_end, sub_idx, sub_eval):
        ev = self._full_eval(sub_idx, sub_eval)
        self.stages.append(Stage(description, float(t_start), float(t_end), ev, self.n))
        return ev

    def stabilize(self, extra: int) -> list:
        new = list(range(self.n, self.n + extra))
        self.n += extra
        for c in new:
            self.tail[c] = 0
        eye = np.eye(extra, dtype=complex)

        def sub_eval(t, lams):
            return np.broadcast_to(eye, (len(lams), extra, extra)).copy()

        self.add_stage(f"stabilize: append {extra} trivial band(s)", 0.0, 0.0, new, sub_eval)
        return new

    def rotate_product(self, description, idx_fg, idx_one, f_loop, g_eval):
        """Path from diag(F G, 1) to diag(G, F) on the paired coordinates.

        f_loop is a MatrixLoop (typically a monomial), g_eval a callable; the
        start state must already be diag(F*G, 1) on these coordinates.
        """
        m = len(idx_fg)
        sub_idx = list(idx_fg) + list(idx_one)

        def sub_eval(t, lams, m=m):
            k = len(lams)
            rot = _rotation(2 * m, np.arange(m), np.arange(m, 2 * m), t)
            f_vals = f_loop.eval_many(lams)
            g_vals = g_eval(lams)
            left = np.zeros((k, 2 * m, 2 * m), dtype=complex)
            left[:, :m, :m] = f_vals
            left[:, m:, m:] = np.eye(m)
            right = np.zeros((k, 2 * m, 2 * m), dtype=complex)
            right[:, :m, :m] = g_vals
            right[:, m:, m:] = np.eye(m)
            return rot @ left @ rot.T @ right

        self.add_stage(description, 0.0, 0.5 * np.pi, sub_idx, sub_eval)

    def swap_channels(self, i: int, j: int):
        pi, pj = self.tail[i], self.tail[j]

        def sub_eval(t, lams):
            k = len(lams)
            rot = _rotation(2, [0], [1], t)
            d = np.zeros((k, 2, 2), dtype=complex)
            d[:, 0, 0] = lams**pi
            d[:, 1, 1] = lams**pj
            return rot @ d @ rot.T

        self.add_stage(
            f"sort: swap channels {i} (lambda^{pi}) and {j} (lambda^{pj})",
            0.0,
            0.5 * np.pi,
            [i, j],
            sub_eval,
        )
        self.tail[i], self.tail[j] = pj, pi

    def dissolve_active(self, powers):
        assert self.active_idx and len(powers) == len(self.active_idx)
        for c, p in zip(self.active_idx, powers):
            self.tail[c] = int(p)
        self.active_idx = []
        self.active = None


def certify_path(
    stages,
    tol: Tolerances = DEFAULT_TOL,
    grid_t: int = CERT_GRID_T,
    grid_k: int = CERT_GRID_K,
    grid_cap: int = CERT_GRID_CAP,
):
    """Sampled invertibility certificates and per-stage windings.

    Raises CertificateFailed when a stage's minimum singular value on its
    refined grid falls below 1e-9 of its largest, or when the winding of the
    determinant changes within or across stages.
    """
    certificates = []
    windings = []
    for stage in stages:
        constant = stage.t_start == stage.t_end
        nt, nk = grid_t, grid_k
        while True:
            ts = [stage.t_start] if constant else np.linspace(stage.t_start, stage.t_end, nt)
            lams = np.exp(2j * np.pi * np.arange(nk) / nk)
            mn, mx = np.inf, 0.0
            for t in ts:
                sv = np.linalg.svd(stage.evaluate(float(t), lams), compute_uv=False)
                mn = min(mn, float(sv[:, -1].min()))
                mx = max(mx, float(sv[:, 0].max()))
            if mn > 1e-9 * mx:
                break
            if nt >= grid_cap and nk >= grid_cap:
                raise CertificateFailed(
                    f"stage '{stage.description}': min singular value {mn:.3e} on refined grid"
                )
            nt, nk = min(2 * nt, grid_cap), min(2 * nk, grid_cap)
        certificates.append(mn)

        ws = set()
        for t in [stage.t_start] if constant else np.linspace(stage.t_start, stage.t_end, 5):
            w, *_ = winding_of_curve(
                lambda lams, t=float(t): np.linalg.det(stage.evaluate(t, lams)),
                initial_samples=128,
            )
            ws.add(w)
        if len(ws) != 1:
            raise CertificateFailed(
                f"winding changed within stage '{stage.description}': {sorted(ws)}"
            )
        windings.append(ws.pop())
    if len(set(windings)) > 1:
        raise CertificateFailed(f"winding not conserved across stages: {windings}")
    return certificates, windings


# --- stage generators -------------------------------------------------------


def _poly_planes(loop: MatrixLoop, hop_range: int) -> np.ndarray:
    """Coefficient planes of p = lambda^hop_range * loop, padded down to power 0."""
    shift = loop.lowest_power + hop_range
    if shift < 0:
        raise ValueError("loop has poles of higher order than the stated range")
    m = loop.size
    planes = np.zeros((shift + loop.coeffs.shape[0], m, m), dtype=complex)
    planes[shift:] = loop.coeffs
    # Trim numerically-zero leading planes so the pencil size stays minimal.
    mags = np.array([np.abs(c).max() for c in planes])
    floor = 1e-12 * max(float(mags.max()), 1e-300)
    top = len(planes)
    while top > 1 and mags[top - 1] <= floor:
        top -= 1
    return planes[:top]


def _factor_stages(builder: _Builder, loop: MatrixLoop, hop_range: int) -> MatrixLoop:
    """Stages 1a/1b: rotate h (+) 1 to p (+) lambda^-R, then split the monomial block."""
    q = loop.size
    planes = _poly_planes(loop, hop_range)
    p_loop = MatrixLoop(0, planes)
    if hop_range > 0:
        partners = builder.stabilize(q)
        builder.rotate_product(
            f"factor: rotate h (+) 1 to p (+) lambda^-{hop_range}",
            list(builder.active_idx),
            partners,
            monomial_loop(-hop_range, q),
            p_loop.eval_many,
        )
        builder.active = p_loop.eval_many
        for c in partners:
            builder.tail[c] = -hop_range
        queue = [c for c in partners if builder.tail[c] <= -2]
        while queue:
            c = queue.pop(0)
            m_pow = -builder.tail[c]
            fresh = builder.stabilize(1)[0]
            builder.rotate_product(
                f"split: lambda^-{m_pow} (+) 1 to lambda^-1 (+) lambda^-{m_pow - 1}",
                [c],
                [fresh],
                monomial_loop(-(m_pow - 1), 1),
                monomial_loop(-1, 1).eval_many,
            )
            builder.tail[c] = -1
            builder.tail[fresh] = -(m_pow - 1)
            if m_pow - 1 >= 2:
                queue.append(fresh)
    return p_loop


def companion_pencil(planes: np.ndarray):
    """Linear pencil l(lambda) = lambda C + D equivalent to the polynomial loop.

    Block row 0 carries [lambda P_d + P_{d-1}, P_{d-2}, ..., P_0]; below it the
    pencil has -1 blocks on the subdiagonal and lambda on the diagonal, so
    det l = det p identically.
    """
    d = planes.shape[0] - 1
    m = planes.shape[1]
    if d <= 1:
        c_mat = planes[1].copy() if d == 1 else np.zeros((m, m), dtype=complex)
        return c_mat, planes[0].copy()
    s = d * m
    c_mat = np.zeros((s, s), dtype=complex)
    d_mat = np.zeros((s, s), dtype=complex)
    c_mat[:m, :m] = planes[d]
    d_mat[:m, :m] = planes[d - 1]
    for k in range(1, d):
        c_mat[k * m : (k + 1) * m, k * m : (k + 1) * m] = np.eye(m)
        d_mat[k * m : (k + 1) * m, (k - 1) * m : k * m] = -np.eye(m)
        d_mat[:m, k * m : (k + 1) * m] = planes[d - 1 - k]
    return c_mat, d_mat


def _horner_partials(planes: np.ndarray):
    """H_k(lambda) = P_{d-k} + lambda H_{k-1}, H_1 = P_{d-1} + lambda P_d, for k = 1..d-1."""
    d = planes.shape[0] - 1

    def h_k(k: int, lams: np.ndarray) -> np.ndarray:
        acc = np.broadcast_to(planes[d], (len(lams),) + planes[d].shape).astype(complex).copy()
        for i in range(1, k + 1):
            acc = planes[d - i][None, :, :] + lams[:, None, None] * acc
        return acc

    return h_k


def _linearize_stages(builder: _Builder, planes: np.ndarray):
    """Stage 2: from diag(p, 1, ..., 1) to the companion pencil, determinant fixed."""
    d = planes.shape[0] - 1
    m = planes.shape[1]
    c_mat, d_mat = companion_pencil(planes)
    if d <= 1:
        return c_mat, d_mat
    fresh = builder.stabilize((d - 1) * m)
    sub_idx = list(builder.active_idx) + fresh
    s = d * m
    p_eval = MatrixLoop(0, planes).eval_many

    def start_eval(lams):
        k = len(lams)
        out = np.zeros((k, s, s), dtype=complex)
        out[:, :m, :m] = p_eval(lams)
        out[:, np.arange(m, s), np.arange(m, s)] = 1.0
        return out

    current = start_eval

    def conj_rot_stage(prev, blk_a, blk_b):
        ia = np.arange(blk_a * m, (blk_a + 1) * m)
        ib = np.arange(blk_b * m, (blk_b + 1) * m)

        def ev(t, lams):
            rot = _rotation(s, ia, ib, t)
            return rot @ prev(lams) @ rot.T

        return ev

    # Move p from block 0 to block d-1 by one conjugation.
    ev = conj_rot_stage(current, 0, d - 1)
    builder.add_stage("linearize: move p to the last block slot", 0.0, 0.5 * np.pi, sub_idx, ev)
    current = lambda lams, ev=ev: ev(0.5 * np.pi, lams)

    # Build the signed cyclic shift as d-1 left rotations.
    for blk in range(d - 1, 0, -1):
        ia = np.arange((blk - 1) * m, blk * m)
        ib = np.arange(blk * m, (blk + 1) * m)

        def ev(t, lams, prev=current, ia=ia, ib=ib):
            return _rotation(s, ia, ib, -t) @ prev(lams)

        builder.add_stage(
            f"linearize: cyclic rotation of block pair ({blk - 1}, {blk})",
            0.0,
            0.5 * np.pi,
            sub_idx,
            ev,
        )
        current = lambda lams, ev=ev: ev(0.5 * np.pi, lams)

    # Row operations reinstate the Horner partials on block row 0.
    h_k = _horner_partials(planes)

    def row_ops(t, lams, prev=current):
        out = prev(lams).copy()
        k = len(lams)
        left = np.broadcast_to(np.eye(s), (k, s, s)).astype(complex).copy()
        for kk in range(1, d):
            left[:, :m, kk * m : (kk + 1) * m] = -t * h_k(kk, lams)
        return left @ out

    builder.add_stage("linearize: unipotent row operations", 0.0, 1.0, sub_idx, row_ops)
    current = lambda lams, ev=row_ops: ev(1.0, lams)

    # Column operations, highest block first, complete the pencil.
    for kk in range(d - 1, 0, -1):

        def col_op(t, lams, prev=current, kk=kk):
            k = len(lams)
            right = np.broadcast_to(np.eye(s), (k, s, s)).astype(complex).copy()
            right[:, (kk - 1) * m : kk * m, kk * m : (kk + 1) * m] = (
                -t * lams[:, None, None] * np.eye(m)
            )
            return prev(lams) @ right

        builder.add_stage(
            f"linearize: unipotent column operation on block pair ({kk - 1}, {kk})",
            0.0,
            1.0,
            sub_idx,
            col_op,
        )
        current = lambda lams, ev=col_op: ev(1.0, lams)

    builder.active_idx = sub_idx
    for c in fresh:
        del builder.tail[c]
    builder.active = current
    return c_mat, d_mat


def _projectionize_stages(builder: _Builder, c_mat: np.ndarray, d_mat: np.ndarray, tol: Tolerances):
    """Stage 3: scale by l(1)^-1, homotope the coefficient to its spectral projection."""
    s = c_mat.shape[0]
    sub_idx = list(builder.active_idx)
    ell_at_one = c_mat + d_mat
    sv = np.linalg.svd(ell_at_one, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > tol.singular_cond:
        raise CertificateFailed("pencil is numerically singular at lambda = 1")

    def ell_eval(lams):
        return lams[:, None, None] * c_mat + d_mat[None, :, :]

    g_path = _gl_path(np.linalg.inv(ell_at_one))

    def scale_stage(t, lams):
        return g_path(float(t))[None, :, :] @ ell_eval(lams)

    builder.add_stage("projection: scale by l(1)^-1 along a polar path", 0.0, 1.0, sub_idx, scale_stage)

    cp = np.linalg.solve(ell_at_one, c_mat)
    eigs = np.linalg.eigvals(cp)
    if np.any(np.abs(eigs.real - 0.5) <= tol.cluster):
        raise SpectrumOnCriticalLine(
            "coefficient spectrum touches Re = 1/2; the loop was not invertible upstream"
        )
    q_proj, rank = _spectral_projection(cp, tol)

    def to_projection(t, lams):
        coeff = (1.0 - t) * cp + t * q_proj
        return np.eye(s)[None, :, :] + coeff[None, :, :] * (lams[:, None, None] - 1.0)

    builder.add_stage(
        "projection: linear homotopy of the coefficient to its spectral projection",
        0.0,
        1.0,
        sub_idx,
        to_projection,
    )

    # Straighten Q to the orthogonal coordinate projection diag(1_rank, 0).
    u_r = np.linalg.svd(q_proj)[0][:, :rank] if rank else np.zeros((s, 0))
    u_n = (
        np.linalg.svd(np.eye(s) - q_proj)[0][:, : s - rank]
        if rank < s
        else np.zeros((s, 0))
    )
    s_mat = np.hstack([u_r, u_n])
    s_path = _gl_path(s_mat)
    j_diag = np.diag(np.array([1.0] * rank + [0.0] * (s - rank), dtype=complex))

    def straighten(t, lams):
        st = s_path(1.0 - float(t))
        q_t = st @ j_diag @ np.linalg.inv(st)
        return np.eye(s)[None, :, :] + q_t[None, :, :] * (lams[:, None, None] - 1.0)

    builder.add_stage("projection: straighten Q to a coordinate projection", 0.0, 1.0, sub_idx, straighten)

    builder.dissolve_active([1] * rank + [0] * (s - rank))
    return rank


_SORT_RANK = {1: 0, -1: 1, 0: 2}


def _sort_stages(builder: _Builder):
    """Stage 4: selection-sort the monomial channels into (lambda, lambda^-1, 1) order."""
    coords = sorted(builder.tail)
    for pos, c in enumerate(coords):
        best = min(coords[pos:], key=lambda cc: (_SORT_RANK[builder.tail[cc]], cc))
        if best != c and builder.tail[best] != builder.tail[c]:
            builder.swap_channels(c, best)
        elif best != c and builder.tail[best] == builder.tail[c]:
            continue


# --- public operations ------------------------------------------------------


def stabilize_and_factor(loop: MatrixLoop, hop_range: int | None = None, tol: Tolerances = DEFAULT_TOL) -> HomotopyPath:
    """Rotate h (+) 1 to p (+) lambda^-R and split the monomial block into lambda^-1 factors."""
    if hop_range is None:
        hop_range = loop.natural_range
    builder = _Builder(loop.eval_many, loop.size)
    p_loop = _factor_stages(builder, loop, hop_range)
    certificates, windings = certify_path(builder.stages, tol)
    endpoint = block_diag_loops(
        [p_loop] + [monomial_loop(p, 1) for c, p in sorted(builder.tail.items())]
    )
    return HomotopyPath(
        stages=builder.stages,
        certificates=certificates,
        winding_per_stage=windings,
        endpoint=endpoint,
        notes={"poly": p_loop, "poly_degree": p_loop.coeffs.shape[0] - 1, "hop_range": hop_range},
    )


def linearize(poly_loop: MatrixLoop, tol: Tolerances = DEFAULT_TOL) -> MatrixLoop:
    """Companion-style linear pencil equivalent to a polynomial loop.

    Degree <= 1 loops pass through unchanged.  The result is checked to be
    invertible on the unit circle with the same determinant winding.
    """
    if poly_loop.lowest_power != 0:
        raise ValueError("linearize expects a polynomial loop (lowest power 0)")
    planes = poly_loop.coeffs
    if planes.shape[0] <= 2:
        ell = poly_loop
    else:
        c_mat, d_mat = companion_pencil(planes)
        ell = MatrixLoop(0, np.stack([d_mat, c_mat]))
    w_in, *_ = winding_of_curve(poly_loop.det_fn(), initial_samples=128)
    w_out, *_ = winding_of_curve(ell.det_fn(), initial_samples=128)
    if w_in != w_out:
        raise CertificateFailed(f"linearization changed the winding: {w_in} -> {w_out}")
    return ell


def projectionize(linear_loop: MatrixLoop, tol: Tolerances = DEFAULT_TOL):
    """Reduce an invertible linear loop to a projection loop lambda Q + (1 - Q).

    Returns (path, rank Q); the rank equals the winding of det l.
    """
    if linear_loop.lowest_power < 0 or linear_loop.highest_power > 1:
        raise ValueError("projectionize expects a linear loop lambda C + D")
    size = linear_loop.size
    c_mat = np.zeros((size, size), dtype=complex)
    d_mat = np.zeros((size, size), dtype=complex)
    for j, plane in enumerate(linear_loop.coeffs):
        if linear_loop.lowest_power + j == 0:
            d_mat = plane.astype(complex)
        else:
            c_mat = plane.astype(complex)
    builder = _Builder(
        lambda lams: lams[:, None, None] * c_mat + d_mat[None, :, :], linear_loop.size
    )
    rank = _projectionize_stages(builder, c_mat, d_mat, tol)
    certificates, windings = certify_path(builder.stages, tol)
    endpoint = diagonal_monomials([1] * rank + [0] * (linear_loop.size - rank))
    return (
        HomotopyPath(
            stages=builder.stages,
            certificates=certificates,
            winding_per_stage=windings,
            endpoint=endpoint,
            notes={"projection_rank": rank},
        ),
        rank,
    )


def _spectral_projection(matrix: np.ndarray, tol: Tolerances):
    """Spectral projector of `matrix` for the Re(mu) > 1/2 part of its spectrum.

    Prefers the eigenbasis; falls back to an ordered-Schur Sylvester solve when
    the eigenbasis is ill-conditioned (defective coefficients).
    """
    n = matrix.shape[0]
    eigs, vecs = np.linalg.eig(matrix)
    sel = eigs.real > 0.5
    rank = int(sel.sum())
    if rank in (0, n):
        return (np.eye(n, dtype=complex) if rank == n else np.zeros((n, n), dtype=complex)), rank
    if np.linalg.cond(vecs) <= tol.singular_cond:
        q = vecs @ np.diag(sel.astype(complex)) @ np.linalg.inv(vecs)
        return q, rank
    t_mat, z, sdim = scipy.linalg.schur(
        matrix, output="complex", sort=lambda mu: mu.real > 0.5
    )
    t11 = t_mat[:sdim, :sdim]
    t22 = t_mat[sdim:, sdim:]
    t12 = t_mat[:sdim, sdim:]
    y = scipy.linalg.solve_sylvester(t11, -t22, t12)
    p_t = np.zeros((n, n), dtype=complex)
    p_t[:sdim, :sdim] = np.eye(sdim)
    p_t[:sdim, sdim:] = y
    return z @ p_t @ z.conj().T, sdim


def full_deformation(cm: ChiralModel, tol: Tolerances = DEFAULT_TOL) -> HomotopyPath:
    """Compose all stages, ending at diag(lambda x (W + R q), lambda^-1 x (R q), 1 x rest).

    R here is the natural hopping range of the block symbol (zero hop planes do
    not count), and W its winding.  The endpoint's edge index, computed by the
    truncated half-space route on the reconstructed model, is recorded in the
    notes and must equal W.
    """
    if not cm.balanced:
        raise UnbalancedGrading("deformation needs a balanced graded model")
    loop = loop_from_model(cm).trimmed()
    hop_range = loop.natural_range
    builder = _Builder(loop.eval_many, loop.size)

    p_loop = _factor_stages(builder, loop, hop_range)
    c_mat, d_mat = _linearize_stages(builder, p_loop.coeffs)
    rank = _projectionize_stages(builder, c_mat, d_mat, tol)
    _sort_stages(builder)

    certificates, windings = certify_path(builder.stages, tol)
    powers = [builder.tail[c] for c in sorted(builder.tail)]
    endpoint = diagonal_monomials(powers)
    counts = (powers.count(1), powers.count(-1), powers.count(0))

    from .halfspace import edge_modes_truncated

    endpoint_edge = edge_modes_truncated(model_from_loop(endpoint, tol), tol=tol)
    return HomotopyPath(
        stages=builder.stages,
        certificates=certificates,
        winding_per_stage=windings,
        endpoint=endpoint,
        notes={
            "counts": counts,
            "projection_rank": rank,
            "hop_range": hop_range,
            "endpoint_edge_index": endpoint_edge.edge_index,
            "endpoint_counts_formula": (
                windings[0] + hop_range * loop.size,
                hop_range * loop.size,
            ),
        },
    )
