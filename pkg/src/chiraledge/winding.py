"""Integer winding of det h_pm around the origin, by two independent methods.

The primary method unwraps the phase of the determinant along the unit circle
with adaptive refinement until every increment is below pi/2, then checks the
total is an integer multiple of 2*pi.  The validator recovers the determinant
as a polynomial (times a monomial) by evaluation-interpolation at roots of
unity and counts its roots inside the unit disk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL, WINDING_SAMPLE_CAP, Tolerances
from .errors import GapNotCertified, NonConvergent, UnbalancedGrading
from .models import ChiralModel, h_mp_curve, h_pm_curve


@dataclass(frozen=True)
class WindingResult:
    winding: int
    method_phase: int
    method_roots: int | None
    samples_used: int
    min_abs_det: float


def winding_of_curve(
    f,
    initial_samples: int = 512,
    max_samples: int = WINDING_SAMPLE_CAP,
    zero_rtol: float = 1e-9,
    integer_tol: float = 1e-6,
):
    """Winding number of k -> f(e^{ik}) around 0.

    `f` must accept an array of unit-circle points and return complex values.
    Intervals whose phase increment reaches pi/2 are bisected until all are
    safe; raises GapNotCertified when the curve comes within zero_rtol of the
    origin (relative to its largest magnitude) and NonConvergent at the sample
    cap or when the summed phase is not an integer multiple of 2*pi.

    Returns (winding, samples_used, min_abs, max_abs).
    """
    n0 = max(8, int(initial_samples))
    ks = 2.0 * np.pi * np.arange(n0) / n0
    vals = np.asarray(f(np.exp(1j * ks)), dtype=complex)
    while True:
        mags = np.abs(vals)
        amax = float(mags.max())
        amin = float(mags.min())
        if amin <= zero_rtol * amax:
            raise GapNotCertified(
                f"determinant magnitude drops to {amin:.3e} (max {amax:.3e}) on the circle"
            )
        dphi = np.angle(np.roll(vals, -1) / vals)
        bad = np.abs(dphi) >= 0.5 * np.pi
        if not bad.any():
            break
        if len(ks) + int(bad.sum()) > max_samples:
            raise NonConvergent(f"phase refinement exceeded {max_samples} samples")
        k_next = np.roll(ks, -1)
        k_next[-1] += 2.0 * np.pi
        mids = 0.5 * (ks[bad] + k_next[bad])
        new_vals = np.asarray(f(np.exp(1j * mids)), dtype=complex)
        ks = np.concatenate([ks, mids])
        vals = np.concatenate([vals, new_vals])
        order = np.argsort(ks)
        ks, vals = ks[order], vals[order]
    total = float(dphi.sum())
    w = int(round(total / (2.0 * np.pi)))
    if abs(total - 2.0 * np.pi * w) > integer_tol:
        raise NonConvergent(
            f"summed phase {total:.9f} is not an integer multiple of 2*pi within {integer_tol}"
        )
    return w, len(ks), amin, amax


def _det_block_curve(cm: ChiralModel, which: str):
    curve = h_pm_curve if which == "pm" else h_mp_curve

    def f(lams):
        return np.linalg.det(curve(cm, lams))

    return f


def winding_phase(cm: ChiralModel, initial_samples: int = 512, tol: Tolerances = DEFAULT_TOL) -> WindingResult:
    """Winding of det h_pm by adaptive phase unwrapping (primary method)."""
    if not cm.balanced:
        raise UnbalancedGrading("winding needs a square h_pm block")
    w, used, amin, _ = winding_of_curve(
        _det_block_curve(cm, "pm"),
        initial_samples=initial_samples,
        integer_tol=tol.winding_integer,
    )
    return WindingResult(
        winding=w, method_phase=w, method_roots=None, samples_used=used, min_abs_det=amin
    )


def block_det_poly_coeffs(cm: ChiralModel, which: str = "pm", tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Ascending coefficients of p(lambda) = lambda^(R q) det block(lambda).

    Recovered by least squares on 4 R q + 1 roots of unity; the fit is
    overdetermined and must reproduce the samples to tol.interp_residual.
    """
    if not cm.balanced:
        raise UnbalancedGrading("determinant polynomial needs a square block")
    q = cm.dim_plus
    big_r = cm.hop_range
    degree = 2 * big_r * q
    m = 4 * big_r * q + 1
    omegas = np.exp(2j * np.pi * np.arange(m) / m)
    f = _det_block_curve(cm, which)
    ys = omegas ** (big_r * q) * f(omegas)
    vand = omegas[:, None] ** np.arange(degree + 1)[None, :]
    coeffs, *_ = np.linalg.lstsq(vand, ys, rcond=None)
    residual = np.linalg.norm(vand @ coeffs - ys) / max(1.0, float(np.linalg.norm(ys)))
    if residual > tol.interp_residual:
        raise NonConvergent(f"evaluation-interpolation residual {residual:.3e} too large")
    return coeffs


def _deflate_leading(coeffs: np.ndarray, rel_tol: float) -> np.ndarray:
    """Trim numerically-zero leading coefficients (singular leading hop blocks)."""
    mags = np.abs(coeffs)
    floor = rel_tol * float(mags.max())
    top = len(coeffs)
    while top > 1 and mags[top - 1] <= floor:
        top -= 1
    return coeffs[:top]


def block_det_poly_roots(cm: ChiralModel, which: str = "pm", tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    coeffs = _deflate_leading(block_det_poly_coeffs(cm, which, tol), tol.coeff_trim)
    if len(coeffs) == 1:
        return np.array([], dtype=complex)
    return np.roots(coeffs[::-1])


def winding_roots(cm: ChiralModel, tol: Tolerances = DEFAULT_TOL) -> int:
    """Winding of det h_pm by root counting (validator; finite range only)."""
    roots = block_det_poly_roots(cm, "pm", tol)
    if len(roots) and np.any(np.abs(np.abs(roots) - 1.0) <= tol.circle_band):
        raise GapNotCertified("determinant polynomial has a root on the unit circle")
    inside = int(np.sum(np.abs(roots) < 1.0))
    return inside - cm.hop_range * cm.dim_plus


def full_winding(cm: ChiralModel, initial_samples: int = 512, tol: Tolerances = DEFAULT_TOL) -> WindingResult:
    """Phase-method winding cross-checked against root counting when available."""
    phase = winding_phase(cm, initial_samples=initial_samples, tol=tol)
    try:
        roots = winding_roots(cm, tol)
    except (GapNotCertified, NonConvergent):
        roots = None
    return WindingResult(
        winding=phase.method_phase,
        method_phase=phase.method_phase,
        method_roots=roots,
        samples_used=phase.samples_used,
        min_abs_det=phase.min_abs_det,
    )
