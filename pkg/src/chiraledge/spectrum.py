"""Band structure over the Brillouin zone and Lipschitz-certified gap detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NUM_K_CAP, NUM_K_DEFAULT
from .errors import GapNotCertified, NotSelfAdjoint, UnbalancedGrading
from .models import ChiralModel, ModelParams, bloch_curve, h_pm_curve


@dataclass(frozen=True, eq=False)
class BandStructure:
    """Sampled energy bands: ks (K,), energies (K, d_V) sorted ascending per row."""

    ks: np.ndarray
    energies: np.ndarray
    lipschitz_bound: float

    @property
    def num_k(self) -> int:
        return len(self.ks)

    @property
    def delta_k(self) -> float:
        return 2.0 * np.pi / self.num_k


@dataclass(frozen=True)
class GapReport:
    gapped: bool
    gap_index: int | None
    e_minus: float
    e_plus: float
    certificate_margin: float


def band_structure(model: ModelParams, num_k: int = NUM_K_DEFAULT) -> BandStructure:
    """Eigenvalues of H(e^{ik}) on a uniform k grid (endpoint excluded, periodic)."""
    if not model.self_adjoint:
        raise NotSelfAdjoint("band structure requires a self-adjoint model")
    if num_k < 8:
        raise ValueError(f"num_k must be at least 8, got {num_k}")
    ks = -np.pi + 2.0 * np.pi * np.arange(num_k) / num_k
    hs = bloch_curve(model, np.exp(1j * ks))
    energies = np.linalg.eigvalsh(hs)
    return BandStructure(ks=ks, energies=energies, lipschitz_bound=model.lipschitz_bound())


def detect_gap(bands: BandStructure, around_energy: float | None = None) -> GapReport:
    """Find a band gap certified against sampling error via the Lipschitz bound.

    A gap between consecutive bands j, j+1 is certified when the sampled band
    edges, corrected by L*dk/2 on each side, still leave an open interval.
    Uncertified but plausible gaps come back with gapped=False and a negative
    certificate margin.  When around_energy is given only gaps containing it
    are eligible.
    """
    lo = bands.energies.max(axis=0)   # sampled sup of each band
    hi = bands.energies.min(axis=0)   # sampled inf of each band
    correction = bands.lipschitz_bound * bands.delta_k
    d = bands.energies.shape[1]
    candidates = []
    for j in range(d - 1):
        e_minus, e_plus = float(lo[j]), float(hi[j + 1])
        if around_energy is not None and not (e_minus < around_energy < e_plus):
            continue
        candidates.append((e_plus - e_minus - correction, e_plus - e_minus, j, e_minus, e_plus))
    if not candidates:
        return GapReport(False, None, float("nan"), float("nan"), float("-inf"))
    certified = [c for c in candidates if c[0] > 0]
    if certified:
        margin, _, j, e_minus, e_plus = max(certified, key=lambda c: c[1])
        return GapReport(True, j, e_minus, e_plus, margin)
    margin, _, j, e_minus, e_plus = max(candidates, key=lambda c: c[0])
    return GapReport(False, j, e_minus, e_plus, margin)


def certified_gap(
    model: ModelParams,
    around_energy: float | None = None,
    num_k: int = NUM_K_DEFAULT,
    num_k_cap: int = NUM_K_CAP,
) -> GapReport:
    """detect_gap with adaptive doubling of the k grid; raises if never certified."""
    report = None
    n = num_k
    while n <= num_k_cap:
        report = detect_gap(band_structure(model, n), around_energy)
        if report.gapped:
            return report
        # A negative sampled width cannot be rescued by refinement.
        if report.gap_index is None or report.e_plus - report.e_minus <= 0:
            break
        n *= 2
    raise GapNotCertified(
        f"no certified gap around {around_energy!r}; best margin "
        f"{report.certificate_margin if report else float('-inf'):.3e}"
    )


def chiral_gap_margin(cm: ChiralModel, num_k: int = NUM_K_DEFAULT) -> float:
    """Smallest singular value of h_pm(e^{ik}) over the sampled Brillouin zone.

    A positive value (sampled densely enough for the Lipschitz bound) certifies
    a gap at zero energy.
    """
    if not cm.balanced:
        raise UnbalancedGrading("gap margin at zero energy needs a square h_pm block")
    ks = -np.pi + 2.0 * np.pi * np.arange(num_k) / num_k
    blocks = h_pm_curve(cm, np.exp(1j * ks))
    sv = np.linalg.svd(blocks, compute_uv=False)
    return float(sv[:, -1].min())


def gap_report_dict(report: GapReport) -> dict:
    return {
        "gapped": report.gapped,
        "gap_index": report.gap_index,
        "e_minus": report.e_minus,
        "e_plus": report.e_plus,
        "certificate_margin": report.certificate_margin,
    }
