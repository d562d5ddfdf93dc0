"""Theorem-level checks: index equality, the two-band strong form, in-gap
exclusion, and the seeded random ensembles they run over.

A check only reports pass/fail when its hypotheses hold; otherwise it is
skipped with a reason.  Every verdict carries the numbers it was decided on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, NUM_K_DEFAULT, SINGULAR_DRAW_FRACTION, Tolerances
from .errors import ExhaustedRedraws, SingularLeadingHop
from .halfspace import (
    EdgeReport,
    decay_scale_estimate,
    edge_modes_companion,
    edge_modes_truncated,
    in_gap_scan,
)
from .models import ChiralModel, build_model, chiral_split
from .spectrum import GapReport, certified_gap, chiral_gap_margin, gap_report_dict
from .winding import WindingResult, full_winding


@dataclass
class Verdict:
    status: str  # pass | fail | skip
    details: dict = field(default_factory=dict)


@dataclass(eq=False)
class VerificationCase:
    model: ChiralModel
    winding: WindingResult | None
    edge: EdgeReport | None
    gap: GapReport | None
    verdicts: dict

    @property
    def passed(self) -> bool:
        return all(v.status != "fail" for v in self.verdicts.values())


def case_to_dict(case: VerificationCase) -> dict:
    out = {
        "passed": case.passed,
        "verdicts": {
            name: {"status": v.status, **v.details} for name, v in sorted(case.verdicts.items())
        },
    }
    if case.gap is not None:
        out["gap"] = gap_report_dict(case.gap)
    if case.winding is not None:
        out["winding"] = {
            "winding": case.winding.winding,
            "method_phase": case.winding.method_phase,
            "method_roots": case.winding.method_roots,
            "samples_used": case.winding.samples_used,
            "min_abs_det": case.winding.min_abs_det,
        }
    if case.edge is not None:
        out["edge"] = {
            "dim_ker_pm": case.edge.dim_ker_pm,
            "dim_ker_mp": case.edge.dim_ker_mp,
            "edge_index": case.edge.edge_index,
            "method": case.edge.method,
            "truncation_cells": case.edge.truncation_cells,
            "singular_values_near_zero": case.edge.singular_values_near_zero,
        }
    return out


def verify_bec(cm: ChiralModel, cells: int | None = None, tol: Tolerances = DEFAULT_TOL) -> VerificationCase:
    """Index equality between the bulk winding and the half-space edge index.

    The truncated route provides the edge side unconditionally; when the
    leading hop is invertible the companion route must agree, and the counting
    inequalities bound the kernel dimensions by the graded decaying dimensions.
    """
    gap = certified_gap(cm.base, around_energy=0.0)
    winding = full_winding(cm, tol=tol)
    edge = edge_modes_truncated(cm, cells=cells, tol=tol, gap=gap)
    try:
        edge_c = edge_modes_companion(cm, 0.0, tol)
    except SingularLeadingHop:
        edge_c = None

    verdicts = {}
    w = winding.winding
    verdicts["bec_equality"] = Verdict(
        "pass" if edge.edge_index == w else "fail",
        {"winding": w, "edge_index": edge.edge_index},
    )
    if winding.method_roots is None:
        verdicts["winding_methods"] = Verdict("skip", {"reason": "root counting unavailable"})
    else:
        verdicts["winding_methods"] = Verdict(
            "pass" if winding.method_roots == winding.method_phase else "fail",
            {"method_phase": winding.method_phase, "method_roots": winding.method_roots},
        )
    if edge_c is None:
        reason = {"reason": "leading hop singular; companion route unavailable"}
        verdicts["route_agreement"] = Verdict("skip", dict(reason))
        verdicts["sandwich"] = Verdict("skip", dict(reason))
    else:
        verdicts["route_agreement"] = Verdict(
            "pass"
            if (edge_c.dim_ker_pm, edge_c.dim_ker_mp) == (edge.dim_ker_pm, edge.dim_ker_mp)
            else "fail",
            {
                "companion": (edge_c.dim_ker_pm, edge_c.dim_ker_mp),
                "truncated": (edge.dim_ker_pm, edge.dim_ker_mp),
            },
        )
        i_plus, i_minus = edge_c.graded_decay_dims
        ok = (
            max(0, w) <= edge.dim_ker_pm <= i_plus
            and max(0, -w) <= edge.dim_ker_mp <= i_minus
        )
        verdicts["sandwich"] = Verdict(
            "pass" if ok else "fail",
            {
                "dim_ker_pm": edge.dim_ker_pm,
                "dim_ker_mp": edge.dim_ker_mp,
                "decaying_dims": (i_plus, i_minus),
                "winding": w,
            },
        )
    return VerificationCase(model=cm, winding=winding, edge=edge, gap=gap, verdicts=verdicts)


def verify_two_band_strong(cm: ChiralModel, cells: int | None = None, tol: Tolerances = DEFAULT_TOL) -> VerificationCase:
    """Two-band strong form: kernel dimensions are (max(0,W), max(0,-W)) and |W| <= R."""
    if cm.dim_v != 2:
        reason = {"reason": f"needs a two-band model, got dim_v={cm.dim_v}"}
        return VerificationCase(
            model=cm,
            winding=None,
            edge=None,
            gap=None,
            verdicts={"winding_range": Verdict("skip", dict(reason)),
                      "kernel_dims": Verdict("skip", dict(reason)),
                      "one_sided_kernels": Verdict("skip", dict(reason))},
        )
    gap = certified_gap(cm.base, around_energy=0.0)
    winding = full_winding(cm, tol=tol)
    edge = edge_modes_truncated(cm, cells=cells, tol=tol, gap=gap)
    w = winding.winding
    verdicts = {
        "winding_range": Verdict(
            "pass" if abs(w) <= cm.hop_range else "fail",
            {"winding": w, "hop_range": cm.hop_range},
        ),
        "kernel_dims": Verdict(
            "pass"
            if (edge.dim_ker_pm, edge.dim_ker_mp) == (max(0, w), max(0, -w))
            else "fail",
            {"dims": (edge.dim_ker_pm, edge.dim_ker_mp), "winding": w},
        ),
        "one_sided_kernels": Verdict(
            "pass" if edge.dim_ker_pm == 0 or edge.dim_ker_mp == 0 else "fail",
            {"dims": (edge.dim_ker_pm, edge.dim_ker_mp)},
        ),
    }
    return VerificationCase(model=cm, winding=winding, edge=edge, gap=gap, verdicts=verdicts)


def verify_gap_exclusion(cm: ChiralModel, cells: int = 100, tol: Tolerances = DEFAULT_TOL) -> VerificationCase:
    """Nearest-neighbour two-band models: in-gap spectrum is confined to zero energy.

    Left-localized truncation eigenvalues in the shrunken gap window must be
    zero up to the truncation splitting eps_N = 10 q^N (floating-point floored),
    with q the slowest companion decay when available.
    """
    if cm.hop_range != 1 or cm.dim_v != 2:
        reason = {"reason": f"hypotheses need R=1, dim_v=2; got R={cm.hop_range}, dim_v={cm.dim_v}"}
        return VerificationCase(
            model=cm, winding=None, edge=None, gap=None,
            verdicts={"zero_confinement": Verdict("skip", dict(reason))},
        )
    gap = certified_gap(cm.base, around_energy=0.0)
    delta = 0.05 * (gap.e_plus - gap.e_minus)
    window = (gap.e_minus + delta, gap.e_plus - delta)
    hits = in_gap_scan(cm.base, cells, window, tol=tol, gap=gap)
    q = decay_scale_estimate(cm, tol)
    if q is None:
        eps_n = 1e-7
    else:
        eps_n = max(10.0 * q**cells, 1e-12 * cm.base.norm_scale)
    offenders = [h for h in hits if h.side == "left" and abs(h.energy) > eps_n]
    verdicts = {
        "zero_confinement": Verdict(
            "pass" if not offenders else "fail",
            {
                "eps_n": eps_n,
                "cells": cells,
                "left_energies": [h.energy for h in hits if h.side == "left"],
                "offenders": [h.energy for h in offenders],
            },
        )
    }
    return VerificationCase(model=cm, winding=None, edge=None, gap=gap, verdicts=verdicts)


@dataclass(frozen=True)
class EnsembleSpec:
    seed: int
    count: int
    dim_v: int
    hop_range: int
    coefficient_scale: float = 1.0
    gap_floor: float = 0.05


def random_chiral_ensemble(
    spec: EnsembleSpec,
    tol: Tolerances = DEFAULT_TOL,
    num_k: int = NUM_K_DEFAULT,
) -> list:
    """Reproducible gapped graded models with complex-Gaussian blocks.

    Draws are redrawn until the sampled zero-energy gap margin reaches the
    floor; a fixed fraction of the models gets the last column of its leading
    lower-left hop block zeroed to exercise the singular route.
    """
    if spec.dim_v % 2 or spec.dim_v < 2:
        raise ValueError("ensemble models need an even, positive dim_v")
    if spec.count < 0 or spec.hop_range < 1:
        raise ValueError("count must be >= 0 and hop_range >= 1")
    q = spec.dim_v // 2
    rng = np.random.default_rng(spec.seed)
    grading = np.array([1] * q + [-1] * q)

    def block():
        z = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
        return spec.coefficient_scale * z / math.sqrt(2.0)

    models = []
    for index in range(spec.count):
        singular = bool(rng.random() < SINGULAR_DRAW_FRACTION)
        for _ in range(1000):
            v = block()
            a_pm = np.stack([block() for _ in range(spec.hop_range)])
            a_mp = np.stack([block() for _ in range(spec.hop_range)])
            if singular:
                a_pm[-1][:, -1] = 0.0
            d = spec.dim_v
            on_site = np.zeros((d, d), dtype=complex)
            on_site[q:, :q] = v
            on_site[:q, q:] = v.conj().T
            hops = np.zeros((spec.hop_range, d, d), dtype=complex)
            for r in range(spec.hop_range):
                hops[r, q:, :q] = a_pm[r]
                hops[r, :q, q:] = a_mp[r]
            cm = chiral_split(build_model(d, spec.hop_range, on_site, hops, tol=tol), grading, tol=tol)
            if chiral_gap_margin(cm, num_k) >= spec.gap_floor:
                models.append(cm)
                break
        else:
            raise ExhaustedRedraws(
                f"model {index}: gap floor {spec.gap_floor} unreachable at scale "
                f"{spec.coefficient_scale} after 1000 redraws"
            )
    return models


def has_singular_leading_hop(cm: ChiralModel, tol: Tolerances = DEFAULT_TOL) -> bool:
    sv = np.linalg.svd(cm.base.right_hops[-1], compute_uv=False)
    return bool(sv[-1] == 0 or sv[0] / sv[-1] > tol.singular_cond)
