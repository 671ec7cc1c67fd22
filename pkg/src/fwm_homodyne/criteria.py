"""Separability and EPR inequalities evaluated on measured quadrature moments.

Every evaluator works elementwise, so a :class:`QuadratureMoments` holding
arrays over a time grid yields arrays of results.  Margins follow one
convention throughout: ``margin = lhs - rhs`` and a negative margin (beyond
round-off, ``VIOLATION_TOL``) is a violation.

Sign branches: ``"+"`` denotes Var[X1 + X2] + Var[Y1 - Y2] and ``"-"`` denotes
Var[X1 - X2] + Var[Y1 + Y2]; the smaller one is reported.  The EPR criteria
infer system 2 from system 1; the mirrored inference is evaluated too and the
smaller margin kept, with ``inferred`` telling which system was inferred.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .homodyne import QuadratureMoments

REID_DEGENERATE_VAR = 1e-12
RESCALE_DEGENERATE = 1e-12
# margins within round-off of the boundary are not reported as violations
VIOLATION_TOL = 1e-10

MAIN = ("separability", "epr_sum", "epr_reid")
COHERENT_LO = ("coherent_separability", "coherent_epr_sum", "coherent_epr_reid")
RESCALED = ("rescaled_separability", "rescaled_epr_sum", "rescaled_epr_reid")
CLASSIC = ("classic_duan", "classic_epr_sum", "classic_reid")
ALL = MAIN + COHERENT_LO + RESCALED + CLASSIC


@dataclass(frozen=True, eq=False)
class CriterionResult:
    name: str
    lhs: np.ndarray
    rhs: np.ndarray
    margin: np.ndarray
    violated: np.ndarray
    sign_choice: np.ndarray
    defined: np.ndarray
    inferred: np.ndarray | None = None

    @classmethod
    def build(cls, name, lhs, rhs, sign_choice, defined=True, inferred=None):
        lhs = np.asarray(lhs, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        defined = np.asarray(defined, dtype=bool) & np.isfinite(lhs) & np.isfinite(rhs)
        margin = np.where(defined, lhs - rhs, np.nan)
        lhs = np.where(defined, lhs, np.nan)
        violated = np.where(defined, margin < -VIOLATION_TOL, False)
        return cls(name, lhs, rhs, margin, violated, np.asarray(sign_choice), defined,
                   None if inferred is None else np.asarray(inferred))

    def take(self, index) -> "CriterionResult":
        pick = lambda a: None if a is None else np.asarray(a)[index]  # noqa: E731
        return CriterionResult(self.name, pick(self.lhs), pick(self.rhs), pick(self.margin),
                               pick(self.violated), pick(self.sign_choice), pick(self.defined),
                               pick(self.inferred))


class CriteriaReport(dict):
    """Mapping from criterion name to :class:`CriterionResult`."""

    coherent_lo_assumed: bool = False

    def take(self, index) -> "CriteriaReport":
        out = CriteriaReport({k: v.take(index) for k, v in self.items()})
        out.coherent_lo_assumed = self.coherent_lo_assumed
        return out


def _branches(m: QuadratureMoments):
    plus = m.var_x1_plus_x2 + m.var_y1_minus_y2
    minus = m.var_x1_minus_x2 + m.var_y1_plus_y2
    lhs = np.minimum(plus, minus)
    sign = np.where(plus <= minus, "+", "-")
    return lhs, sign, plus, minus


def _pick_direction(margin_21, margin_12):
    """True where inferring system 1 from system 2 gives the smaller margin."""
    return np.nan_to_num(margin_12, nan=np.inf) < np.nan_to_num(margin_21, nan=np.inf)


def inference_errors(var_target, var_source, cov, degenerate=REID_DEGENERATE_VAR):
    """Optimal linear inference error Var[t] - Var[s, t]^2 / Var[s]."""
    var_source = np.asarray(var_source, dtype=float)
    safe = np.where(var_source < degenerate, 1.0, var_source)
    correction = np.where(var_source < degenerate, 0.0, np.asarray(cov) ** 2 / safe)
    return var_target - correction


def separability(m: QuadratureMoments) -> CriterionResult:
    lhs, sign, _, _ = _branches(m)
    rhs = 2 * np.abs(1 - m.ratio1) + 2 * np.abs(1 - m.ratio2)
    return CriterionResult.build("separability", lhs, rhs, sign)


def epr_sum(m: QuadratureMoments) -> CriterionResult:
    lhs, sign, _, _ = _branches(m)
    rhs2 = 2 * np.abs(1 - m.ratio2)
    rhs1 = 2 * np.abs(1 - m.ratio1)
    mirrored = _pick_direction(lhs - rhs2, lhs - rhs1)
    rhs = np.where(mirrored, rhs1, rhs2)
    return CriterionResult.build("epr_sum", lhs, rhs, sign, inferred=np.where(mirrored, 1, 2))


def _reid_products(m: QuadratureMoments):
    d2 = inference_errors(m.var_x2, m.var_x1, m.cov_x1x2) * inference_errors(m.var_y2, m.var_y1, m.cov_y1y2)
    d1 = inference_errors(m.var_x1, m.var_x2, m.cov_x1x2) * inference_errors(m.var_y1, m.var_y2, m.cov_y1y2)
    return d2, d1


def epr_reid(m: QuadratureMoments) -> CriterionResult:
    d2, d1 = _reid_products(m)
    rhs2 = (1 - m.ratio2) ** 2
    rhs1 = (1 - m.ratio1) ** 2
    mirrored = _pick_direction(d2 - rhs2, d1 - rhs1)
    return CriterionResult.build(
        "epr_reid", np.where(mirrored, d1, d2), np.where(mirrored, rhs1, rhs2),
        np.full(np.shape(d2), "none"), inferred=np.where(mirrored, 1, 2),
    )


def coherent_lo_criteria(m: QuadratureMoments):
    """Criteria that are valid only when both LOs are independent coherent states."""
    lhs, sign, _, _ = _branches(m)
    r1, r2 = m.ratio1, m.ratio2
    sep = CriterionResult.build("coherent_separability", lhs, 4 + 2 * r1 + 2 * r2, sign)
    esum = CriterionResult.build("coherent_epr_sum", lhs, 2 + 2 * r1 + 2 * r2, sign,
                                 inferred=np.full(np.shape(lhs), 2))

    def corrected(var_t, r_t, var_s, r_s, cov):
        denom = var_s - r_s
        ok = denom > 0
        safe = np.where(ok, denom, 1.0)
        return var_t - r_t - np.asarray(cov) ** 2 / safe, ok

    dx2, okx2 = corrected(m.var_x2, r2, m.var_x1, r1, m.cov_x1x2)
    dy2, oky2 = corrected(m.var_y2, r2, m.var_y1, r1, m.cov_y1y2)
    dx1, okx1 = corrected(m.var_x1, r1, m.var_x2, r2, m.cov_x1x2)
    dy1, oky1 = corrected(m.var_y1, r1, m.var_y2, r2, m.cov_y1y2)
    p2, ok2 = dx2 * dy2, okx2 & oky2
    p1, ok1 = dx1 * dy1, okx1 & oky1
    margin2 = np.where(ok2, p2 - 1, np.nan)
    margin1 = np.where(ok1, p1 - 1, np.nan)
    mirrored = _pick_direction(margin2, margin1)
    reid = CriterionResult.build(
        "coherent_epr_reid", np.where(mirrored, p1, p2), np.ones(np.shape(p2)),
        np.full(np.shape(p2), "none"), defined=np.where(mirrored, ok1, ok2),
        inferred=np.where(mirrored, 1, 2),
    )
    return sep, esum, reid


def rescaled_criteria(m: QuadratureMoments):
    """LHS of separability / EPR-sum / Reid divided by their population factors."""
    lhs, sign, _, _ = _branches(m)
    r1, r2 = m.ratio1, m.ratio2

    def ratio(num, den):
        ok = np.abs(den) > RESCALE_DEGENERATE
        return np.where(ok, num / np.where(ok, den, 1.0), np.nan), ok

    sep, ok = ratio(lhs, 0.5 * np.abs(1 - r1) + 0.5 * np.abs(1 - r2))
    sep_res = CriterionResult.build("rescaled_separability", sep, 4.0 * np.ones(np.shape(sep)), sign, ok)

    s2, ok2 = ratio(lhs, np.abs(1 - r2))
    s1, ok1 = ratio(lhs, np.abs(1 - r1))
    mirrored = _pick_direction(np.where(ok2, s2 - 2, np.nan), np.where(ok1, s1 - 2, np.nan))
    esum = CriterionResult.build(
        "rescaled_epr_sum", np.where(mirrored, s1, s2), 2.0 * np.ones(np.shape(s2)), sign,
        np.where(mirrored, ok1, ok2), inferred=np.where(mirrored, 1, 2),
    )

    d2, d1 = _reid_products(m)
    q2, okq2 = ratio(d2, (1 - r2) ** 2)
    q1, okq1 = ratio(d1, (1 - r1) ** 2)
    mirrored = _pick_direction(np.where(okq2, q2 - 1, np.nan), np.where(okq1, q1 - 1, np.nan))
    reid = CriterionResult.build(
        "rescaled_epr_reid", np.where(mirrored, q1, q2), np.ones(np.shape(q2)),
        np.full(np.shape(q2), "none"), np.where(mirrored, okq1, okq2),
        inferred=np.where(mirrored, 1, 2),
    )
    return sep_res, esum, reid


def classic_criteria(m: QuadratureMoments):
    """The ideal-LO inequalities (RHS 4, 2, 1) applied to measured quadratures.

    Correct only for large coherent local oscillators; kept to expose false
    positives when that assumption fails.
    """
    lhs, sign, _, _ = _branches(m)
    ones = np.ones(np.shape(lhs))
    d2, d1 = _reid_products(m)
    mirrored = d1 < d2
    return (
        CriterionResult.build("classic_duan", lhs, 4 * ones, sign),
        CriterionResult.build("classic_epr_sum", lhs, 2 * ones, sign, inferred=np.full(np.shape(lhs), 2)),
        CriterionResult.build("classic_reid", np.where(mirrored, d1, d2), ones,
                              np.full(np.shape(d2), "none"), inferred=np.where(mirrored, 1, 2)),
    )


def evaluate_all(m: QuadratureMoments, coherent_lo_assumed: bool = False) -> CriteriaReport:
    report = CriteriaReport()
    for res in (separability(m), epr_sum(m), epr_reid(m), *coherent_lo_criteria(m),
                *rescaled_criteria(m), *classic_criteria(m)):
        report[res.name] = res
    report.coherent_lo_assumed = coherent_lo_assumed
    return report


def epr_sum_inference_product(m: QuadratureMoments):
    """Product of the +-branch inference errors behind the EPR-sum criterion, minimised over branches."""
    return np.minimum(m.var_x1_plus_x2 * m.var_y1_minus_y2, m.var_x1_minus_x2 * m.var_y1_plus_y2)
