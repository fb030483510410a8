"""Empirical checks of the continuity-in-parameter theory.

Implements the limit-condition measurements, the discrepancy and the
two-sided error/discrepancy sweep, the criterion-vs-behavior agreement
suite, operator-convergence equivalences with monomial coefficient
extraction, and boundary-operator boundedness probes.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .grid import (GridFunction, HolderIndex, algebra_constant, holder_norm,
                   sup_norm)
from .problem import ProblemFamily, apply_B, instantiate
from .solver import (ConditionZeroViolated, SolveRejected, apply_L,
                     build_companion, characteristic_matrix,
                     check_condition_zero, fundamental_matrix,
                     solve_bvp_direct)

ZERO_TAIL_LEN = 5
ZERO_FINAL_FACTOR = 1e-3
RATIO_BAND_CAP = 1e4
DEFAULT_M = 1024


def geometric_eps(eps0: float, factor: float = 0.5, count: int = 20):
    """Default parameter sweep eps_k = eps0 * factor^k, k = 1..count."""
    return [eps0 * factor ** k for k in range(1, count + 1)]


def tends_to_zero(values, final_factor: float = ZERO_FINAL_FACTOR) -> bool:
    """Finite-sweep operationalization of 'tends to 0'.

    PASS when the last-5 tail is strictly decreasing and the final value
    is below final_factor*(first value + 1); an identically tiny sequence
    also passes.
    """
    vals = [v for v in values if v is not None and not math.isnan(v)]
    if len(vals) != len(list(values)) or not vals:
        return False
    tail = vals[-ZERO_TAIL_LEN:]
    if all(v < 1e-12 for v in tail):
        return True
    decreasing = all(t2 < t1 for t1, t2 in zip(tail, tail[1:]))
    return decreasing and vals[-1] < final_factor * (vals[0] + 1.0)


def default_probes(fam: ProblemFamily, N: int = 32):
    """Monomial and trigonometric probe functions in C^{n+r,alpha}.

    {t^p e_q : p <= r+2} plus {sin(t) e_q, cos(t) e_q}.
    """
    m = fam.m
    probes = []
    sources = [f"t^{p}" if p > 1 else ("t" if p == 1 else "1")
               for p in range(fam.r + 3)]
    sources += ["sin(t)", "cos(t)"]
    for src in sources:
        for q in range(m):
            entries = np.empty((m, 1), dtype=object)
            for i in range(m):
                entries[i, 0] = ex.parse_expression(src if i == q else "0")
            probes.append(GridFunction.from_exprs(entries, fam.interval, N))
    return probes


def _coeff_diff(fam: ProblemFamily, j: int, eps: float, N: int) -> GridFunction:
    """A_j(., eps) - A_j(., 0) with an exact symbolic source."""
    e_eps = fam.coeff_exprs(eps)[j]
    e_zero = fam.coeff_exprs(0.0)[j]
    diff = np.empty(e_eps.shape, dtype=object)
    for idx in np.ndindex(e_eps.shape):
        diff[idx] = ex.sub(e_eps[idx], ex.substitute_eps(e_zero[idx], 0.0))
    return GridFunction.from_exprs(diff, fam.interval, N, eps=eps)


def _rhs_diff(fam: ProblemFamily, eps: float, N: int) -> GridFunction:
    e_eps = fam.rhs_exprs(eps)
    e_zero = fam.rhs_exprs(0.0)
    diff = np.empty(e_eps.shape, dtype=object)
    for idx in np.ndindex(e_eps.shape):
        diff[idx] = ex.sub(e_eps[idx], ex.substitute_eps(e_zero[idx], 0.0))
    return GridFunction.from_exprs(diff, fam.interval, N, eps=eps)


# --- discrepancy and the two-sided sweep -------------------------------------

def _all_zero(sources) -> bool:
    return sources is not None and all(
        isinstance(sources[idx], ex.Const) and sources[idx].value == 0
        for idx in np.ndindex(sources.shape))


def _perturbation_residual(fam: ProblemFamily, eps: float, y0: GridFunction,
                           N: int) -> GridFunction:
    """(L(eps) - L(0)) y0 - (f(eps) - f(0)) with exact cancellation.

    Coefficient differences that fold to the zero expression are skipped,
    so a purely rough right-hand-side perturbation keeps its symbolic
    source (and hence its exact Holder seminorm).
    """
    from .grid import product
    resid = _rhs_diff(fam, eps, N).scale(-1.0)
    for j in range(fam.r):
        dA = _coeff_diff(fam, j, eps, N)
        if _all_zero(dA.sources):
            continue
        resid = resid + product(dA, y0.derivative(j))
    return resid


def discrepancy(fam: ProblemFamily, eps: float, y0: GridFunction,
                idx: HolderIndex | None = None, N: int = 32,
                M: int = DEFAULT_M, direct: bool = False) -> float:
    """||L(eps) y0 - f(., eps)||_{n,alpha} + |B(eps) y0 - c(eps)|.

    By default y0 is treated as the exact solution of the unperturbed
    problem it was computed from, i.e. L(0) y0 - f(0) and B(0) y0 - c(0)
    are cancelled symbolically before taking norms; this keeps tiny-eps
    discrepancies free of the base solve's truncation noise.  Pass
    direct=True for the literal definition.
    """
    idx = idx or fam.idx
    inst = instantiate(fam, eps, N)
    if direct:
        resid = apply_L(inst, y0) - inst.rhs.resample(2 * N)
        bvec = apply_B(inst.B, y0)[:, 0] - inst.c
    else:
        inst0 = instantiate(fam, 0.0, N)
        resid = _perturbation_residual(fam, eps, y0, N)
        bvec = (apply_B(inst.B, y0)[:, 0] - apply_B(inst0.B, y0)[:, 0]
                - (inst.c - inst0.c))
    term1 = holder_norm(resid, idx, M).total
    return term1 + float(np.linalg.norm(bvec))


@dataclass
class SweepRecord:
    eps: float
    error: float | None            # ||y(.,0) - y(.,eps)||_{n+r,alpha}
    discrepancy: float | None
    ratio: float | None
    cond0_margin: float | None
    solve_residual: float | None
    failure: str | None = None


@dataclass
class SweepReport:
    family: str
    records: list
    kappa_hat_low: float | None
    kappa_hat_high: float | None
    band_violation: bool

    COLUMNS = ("eps", "error", "discrepancy", "ratio", "cond0_margin",
               "solve_residual", "failure")

    def rows(self):
        for rec in self.records:
            yield [rec.eps, rec.error, rec.discrepancy, rec.ratio,
                   rec.cond0_margin, rec.solve_residual, rec.failure or ""]

    def write_csv(self, path: str):
        write_csv(path, self.COLUMNS, self.rows())

    def summary(self):
        return {
            "family": self.family,
            "count": len(self.records),
            "kappa_hat_low": self.kappa_hat_low,
            "kappa_hat_high": self.kappa_hat_high,
            "band_violation": self.band_violation,
            "errors_tend_to_zero": tends_to_zero(
                [r.error for r in self.records]),
            "failures": [r.eps for r in self.records if r.failure],
        }


def _delta_solve(fam: ProblemFamily, inst_eps, y0: GridFunction,
                 B0, c0: np.ndarray, N: int):
    """Solve for delta = y(eps) - y(0) through the exactly-cancelled
    perturbation data, avoiding loss of significance at tiny eps."""
    rhs = _perturbation_residual(fam, inst_eps.eps, y0, N).scale(-1.0)
    c_delta = (inst_eps.c - c0) - (apply_B(inst_eps.B, y0)[:, 0]
                                   - apply_B(B0, y0)[:, 0])
    return solve_bvp_direct(inst_eps, rhs=rhs, c=c_delta)


def two_sided_sweep(fam: ProblemFamily, eps_sequence=None,
                    idx: HolderIndex | None = None, N: int = 32,
                    M: int = DEFAULT_M, jobs: int = 1) -> SweepReport:
    """Error-vs-discrepancy ratios along an eps sweep.

    Raises ConditionZeroViolated when the unperturbed problem is
    ill-posed; solve failures at individual eps are recorded as data.
    jobs > 1 runs the per-eps work on a thread pool (output order is
    unchanged).
    """
    idx = idx or fam.idx
    err_idx = HolderIndex(idx.n + fam.r, idx.alpha)
    if eps_sequence is None:
        eps_sequence = geometric_eps(fam.eps0)
    inst0 = instantiate(fam, 0.0, N)
    res0 = solve_bvp_direct(inst0)
    y0 = res0.y

    def one(eps):
        try:
            inst = instantiate(fam, eps, N)
            cm = characteristic_matrix(
                inst.B, fundamental_matrix(build_companion(inst)).X)
            delta = _delta_solve(fam, inst, y0, inst0.B, inst0.c, N)
            error = holder_norm(delta.y, err_idx, M).total
            d = discrepancy(fam, eps, y0, idx, N, M)
            ratio = error / d if d > 0 else None
            return SweepRecord(eps, error, d, ratio, cm.margin,
                               delta.residual)
        except (ConditionZeroViolated, SolveRejected) as err:
            return SweepRecord(eps, None, None, None, None, None,
                               failure=type(err).__name__)

    ordered = sorted(eps_sequence, reverse=True)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, ordered))
    else:
        records = [one(eps) for eps in ordered]
    ratios = [r.ratio for r in records if r.ratio is not None]
    lo = min(ratios) if ratios else None
    hi = max(ratios) if ratios else None
    violation = bool(ratios) and hi / lo > RATIO_BAND_CAP
    return SweepReport(fam.name, records, lo, hi, violation)


# --- limit conditions ---------------------------------------------------------

@dataclass
class LimitConditionReport:
    eps_sequence: list
    condI_norms: list       # per eps: list of r Holder norms
    condII_probe: list      # per eps: max probe deviation of B
    condIII_norm: list
    condIV: list
    verdicts: dict = field(default_factory=dict)

    def rows(self):
        r = len(self.condI_norms[0]) if self.condI_norms else 0
        for i, eps in enumerate(self.eps_sequence):
            yield ([eps] + list(self.condI_norms[i])
                   + [self.condII_probe[i], self.condIII_norm[i],
                      self.condIV[i]])

    def columns(self):
        r = len(self.condI_norms[0]) if self.condI_norms else 0
        return (["eps"] + [f"condI_A{j}" for j in range(r)]
                + ["condII_probe", "condIII_norm", "condIV"])

    def write_csv(self, path: str):
        write_csv(path, self.columns(), self.rows())


def limit_conditions_report(fam: ProblemFamily, eps_sequence=None,
                            probes=None, idx: HolderIndex | None = None,
                            N: int = 32, M: int = DEFAULT_M,
                            final_factor: float = ZERO_FINAL_FACTOR
                            ) -> LimitConditionReport:
    """Measure Conditions (I)-(IV) along the sweep and grade their tails."""
    idx = idx or fam.idx
    if eps_sequence is None:
        eps_sequence = geometric_eps(fam.eps0)
    eps_sequence = sorted(eps_sequence, reverse=True)
    probes = probes or default_probes(fam, N)
    inst0 = instantiate(fam, 0.0, N)
    condI, condII, condIII, condIV = [], [], [], []
    for eps in eps_sequence:
        inst = instantiate(fam, eps, N)
        condI.append([holder_norm(_coeff_diff(fam, j, eps, N), idx, M).total
                      for j in range(fam.r)])
        dev = 0.0
        for y in probes:
            delta = apply_B(inst.B, y)[:, 0] - apply_B(inst0.B, y)[:, 0]
            dev = max(dev, float(np.linalg.norm(delta)))
        condII.append(dev)
        condIII.append(holder_norm(_rhs_diff(fam, eps, N), idx, M).total)
        condIV.append(float(np.linalg.norm(inst.c - inst0.c)))
    report = LimitConditionReport(list(eps_sequence), condI, condII,
                                  condIII, condIV)
    report.verdicts = {
        "I": all(tends_to_zero([row[j] for row in condI], final_factor)
                 for j in range(fam.r)),
        "II": tends_to_zero(condII, final_factor),
        "III": tends_to_zero(condIII, final_factor),
        "IV": tends_to_zero(condIV, final_factor),
    }
    return report


# --- main theorem agreement ---------------------------------------------------

@dataclass
class MainTheoremVerdict:
    family: str
    cond0_margin: float
    cond0_ok: bool
    condI_ok: bool
    condII_ok: bool
    criterion: bool
    solvable: bool              # empirical (*): every swept solve succeeded
    errors_tend_to_zero: bool   # empirical (**)
    behavior: bool
    agreement: bool

    def summary(self):
        return self.__dict__.copy()


def main_theorem_suite(fam: ProblemFamily, eps_sequence=None,
                       probes=None, idx: HolderIndex | None = None,
                       N: int = 32, M: int = DEFAULT_M,
                       criterion_final_factor: float = ZERO_FINAL_FACTOR
                       ) -> MainTheoremVerdict:
    """Check that the criterion side (Condition (0) + Limit Conditions I
    and II) agrees with the observed solvability-and-convergence side."""
    idx = idx or fam.idx
    if eps_sequence is None:
        eps_sequence = geometric_eps(fam.eps0)
    inst0 = instantiate(fam, 0.0, N)
    cm = characteristic_matrix(
        inst0.B, fundamental_matrix(build_companion(inst0)).X)
    cond0 = check_condition_zero(cm)
    lim = limit_conditions_report(fam, eps_sequence, probes, idx, N, M,
                                  final_factor=criterion_final_factor)
    criterion = bool(cond0["satisfied"] and lim.verdicts["I"]
                     and lim.verdicts["II"])
    solvable = True
    errors_ok = False
    if cond0["satisfied"]:
        report = two_sided_sweep(fam, eps_sequence, idx, N, M)
        solvable = not any(r.failure for r in report.records)
        errors_ok = tends_to_zero([r.error for r in report.records])
    else:
        try:
            solve_bvp_direct(inst0)
        except (ConditionZeroViolated, SolveRejected):
            solvable = False
    behavior = solvable and errors_ok
    return MainTheoremVerdict(
        family=fam.name, cond0_margin=cond0["margin"],
        cond0_ok=bool(cond0["satisfied"]), condI_ok=lim.verdicts["I"],
        condII_ok=lim.verdicts["II"], criterion=criterion,
        solvable=solvable, errors_tend_to_zero=errors_ok,
        behavior=behavior, agreement=(criterion == behavior))


# --- operator convergence (monomial extraction + equivalences) -----------------

def extract_coefficients_monomials(fam: ProblemFamily, eps: float,
                                   idx: HolderIndex | None = None,
                                   N: int = 32):
    """Recover A_0..A_{r-1} from the action of L(eps) on t^p I_m.

    Uses the triangular recursion A_{k+1} = ((k+1)!)^{-1} (L Z - sum_l
    A_l Z^(l)) with Z = t^{k+1} I_m; exact for polynomial coefficients.
    """
    inst = instantiate(fam, eps, N)
    r, m = fam.r, fam.m
    recovered = []
    for p in range(r):
        Z = _monomial_matrix(fam, p, m, N)
        LZ = apply_L(inst, Z)
        acc = LZ
        fact = 1.0
        for l in range(p):
            # Z^(l) = p!/(p-l)! t^{p-l} I
            coeff = math.factorial(p) / math.factorial(p - l)
            Zl = _monomial_matrix(fam, p - l, m, max(N, acc.N)).scale(coeff)
            from .grid import product
            acc = acc - product(recovered[l], Zl)
        recovered.append(acc.scale(1.0 / math.factorial(p)))
    return recovered


def _monomial_matrix(fam: ProblemFamily, p: int, m: int, N: int) -> GridFunction:
    src = "1" if p == 0 else ("t" if p == 1 else f"t^{p}")
    entries = np.empty((m, m), dtype=object)
    for i, j in np.ndindex(m, m):
        entries[i, j] = ex.parse_expression(src if i == j else "0")
    return GridFunction.from_exprs(entries, fam.interval, N)


@dataclass
class Theorem2Report:
    eps_sequence: list
    S: list           # aggregate coefficient-difference norms
    P: list           # probe lower bounds on ||L(eps) - L(0)||
    c2: float
    bound_holds: bool           # P(eps) <= c2 * S(eps) for every eps
    S_tends_to_zero: bool
    P_tends_to_zero: bool
    joint: bool       # both tails decrease or both do not

    def summary(self):
        return {"c2": self.c2, "bound_holds": self.bound_holds,
                "S_tends_to_zero": self.S_tends_to_zero,
                "P_tends_to_zero": self.P_tends_to_zero,
                "joint": self.joint}

    def write_csv(self, path: str):
        write_csv(path, ("eps", "S", "P"),
                  ([e, s, p] for e, s, p in
                   zip(self.eps_sequence, self.S, self.P)))


def theorem2_equivalence_check(fam: ProblemFamily, eps_sequence=None,
                               probes=None, idx: HolderIndex | None = None,
                               N: int = 32, M: int = DEFAULT_M) -> Theorem2Report:
    """Probe operator-norm lower bounds against the coefficient aggregate.

    S(eps) = sum_j ||A_j(eps)-A_j(0)||_{n,alpha} dominates (up to the
    calibrated constant c2) the probe estimate P(eps) of the operator-norm
    distance, and the two vanish together.
    """
    from .grid import product
    idx = idx or fam.idx
    err_idx = HolderIndex(idx.n + fam.r, idx.alpha)
    if eps_sequence is None:
        eps_sequence = geometric_eps(fam.eps0)
    eps_sequence = sorted(eps_sequence, reverse=True)
    probes = probes or default_probes(fam, N)
    K = algebra_constant(idx)
    probe_norms = [holder_norm(y, err_idx, M).total for y in probes]
    deriv_sums = []
    for y in probes:
        deriv_sums.append(max(
            holder_norm(y.derivative(j), idx, M).total
            for j in range(fam.r)))
    c2 = max(K * ds / pn for ds, pn in zip(deriv_sums, probe_norms))
    S_vals, P_vals = [], []
    for eps in eps_sequence:
        diffs = [_coeff_diff(fam, j, eps, N) for j in range(fam.r)]
        S_vals.append(sum(holder_norm(d, idx, M).total for d in diffs))
        best = 0.0
        for y, pn in zip(probes, probe_norms):
            acc = None
            for j in range(fam.r):
                term = product(diffs[j], y.derivative(j))
                acc = term if acc is None else acc + term
            best = max(best, holder_norm(acc, idx, M).total / pn)
        P_vals.append(best)
    slack = 1e-9
    holds = all(p <= c2 * s + slack * (1 + s) for p, s in
                zip(P_vals, S_vals))
    s_zero = tends_to_zero(S_vals)
    p_zero = tends_to_zero(P_vals)
    return Theorem2Report(list(eps_sequence), S_vals, P_vals, c2, holds,
                          s_zero, p_zero, s_zero == p_zero)


def boundedness_probe_B(fam: ProblemFamily, eps_sequence=None, probes=None,
                        idx: HolderIndex | None = None, N: int = 32,
                        M: int = DEFAULT_M, cap: float = 1e4):
    """Per-eps lower bounds of ||B(eps)|| from a probe set."""
    idx = idx or fam.idx
    err_idx = HolderIndex(idx.n + fam.r, idx.alpha)
    if eps_sequence is None:
        eps_sequence = geometric_eps(fam.eps0)
    eps_sequence = sorted(eps_sequence, reverse=True)
    probes = probes or default_probes(fam, N)
    probe_norms = [holder_norm(y, err_idx, M).total for y in probes]
    estimates = []
    for eps in eps_sequence:
        inst = instantiate(fam, eps, N)
        est = max(float(np.linalg.norm(apply_B(inst.B, y)[:, 0])) / pn
                  for y, pn in zip(probes, probe_norms))
        estimates.append(est)
    return {"eps_sequence": list(eps_sequence), "estimates": estimates,
            "verdict": "BOUNDED" if max(estimates) < cap else "UNBOUNDED"}


# --- serialization -------------------------------------------------------------

def fmt(value) -> str:
    """17-significant-digit, locale-free number formatting."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    return format(float(value), ".17g")


def write_csv(path: str, columns, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_json(path: str, payload):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
