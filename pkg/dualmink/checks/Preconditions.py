import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import optimize

from ..bodies.StarBody import StarBody
from ..bodies.SupportPolytope import antipodal_partner
from ..config import tolerances
from ..errors import DimensionMismatchError, EnumerationBudgetError
from ..measures.DiscreteMeasure import DiscreteMeasure
from ..measures.DualMeasures import star_volume
from ..sphere.SphereGrid import SphereGrid, build_grid, default_kind, rank_of_atoms, unit

logger = logging.getLogger(__name__)


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INDETERMINATE = "indeterminate"
    INAPPLICABLE = "inapplicable"


class HemisphereStatus(str, Enum):
    CONCENTRATED = "concentrated"
    FREE = "free"
    INDETERMINATE = "indeterminate"


def classify_slack(slack: float, band: float = tolerances.SLACK_REFUSAL) -> CheckStatus:
    if slack > band:
        return CheckStatus.PASS
    if slack < -band:
        return CheckStatus.FAIL
    return CheckStatus.INDETERMINATE


# ---------------------------------------------------------------------- #
# Evenness

def check_even(mu: DiscreteMeasure, tol: float = tolerances.EVEN_WEIGHTS) -> bool:
    """ Atoms pair under negation and paired weights agree within tol """
    pairs = antipodal_partner(mu.atoms)
    if pairs is None:
        return False
    return bool(np.all(np.abs(mu.weights[pairs] - mu.weights) <= tol))


# ---------------------------------------------------------------------- #
# Subspace mass

@dataclass(frozen=True)
class SubspaceSup:
    fraction: float
    witness: tuple[int, ...]


def _lines(mu: DiscreteMeasure) -> tuple[np.ndarray, np.ndarray, list[list[int]]]:
    """ Atoms grouped up to sign: representative directions, line masses, members """
    pairs = antipodal_partner(mu.atoms)
    seen = np.zeros(len(mu), dtype=bool)
    reps, masses, members = [], [], []
    for i in range(len(mu)):
        if seen[i]:
            continue
        group = [i]
        seen[i] = True
        if pairs is None:
            partner = _partner(mu.atoms, i)
        else:
            partner = int(pairs[i])
        if partner is not None and partner != i and not seen[partner]:
            group.append(partner)
            seen[partner] = True
        reps.append(mu.atoms[i])
        masses.append(math.fsum(mu.weights[group]))
        members.append(sorted(group))
    return np.array(reps), np.array(masses), members


def _partner(atoms: np.ndarray, i: int) -> int | None:
    gaps = np.linalg.norm(atoms + atoms[i], axis=1)
    j = int(np.argmin(gaps))
    return j if gaps[j] <= tolerances.MATCHING else None


def subset_count(lines: int, i: int) -> int:
    return sum(math.comb(lines, r) for r in range(1, i + 1))


def subspace_mass_sup(mu: DiscreteMeasure, i: int,
                      membership: float = tolerances.SUBSPACE_MEMBERSHIP,
                      max_atoms: int = tolerances.MAX_ATOMS,
                      max_subsets: int = tolerances.MAX_SUBSETS) -> SubspaceSup:

    """
    max over i-dimensional subspaces ξ of μ(ξ ∩ S^{n-1}) / |μ|.

    Any optimal ξ may be taken as the span of the atoms it contains, padded
    arbitrarily, so spans of at most i atoms (up to sign) are enumerated
    exhaustively. An atom belongs to a span when its distance to it is at
    most membership.
    """

    n = mu.dim
    if not 1 <= i <= n - 1:
        raise ValueError(f"subspace dimension must lie in [1, {n - 1}], not {i}")
    reps, masses, members = _lines(mu)
    count = len(reps)
    if count > max_atoms:
        raise EnumerationBudgetError(f"{count} atoms up to sign exceed the cap of {max_atoms}")
    needed = subset_count(count, i)
    if needed > max_subsets:
        raise EnumerationBudgetError(
            f"{needed} spans of up to {i} atoms exceed the cap of {max_subsets}")

    best_mass, best_lines = -1.0, ()
    for r in range(1, min(i, count) + 1):
        for combo in itertools.combinations(range(count), r):
            basis, triangular = np.linalg.qr(reps[list(combo)].T)
            if np.min(np.abs(np.diag(triangular))) <= tolerances.RANK_THRESHOLD:
                continue  # a smaller span already covers it
            residual = np.linalg.norm(reps - (reps @ basis) @ basis.T, axis=1)
            inside = np.flatnonzero(residual <= membership)
            mass = math.fsum(masses[inside])
            if mass > best_mass:
                best_mass, best_lines = mass, tuple(inside)

    witness = tuple(sorted(k for line in best_lines for k in members[line]))
    fraction = min(1.0, best_mass / mu.total)
    return SubspaceSup(fraction=fraction, witness=witness)


@dataclass(frozen=True)
class SubspaceMass:
    dimension: int
    sup_fraction: float
    threshold: float
    slack: float
    witness: tuple[int, ...]
    status: CheckStatus

    def to_document(self) -> dict:
        return {
            "dimension": self.dimension,
            "sup_fraction": self.sup_fraction,
            "threshold": self.threshold,
            "slack": self.slack,
            "witness": list(self.witness),
            "status": self.status.value,
        }


@dataclass(frozen=True)
class SubspaceMassCheck:
    status: CheckStatus
    entries: tuple[SubspaceMass, ...] = ()

    @property
    def worst(self) -> SubspaceMass | None:
        if not self.entries:
            return None
        return min(self.entries, key=lambda entry: entry.slack)


def check_subspace_mass_inequality(mu: DiscreteMeasure, q: float,
                                   band: float = tolerances.SLACK_REFUSAL,
                                   **budget) -> SubspaceMassCheck:

    """
    Compare the sup fraction against min{i/q, 1} for i = 1, ..., n-1. Each
    dimension passes when the slack exceeds band, fails below -band and is
    indeterminate in between; full mass on a great subsphere against the
    threshold 1 is a failure outright.
    """

    n = mu.dim
    if not 0 < q < n:
        raise ValueError(f"the subspace mass inequality is stated for 0 < q < {n}, not {q}")
    if not check_even(mu):
        return SubspaceMassCheck(CheckStatus.INAPPLICABLE)

    entries = []
    for i in range(1, n):
        sup = subspace_mass_sup(mu, i, **budget)
        threshold = min(i / q, 1.0)
        slack = threshold - sup.fraction
        status = classify_slack(slack, band)
        if sup.fraction >= 1.0 and threshold >= 1.0:
            status = CheckStatus.FAIL
        entries.append(SubspaceMass(i, sup.fraction, threshold, slack, sup.witness, status))
        logger.debug("subspace mass i=%d: sup %.6g threshold %.6g (%s)",
                     i, sup.fraction, threshold, status.value)

    statuses = {entry.status for entry in entries}
    if CheckStatus.FAIL in statuses:
        overall = CheckStatus.FAIL
    elif CheckStatus.INDETERMINATE in statuses:
        overall = CheckStatus.INDETERMINATE
    else:
        overall = CheckStatus.PASS
    return SubspaceMassCheck(overall, tuple(entries))


# ---------------------------------------------------------------------- #
# Hemispheres and subspheres

@dataclass(frozen=True)
class HemisphereResult:
    status: HemisphereStatus
    witness: np.ndarray | None
    margin: float

    @property
    def concentrated(self) -> bool:
        return self.status is HemisphereStatus.CONCENTRATED

    def to_document(self) -> dict:
        return {
            "status": self.status.value,
            "witness": None if self.witness is None else self.witness.tolist(),
            "margin": self.margin,
        }


def _classify_margin(margin: float, witness: np.ndarray, accept: float,
                     reject: float) -> HemisphereResult:
    if margin >= accept:
        return HemisphereResult(HemisphereStatus.CONCENTRATED, witness, margin)
    if margin <= reject:
        return HemisphereResult(HemisphereStatus.FREE, None, margin)
    return HemisphereResult(HemisphereStatus.INDETERMINATE, witness, margin)


def _candidates(atoms: np.ndarray, normal: np.ndarray) -> np.ndarray:
    n = atoms.shape[1]
    resolution = 16 if n <= 4 else 6
    grid = build_grid(n, resolution, default_kind(n), seed=0)
    rows = [grid.nodes, atoms, normal[None, :], -normal[None, :]]
    mean = atoms.sum(axis=0)
    if np.linalg.norm(mean) > 0:
        rows.append(unit(mean)[None, :])
    return np.vstack(rows)


def hemisphere_concentrated(mu: DiscreteMeasure,
                            accept: float = tolerances.HEMISPHERE_WITNESS_MARGIN,
                            reject: float = tolerances.HEMISPHERE_REJECT) -> HemisphereResult:

    """
    Decide whether some closed hemisphere {u : u·v >= 0} holds every atom by
    maximizing the margin min_i v·x_i over unit v.

    Atom sets closed under negation are decided from the least singular
    value σ of the atom matrix: the best margin lies in [-σ, -σ/√N].
    Other sets are scanned over a coarse grid, the atoms, their mean and
    the least singular directions, and the best candidates are refined
    with Nelder-Mead.
    """

    atoms = mu.atoms
    count, n = atoms.shape
    _, sigma, vt = np.linalg.svd(atoms, full_matrices=True)
    least = sigma[-1] if len(sigma) == n else 0.0
    normal = vt[-1]

    if antipodal_partner(atoms) is not None:
        if least / math.sqrt(count) >= -reject:
            return HemisphereResult(HemisphereStatus.FREE, None, -least / math.sqrt(count))
        return _classify_margin(-float(np.max(np.abs(atoms @ normal))), normal, accept, reject)

    def margin(v):
        norm = np.linalg.norm(v)
        if norm == 0:
            return -1.0
        return float(np.min(atoms @ (v / norm)))

    candidates = _candidates(atoms, normal)
    margins = np.min(candidates @ atoms.T, axis=1)
    order = np.argsort(-margins, kind="stable")[:4]
    best_v, best = candidates[order[0]], float(margins[order[0]])

    for k in order:
        result = optimize.minimize(
            lambda v: -margin(v), candidates[k], method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 400 * n})
        value = margin(result.x)
        if value > best:
            best_v, best = result.x, value

    witness = unit(best_v)
    logger.debug("hemisphere search: best margin %.3g", best)
    return _classify_margin(best, witness, accept, reject)


def great_subsphere_concentrated(mu: DiscreteMeasure,
                                 tol: float = tolerances.RANK_THRESHOLD) -> bool:
    return rank_of_atoms(mu.atoms, tol) < mu.dim


# ---------------------------------------------------------------------- #
# Mass balance

@dataclass(frozen=True)
class MassBalance:
    total: float
    vol_Q: float
    gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.gap <= self.tol

    def to_document(self) -> dict:
        return {"total": self.total, "vol_Q": self.vol_Q, "gap": self.gap,
                "tol": self.tol, "passed": self.passed}


def check_mass_balance(mu: DiscreteMeasure, Q: StarBody, grid: SphereGrid,
                       tol: float = tolerances.MASS_BALANCE) -> MassBalance:
    """ |μ| against Vol(Q) = (1/n) ∫ ρ_Q^n du on grid """
    if not mu.dim == Q.dim == grid.dim:
        raise DimensionMismatchError("measure, star body and grid dimensions differ")
    vol_Q = star_volume(Q, grid)
    gap = abs(mu.total - vol_Q) / vol_Q
    return MassBalance(total=mu.total, vol_Q=vol_Q, gap=gap, tol=tol)


# ---------------------------------------------------------------------- #
# Report

class Regime(str, Enum):
    NEGATIVE = "negative"
    LOGARITHMIC = "logarithmic"
    SUBCRITICAL = "subcritical"
    OUT_OF_RANGE = "out_of_range"


def regime_of(q: float, n: int) -> Regime:
    if q < 0:
        return Regime.NEGATIVE
    if q == 0:
        return Regime.LOGARITHMIC
    if q < n:
        return Regime.SUBCRITICAL
    return Regime.OUT_OF_RANGE


@dataclass(frozen=True)
class Finding:
    """ A failed or undecided hypothesis; overridable ones only leave the proven range """

    name: str
    status: CheckStatus
    detail: str
    overridable: bool = False


@dataclass
class PreconditionReport:
    q: float
    regime: Regime
    even: bool
    hemisphere: HemisphereResult
    great_subsphere_free: bool
    subspace_mass: SubspaceMassCheck | None = None
    mass_balance: MassBalance | None = None
    star_even: bool | None = None
    findings: list[Finding] = field(default_factory=list)

    @property
    def hemisphere_free(self) -> bool:
        return self.hemisphere.status is HemisphereStatus.FREE

    @property
    def status(self) -> CheckStatus:
        statuses = {finding.status for finding in self.findings}
        if CheckStatus.FAIL in statuses:
            return CheckStatus.FAIL
        if CheckStatus.INDETERMINATE in statuses:
            return CheckStatus.INDETERMINATE
        return CheckStatus.PASS

    def blocking(self, override: bool = False) -> list[Finding]:
        """ Findings that refuse a solve; override lifts the out-of-range ones """
        return [f for f in self.findings if not (override and f.overridable)]

    def to_document(self) -> dict:
        return {
            "schema": "dualmink.preconditions/1",
            "q": self.q,
            "regime": self.regime.value,
            "status": self.status.value,
            "even": self.even,
            "star_even": self.star_even,
            "hemisphere_free": self.hemisphere_free,
            "hemisphere": self.hemisphere.to_document(),
            "great_subsphere_free": self.great_subsphere_free,
            "subspace_mass": None if self.subspace_mass is None else {
                "status": self.subspace_mass.status.value,
                "entries": [entry.to_document() for entry in self.subspace_mass.entries],
            },
            "mass_balance": None if self.mass_balance is None else self.mass_balance.to_document(),
            "findings": [
                {"name": f.name, "status": f.status.value, "detail": f.detail,
                 "overridable": f.overridable}
                for f in self.findings
            ],
        }


def evaluate_preconditions(mu: DiscreteMeasure, q: float, Q: StarBody | None = None,
                           grid: SphereGrid | None = None,
                           band: float = tolerances.SLACK_REFUSAL,
                           balance_tol: float = tolerances.MASS_BALANCE,
                           **budget) -> PreconditionReport:

    """
    Evaluate the existence hypotheses for the regime of q:

      q < 0       μ not concentrated in a closed hemisphere
      q = 0       μ and Q even, μ not on a great subsphere, |μ| = Vol(Q)
      0 < q < n   μ and Q even, q-th subspace mass inequality
      q >= n      outside the proven range
    """

    n = mu.dim
    regime = regime_of(q, n)
    even = check_even(mu)
    report = PreconditionReport(
        q=q, regime=regime, even=even,
        hemisphere=hemisphere_concentrated(mu),
        great_subsphere_free=not great_subsphere_concentrated(mu),
        star_even=None if Q is None else Q.even)
    add = report.findings.append

    hemisphere = report.hemisphere.status
    if hemisphere is not HemisphereStatus.FREE:
        status = (CheckStatus.INDETERMINATE if hemisphere is HemisphereStatus.INDETERMINATE
                  else CheckStatus.FAIL)
        add(Finding("hemisphere", status,
                    f"atoms lie in a closed hemisphere (margin {report.hemisphere.margin:.3g})"))

    if regime is Regime.OUT_OF_RANGE:
        add(Finding("regime", CheckStatus.FAIL,
                    f"q = {q} >= n = {n} is outside the proven range", overridable=True))

    elif regime is Regime.LOGARITHMIC:
        if not even:
            add(Finding("even", CheckStatus.FAIL, "μ is not even"))
        if Q is not None and not Q.even:
            add(Finding("star_even", CheckStatus.FAIL, "Q is not origin-symmetric"))
        if not report.great_subsphere_free:
            add(Finding("great_subsphere", CheckStatus.FAIL, "μ is concentrated on a great subsphere"))
        if Q is not None and grid is not None:
            report.mass_balance = check_mass_balance(mu, Q, grid, balance_tol)
            if not report.mass_balance.passed:
                add(Finding("mass_balance", CheckStatus.FAIL,
                            f"|μ| = {report.mass_balance.total:.6g} but Vol(Q) = "
                            f"{report.mass_balance.vol_Q:.6g} (gap {report.mass_balance.gap:.3g})"))

    elif regime is Regime.SUBCRITICAL:
        if not even:
            add(Finding("even", CheckStatus.FAIL, "μ is not even", overridable=True))
        if Q is not None and not Q.even:
            add(Finding("star_even", CheckStatus.FAIL, "Q is not origin-symmetric", overridable=True))
        if even:
            try:
                report.subspace_mass = check_subspace_mass_inequality(mu, q, band, **budget)
            except EnumerationBudgetError as e:
                add(Finding("subspace_mass", CheckStatus.INDETERMINATE, str(e)))
                logger.warning("%s", e)
            else:
                worst = report.subspace_mass.worst
                if report.subspace_mass.status is not CheckStatus.PASS:
                    add(Finding("subspace_mass", report.subspace_mass.status,
                                f"dimension {worst.dimension}: fraction {worst.sup_fraction:.6g} vs "
                                f"threshold {worst.threshold:.6g}, witness atoms {list(worst.witness)}"))

    for finding in report.findings:
        logger.info("precondition %s: %s (%s)", finding.name, finding.status.value, finding.detail)
    return report
