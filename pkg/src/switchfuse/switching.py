"""Posterior computation, complementarity scoring and the per-unit
switching loop that picks one technique per unit of the configured model."""

from __future__ import annotations

from dataclasses import dataclass, field

from .calibration import (
    MATCH,
    MISMATCH,
    CalibrationStore,
    PairCalibration,
    TechniqueCalibration,
    likelihood,
)
from .descriptors import MatchScore, SimilarityVector, raw_match_score
from .errors import InvalidInputError, UndefinedEvidenceError


@dataclass(frozen=True)
class UnitConfig:
    """One unit: an ordered technique pool, first entry is the primary."""

    label: str
    techniques: tuple[str, ...]

    def __post_init__(self):
        if not (1 <= len(self.techniques) <= 8):
            raise InvalidInputError(
                f"unit {self.label!r} must hold 1..8 techniques"
            )
        if len(set(self.techniques)) != len(self.techniques):
            raise InvalidInputError(f"unit {self.label!r} repeats a technique")
        object.__setattr__(self, "techniques", tuple(self.techniques))


@dataclass(frozen=True)
class TripartiteConfig:
    """Ordered units of the switching model (three by default, 1..8 allowed)."""

    units: tuple[UnitConfig, ...]
    posterior_threshold: float = 0.5

    def __post_init__(self):
        if not (1 <= len(self.units) <= 8):
            raise InvalidInputError("configuration must hold 1..8 units")
        if not (0.0 < self.posterior_threshold < 1.0):
            raise InvalidInputError("posterior threshold must lie in (0, 1)")
        object.__setattr__(self, "units", tuple(self.units))

    def all_techniques(self) -> list[str]:
        """Distinct techniques in first-appearance order."""
        seen: list[str] = []
        for unit in self.units:
            for tid in unit.techniques:
                if tid not in seen:
                    seen.append(tid)
        return seen


@dataclass(frozen=True)
class ComplementarityScore:
    """Likelihood-ratio score ranking candidate techniques; positive but
    unbounded, used only for ordering."""

    primary_id: str
    candidate_id: str
    value: float


@dataclass(frozen=True)
class TraceStep:
    technique_id: str
    posterior: float
    complementarities: tuple[ComplementarityScore, ...] = ()


@dataclass(frozen=True)
class UnitDecision:
    unit_label: str
    selected_technique: str
    selected_posterior: float
    fallback_used: bool
    trace: tuple[TraceStep, ...]


@dataclass(frozen=True)
class SelectedTechniques:
    """One decision per unit plus every similarity vector computed on the way."""

    decisions: tuple[UnitDecision, ...]
    similarity_cache: dict[str, SimilarityVector]

    def selected_ids(self) -> list[str]:
        """Selected techniques in unit order; duplicates kept."""
        return [d.selected_technique for d in self.decisions]


def posterior_match(prior: float, lik_m: float, lik_mm: float) -> float:
    """Posterior probability of a correct match given the score evidence."""
    if not (0.0 < prior < 1.0):
        raise InvalidInputError("prior must lie strictly in (0, 1)")
    if lik_m < 0 or lik_mm < 0:
        raise InvalidInputError("likelihoods must be nonnegative")
    num = prior * lik_m
    den = num + (1.0 - prior) * lik_mm
    if den == 0.0:
        raise UndefinedEvidenceError("both likelihood terms are zero")
    return num / den


def complementarity(
    pair_ab: PairCalibration,
    self_calib: TechniqueCalibration,
    score: float,
) -> ComplementarityScore:
    """Ratio favouring candidate B when the current technique scores
    ``score``: own-match times B-match likelihood over the mismatch pair."""
    p_m_a = likelihood(self_calib.histogram, score, MATCH)
    p_mm_a = likelihood(self_calib.histogram, score, MISMATCH)
    p_m_b = likelihood(pair_ab.histogram, score, MATCH)
    p_mm_b = likelihood(pair_ab.histogram, score, MISMATCH)
    den = p_mm_a * p_mm_b
    if den == 0.0:
        raise UndefinedEvidenceError("zero mismatch likelihood product")
    return ComplementarityScore(
        primary_id=self_calib.technique_id,
        candidate_id=pair_ab.candidate_id,
        value=(p_m_a * p_m_b) / den,
    )


def technique_posterior(
    calib: TechniqueCalibration, score: float
) -> float:
    lm = likelihood(calib.histogram, score, MATCH)
    lmm = likelihood(calib.histogram, score, MISMATCH)
    return posterior_match(calib.prior_match, lm, lmm)


def select_technique(
    unit: UnitConfig,
    match_score_of,
    store: CalibrationStore,
    threshold: float = 0.5,
) -> UnitDecision:
    """Run the dynamic switching loop for one unit.

    ``match_score_of(technique_id)`` returns that technique's MatchScore for
    the current query.  Starting from the primary, a technique is accepted
    when its posterior strictly exceeds ``threshold``; otherwise the loop
    hops to the unvisited candidate with the highest complementarity from
    the current technique.  If the pool is exhausted the highest-posterior
    visited technique is selected with ``fallback_used`` set.  Ties break to
    the earlier position in the unit's configured order.
    """
    order = {tid: i for i, tid in enumerate(unit.techniques)}
    visited: set[str] = set()
    trace: list[TraceStep] = []
    current = unit.techniques[0]
    while True:
        visited.add(current)
        calib = store.technique(current)
        score = match_score_of(current).value
        post = technique_posterior(calib, score)
        if post > threshold:
            trace.append(TraceStep(current, post))
            return UnitDecision(
                unit_label=unit.label,
                selected_technique=current,
                selected_posterior=post,
                fallback_used=False,
                trace=tuple(trace),
            )
        remaining = [t for t in unit.techniques if t not in visited]
        comps = tuple(
            complementarity(store.pair(current, cand), calib, score)
            for cand in remaining
        )
        trace.append(TraceStep(current, post, comps))
        if not remaining:
            best = max(trace, key=lambda s: (s.posterior, -order[s.technique_id]))
            return UnitDecision(
                unit_label=unit.label,
                selected_technique=best.technique_id,
                selected_posterior=best.posterior,
                fallback_used=True,
                trace=tuple(trace),
            )
        best_comp = max(comps, key=lambda c: (c.value, -order[c.candidate_id]))
        current = best_comp.candidate_id


class SimilarityCache:
    """Insert-if-absent cache of per-query similarity vectors keyed by
    technique id; values for a given key are identical, so last write wins."""

    def __init__(self, similarity_fn):
        self._fn = similarity_fn
        self._data: dict[str, SimilarityVector] = {}

    def get(self, technique_id: str) -> SimilarityVector:
        cached = self._data.get(technique_id)
        if cached is None:
            cached = self._fn(technique_id)
            self._data[technique_id] = cached
        return cached

    def as_dict(self) -> dict[str, SimilarityVector]:
        return dict(self._data)


def run_tripartite(
    config: TripartiteConfig,
    similarity_fn,
    store: CalibrationStore,
) -> SelectedTechniques:
    """Evaluate every unit independently for one query.

    ``similarity_fn(technique_id)`` returns the query's SimilarityVector for
    that technique; it is invoked at most once per technique across all
    units via a shared cache.  Units selecting the same technique keep their
    duplicates in the output.
    """
    cache = SimilarityCache(similarity_fn)

    def match_score_of(tid: str) -> MatchScore:
        return raw_match_score(cache.get(tid))

    decisions = tuple(
        select_technique(unit, match_score_of, store, config.posterior_threshold)
        for unit in config.units
    )
    return SelectedTechniques(decisions=decisions, similarity_cache=cache.as_dict())
