"""Lower bound on the CSL rate from the requirement that vision is classical.

A few photons at the threshold of vision displace molecules in the rod; each
displacement stage contributes n^2 N to the cluster rate. The bound is the
rate at which the total reaches the collapse criterion within the reaction
time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from collapsim.errors import DomainError, StructuralError

COMMON = None  # variant tag for stages shared by all variants


@dataclass(frozen=True)
class StageEstimate:
    label: str
    n: float  # nucleons per cluster
    N: float  # number of clusters
    variant: str | None = COMMON

    def __post_init__(self):
        if not (math.isfinite(self.n) and self.n > 0):
            raise DomainError(f"stage {self.label!r}: n must be positive")
        if not self.N >= 1:
            raise DomainError(f"stage {self.label!r}: N must be >= 1")


@dataclass(frozen=True)
class PerceptScenario:
    stages: tuple
    photons: float = 6
    cells: float = 1
    reaction_time: float = 0.1  # s
    collapse_criterion: float = 100.0  # target Gamma t
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise StructuralError("scenario has no stages")
        if self.photons < 1 or self.cells < 1:
            raise DomainError("photons and cells must be >= 1")
        if not (self.reaction_time > 0 and self.collapse_criterion > 0):
            raise DomainError("reaction_time and criterion must be positive")

    @property
    def variants(self) -> tuple:
        """Named alternatives; a scenario without tagged stages has one, 'default'."""
        tags = []
        for s in self.stages:
            if s.variant is not None and s.variant not in tags:
                tags.append(s.variant)
        return tuple(tags) or ("default",)

    def stages_for(self, variant: str) -> tuple:
        return tuple(s for s in self.stages if s.variant in (COMMON, variant))

    def replace(self, **changes) -> PerceptScenario:
        fields = dict(
            stages=self.stages,
            photons=self.photons,
            cells=self.cells,
            reaction_time=self.reaction_time,
            collapse_criterion=self.collapse_criterion,
            constants=self.constants,
        )
        fields.update(changes)
        return PerceptScenario(**fields)


def _count(value, constants):
    """A number, or a list of numbers and constant names to multiply."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, list) and value:
        product = 1.0
        for factor in value:
            if isinstance(factor, str):
                if factor not in constants:
                    raise StructuralError(f"unknown scenario constant {factor!r}")
                factor = constants[factor]
            product *= float(factor)
        return product
    raise StructuralError(f"bad count {value!r}")


def scenario_from_dict(data: dict) -> PerceptScenario:
    try:
        constants = data.get("constants", {})
        stages = [
            StageEstimate(
                s["label"], _count(s["n"], constants), _count(s["N"], constants), s.get("variant")
            )
            for s in data["stages"]
        ]
        return PerceptScenario(
            stages=stages,
            photons=data.get("photons", 6),
            cells=data.get("cells", 1),
            reaction_time=data.get("reaction_time_s", 0.1),
            collapse_criterion=data.get("criterion", 100.0),
            constants=constants,
        )
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"malformed scenario: {exc}") from None


def load_scenario(source="default") -> PerceptScenario:
    """Load a scenario JSON file; ``"default"`` is the bundled rod scenario."""
    if source == "default":
        text = resources.files("collapsim.data").joinpath("default_scenario.json").read_text()
    else:
        text = Path(source).read_text()
    return scenario_from_dict(json.loads(text))


def stage_contribution(s: StageEstimate) -> float:
    return s.n**2 * s.N


@dataclass(frozen=True)
class VariantBound:
    variant: str
    per_photon: float  # sum of n^2 N over stages
    total: float  # times photons and cells
    lambda_bound: float  # s^-1
    band: tuple  # one order of magnitude either way on the criterion


@dataclass(frozen=True)
class LambdaBound:
    variants: tuple

    @property
    def interval(self) -> tuple:
        values = [v.lambda_bound for v in self.variants]
        return min(values), max(values)

    def __getitem__(self, variant) -> VariantBound:
        for v in self.variants:
            if v.variant == variant:
                return v
        raise KeyError(variant)


def lambda_lower_bound(sc: PerceptScenario) -> LambdaBound:
    """lambda such that lambda * photons * cells * sum(n^2 N) * t = criterion."""
    out = []
    for variant in sc.variants:
        stages = sc.stages_for(variant)
        if not stages:
            raise StructuralError(f"variant {variant!r} has no stages")
        per_photon = math.fsum(stage_contribution(s) for s in stages)
        total = sc.photons * sc.cells * per_photon
        lam = sc.collapse_criterion / (sc.reaction_time * total)
        out.append(VariantBound(variant, per_photon, total, lam, (lam / 10.0, lam * 10.0)))
    return LambdaBound(tuple(out))


def threshold_particle_count(lambda_csl: float, t: float, criterion: float = 100.0) -> int:
    """Smallest single-cluster size n with lambda n^2 t >= criterion."""
    if not (lambda_csl > 0 and t > 0 and criterion > 0):
        raise DomainError("lambda, t and criterion must be positive")
    n = math.ceil(math.sqrt(criterion / (lambda_csl * t)))
    while lambda_csl * (n - 1) ** 2 * t >= criterion and n > 1:
        n -= 1
    while lambda_csl * n**2 * t < criterion:
        n += 1
    return n
