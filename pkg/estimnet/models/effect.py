"""
Effect Model
Model effects (configurations) and the ordered model specification
"""
from typing import List, Optional
import enum

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from estimnet.exceptions import ConfigurationError
from estimnet.models.attributes import AttributeKind, AttributeSet

DEFAULT_LAMBDA = 2.0


class EffectKind(str, enum.Enum):
    """Effect names as accepted in config files"""
    ARC = "Arc"
    RECIPROCITY = "Reciprocity"
    ISOLATES = "Isolates"
    AINS = "AinSpread"
    AOUTS = "AoutSpread"
    A2P_T = "AltTwoPathT"
    A2P_D = "AltTwoPathD"
    A2P_U = "AltTwoPathU"
    A2P_TD = "AltTwoPathTD"
    AT_T = "AltKTrianglesT"
    AT_C = "AltKTrianglesC"
    AKT_D = "AltKTrianglesD"
    AKT_U = "AltKTrianglesU"
    SENDER = "Sender"
    RECEIVER = "Receiver"
    INTERACTION = "Interaction"
    MATCHING = "Matching"
    MISMATCHING = "Mismatching"
    MATCHING_RECIPROCITY = "MatchingReciprocity"
    MISMATCHING_RECIPROCITY = "MismatchingReciprocity"
    CONTINUOUS_SENDER = "ContinuousSender"
    CONTINUOUS_RECEIVER = "ContinuousReceiver"
    DIFF = "Diff"

    @property
    def attribute_kind(self) -> Optional[AttributeKind]:
        return _ATTRIBUTE_KINDS.get(self)

    @property
    def is_alternating(self) -> bool:
        return self in _ALTERNATING

    @classmethod
    def parse(cls, name: str) -> "EffectKind":
        for kind in cls:
            if kind.value.lower() == name.strip().lower():
                return kind
        raise ConfigurationError(f"unknown effect '{name}'")


_ATTRIBUTE_KINDS = {
    EffectKind.SENDER: AttributeKind.BINARY,
    EffectKind.RECEIVER: AttributeKind.BINARY,
    EffectKind.INTERACTION: AttributeKind.BINARY,
    EffectKind.MATCHING: AttributeKind.CATEGORICAL,
    EffectKind.MISMATCHING: AttributeKind.CATEGORICAL,
    EffectKind.MATCHING_RECIPROCITY: AttributeKind.CATEGORICAL,
    EffectKind.MISMATCHING_RECIPROCITY: AttributeKind.CATEGORICAL,
    EffectKind.CONTINUOUS_SENDER: AttributeKind.CONTINUOUS,
    EffectKind.CONTINUOUS_RECEIVER: AttributeKind.CONTINUOUS,
    EffectKind.DIFF: AttributeKind.CONTINUOUS,
}

_ALTERNATING = frozenset({
    EffectKind.AINS, EffectKind.AOUTS,
    EffectKind.A2P_T, EffectKind.A2P_D, EffectKind.A2P_U, EffectKind.A2P_TD,
    EffectKind.AT_T, EffectKind.AT_C, EffectKind.AKT_D, EffectKind.AKT_U,
})


class Effect(BaseModel):
    """One model effect, optionally bound to an attribute column."""
    model_config = ConfigDict(frozen=True)

    kind: EffectKind
    attribute: Optional[str] = None
    lam: float = DEFAULT_LAMBDA

    @field_validator("lam")
    @classmethod
    def lambda_at_least_one(cls, v: float) -> float:
        if not v >= 1.0:
            raise ValueError(f"lambda must be >= 1, got {v}")
        return v

    @model_validator(mode="after")
    def attribute_matches_kind(self) -> "Effect":
        needs_attribute = self.kind.attribute_kind is not None
        if needs_attribute and not self.attribute:
            raise ValueError(f"effect {self.kind.value} needs an attribute column")
        if not needs_attribute and self.attribute:
            raise ValueError(f"effect {self.kind.value} takes no attribute column")
        return self

    @property
    def label(self) -> str:
        if self.attribute:
            return f"{self.kind.value}({self.attribute})"
        if self.kind.is_alternating and self.lam != DEFAULT_LAMBDA:
            return f"{self.kind.value}({self.lam:g})"
        return self.kind.value

    def __str__(self):
        return self.label


class ModelSpec(BaseModel):
    """
    Ordered list of effects; defines the layout of the theta vector.
    """
    model_config = ConfigDict(frozen=True)

    effects: List[Effect]

    @model_validator(mode="after")
    def no_duplicates(self) -> "ModelSpec":
        labels = [e.label for e in self.effects]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate effects in model: {labels}")
        return self

    @classmethod
    def of(cls, *specs) -> "ModelSpec":
        """Build from EffectKind values or (kind, attribute) / Effect items."""
        effects = []
        for spec in specs:
            if isinstance(spec, Effect):
                effects.append(spec)
            elif isinstance(spec, tuple):
                effects.append(Effect(kind=spec[0], attribute=spec[1]))
            else:
                effects.append(Effect(kind=spec))
        return cls(effects=effects)

    def __len__(self) -> int:
        return len(self.effects)

    def __iter__(self):
        return iter(self.effects)

    @property
    def labels(self) -> List[str]:
        return [e.label for e in self.effects]

    def has(self, kind: EffectKind) -> bool:
        return any(e.kind == kind for e in self.effects)

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    def without(self, kind: EffectKind) -> "ModelSpec":
        return ModelSpec(effects=[e for e in self.effects if e.kind != kind])

    def validate_against(self, attrs: AttributeSet) -> None:
        """Every attribute-bound effect must reference a column of the right kind."""
        for effect in self.effects:
            kind = effect.kind.attribute_kind
            if kind is not None and not attrs.has_column(kind, effect.attribute):
                raise ConfigurationError(
                    f"effect {effect.label} needs {kind.value} attribute '{effect.attribute}'"
                )
