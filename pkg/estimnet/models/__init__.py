from estimnet.models.attributes import AttributeKind, AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.effect import Effect, EffectKind, ModelSpec

__all__ = ["AttributeKind", "AttributeSet", "Digraph", "Effect", "EffectKind", "ModelSpec"]
