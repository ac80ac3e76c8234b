from .fixture import FixtureRulebook
from .adversarial import AdversarialRulebook
from .fuzz import FuzzSegmentationRulebook

__all__ = ["AdversarialRulebook", "FixtureRulebook", "FuzzSegmentationRulebook"]
