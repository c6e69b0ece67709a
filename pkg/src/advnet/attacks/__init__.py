"""White-box evasion attacks: the MI-guided sparse L1 attack plus FGSM, BIM and JSMA."""

from advnet.attacks.gradient import bim, fgsm, jsma, saliency
from advnet.attacks.mi import (
    ClassProfile,
    class_profile,
    discretize,
    mi_scores_array,
    mutual_information_scores,
    plugin_mi,
    select_discriminant,
)
from advnet.attacks.mi_l1 import build_profile, craft_mi_l1
from advnet.attacks.runner import craft_examples, read_examples, rescore, success_rate, write_examples
from advnet.attacks.spec import (
    AdversarialExample,
    AttackKind,
    AttackSpec,
    Knowledge,
    Phase,
    Specificity,
    UnsupportedAttack,
    budget_violations,
    fit_to_budget,
)

__all__ = [
    "bim", "fgsm", "jsma", "saliency", "ClassProfile", "class_profile", "discretize",
    "mi_scores_array", "mutual_information_scores", "plugin_mi", "select_discriminant",
    "build_profile", "craft_mi_l1", "craft_examples", "read_examples", "rescore",
    "success_rate", "write_examples", "AdversarialExample", "AttackKind", "AttackSpec",
    "Knowledge", "Phase", "Specificity", "UnsupportedAttack", "budget_violations", "fit_to_budget",
]
