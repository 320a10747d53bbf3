"""The three scored Tajweed rules and their fixed output order.

Every other part of the system (label columns, model outputs, metrics
columns, service responses) indexes rules by the order defined here.
Changing this order is a breaking, versioned API change.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Rule:
    key: str
    name: str
    description: str


RULES: tuple[Rule, ...] = (
    Rule(
        key="separate_stretching",
        name="Al Mad (separate stretching)",
        description=(
            "Elongation of a vowel sound carried across a word boundary; "
            "the stretch must be held for the prescribed duration."
        ),
    ),
    Rule(
        key="tight_noon",
        name="Ghunnah (tight noon)",
        description=(
            "Nasalization applied to doubled noon or meem sounds; the nasal "
            "tone must be sustained, not clipped."
        ),
    ),
    Rule(
        key="hide",
        name="Ikhfaa (hide)",
        description=(
            "Partial nasal concealment of noon before certain consonants, "
            "between full pronunciation and full merging."
        ),
    ),
)

RULE_KEYS: tuple[str, ...] = tuple(r.key for r in RULES)

# metrics.csv accuracy column names, in rule order
METRIC_COLUMNS: tuple[str, ...] = ("acc_mad", "acc_ghunnah", "acc_ikhfaa")

N_RULES = len(RULES)
