"""
GICS codes and class label sets.

Sectors are the only level whose names are enumerated; industry groups,
industries and sub-industries exist as codes only.
"""
import json
import logging
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from ..errors import InvalidCodeCharacter, InvalidCodeLength, IoError, LabelSetError, UnknownLabel

logger = logging.getLogger(__name__)


class GicsLevel(str, Enum):
    SECTOR = "Sector"
    INDUSTRY_GROUP = "IndustryGroup"
    INDUSTRY = "Industry"
    SUB_INDUSTRY = "SubIndustry"


LEVEL_BY_LENGTH = {
    2: GicsLevel.SECTOR,
    4: GicsLevel.INDUSTRY_GROUP,
    6: GicsLevel.INDUSTRY,
    8: GicsLevel.SUB_INDUSTRY,
}

# Category counts per level
LEVEL_SIZES = {
    GicsLevel.SECTOR: 11,
    GicsLevel.INDUSTRY_GROUP: 24,
    GicsLevel.INDUSTRY: 64,
    GicsLevel.SUB_INDUSTRY: 139,
}


class GicsCode(BaseModel):
    model_config = ConfigDict(frozen=True)

    digits: str
    level: GicsLevel

    @model_validator(mode="after")
    def _check_level(self):
        if LEVEL_BY_LENGTH.get(len(self.digits)) != self.level:
            raise ValueError(f"level {self.level.value} does not match {len(self.digits)}-digit code")
        return self

    def parent(self) -> Optional["GicsCode"]:
        """Code one level up, None for sectors"""
        if len(self.digits) == 2:
            return None
        return parse_gics_code(self.digits[:-2])

    def ancestors(self) -> List["GicsCode"]:
        """All codes from sector down to (and including) this one"""
        return [parse_gics_code(self.digits[:n]) for n in range(2, len(self.digits) + 1, 2)]

    @property
    def sector(self) -> "GicsCode":
        return parse_gics_code(self.digits[:2])

    def __str__(self) -> str:
        return self.digits


def parse_gics_code(text: str) -> GicsCode:
    digits = text.strip()
    if len(digits) not in LEVEL_BY_LENGTH:
        raise InvalidCodeLength(digits)
    # str.isdigit() accepts superscripts and other non-decimal digits
    if not all(ch in "0123456789" for ch in digits):
        raise InvalidCodeCharacter(digits)
    return GicsCode(digits=digits, level=LEVEL_BY_LENGTH[len(digits)])


class LabelVariant(str, Enum):
    ORIGINAL = "Original"
    ENRICHED = "Enriched"
    CUSTOM = "Custom"


class ClassLabel(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    gics_name: str
    display_name: str

    @field_validator("gics_name", "display_name")
    @classmethod
    def _non_empty(cls, value: str) -> str:
        if not value or not value.strip():
            raise ValueError("label names must be non-empty")
        return value


class LabelSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    variant: LabelVariant
    labels: Tuple[ClassLabel, ...]

    @model_validator(mode="after")
    def _check_invariants(self):
        for position, label in enumerate(self.labels):
            if label.index != position:
                raise ValueError(f"label '{label.gics_name}' has index {label.index}, expected {position}")
        for field in ("gics_name", "display_name"):
            names = [getattr(label, field) for label in self.labels]
            if len(set(names)) != len(names):
                raise ValueError(f"{field} values must be pairwise distinct")
        return self

    @classmethod
    def from_pairs(cls, variant: LabelVariant, pairs: Sequence[Tuple[str, str]]) -> "LabelSet":
        """Build a label set from ordered (gics_name, display_name) pairs"""
        try:
            return cls(
                variant=variant,
                labels=tuple(
                    ClassLabel(index=i, gics_name=gics_name, display_name=display_name)
                    for i, (gics_name, display_name) in enumerate(pairs)
                ),
            )
        except ValueError as e:
            raise LabelSetError(str(e)) from e

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def gics_names(self) -> List[str]:
        return [label.gics_name for label in self.labels]

    @property
    def display_names(self) -> List[str]:
        return [label.display_name for label in self.labels]

    def by_gics_name(self, gics_name: str) -> ClassLabel:
        for label in self.labels:
            if label.gics_name == gics_name:
                return label
        raise UnknownLabel(gics_name)

    def index_of(self, gics_name: str) -> int:
        return self.by_gics_name(gics_name).index

    def permuted(self, order: Sequence[int]) -> "LabelSet":
        """New label set whose i-th label is the current label at order[i]"""
        if sorted(order) != list(range(len(self.labels))):
            raise LabelSetError(f"{list(order)} is not a permutation of {len(self.labels)} labels")
        pairs = [(self.labels[i].gics_name, self.labels[i].display_name) for i in order]
        return LabelSet.from_pairs(self.variant, pairs)


# Sector names in table row order: (GICS name, name after TF-IDF enrichment)
SECTOR_NAMES: Tuple[Tuple[str, str], ...] = (
    ("Energy", "Oil, Natural Gas, Consumable Fuels and Petroleum"),
    ("Materials", "Raw Materials, Mining, Minerals and Metals (Gold, Silver and Copper)"),
    ("Industrials", "Industrials and Transportation"),
    ("Consumer Discretionary", "Non-Essential Goods, Retail and E-Commerce"),
    ("Consumer Staples", "Food, Beverages and Household Products"),
    ("Health Care", "Health Care"),
    ("Financials", "Banking and Lending"),
    ("Information Technology", "Software, Technology and Systems"),
    ("Communication Services", "Communications, Telecommunications, Networking, Media and Entertainment"),
    ("Utilities", "Utilities, Energy Distribution and Renewable Energy"),
    ("Real Estate", "Real Estate Properties"),
)

# Companies per sector in the reference extract, unassigned entries dropped
SECTOR_DISTRIBUTION: Dict[str, int] = {
    "Energy": 2822,
    "Materials": 3833,
    "Industrials": 3934,
    "Consumer Discretionary": 4662,
    "Consumer Staples": 1433,
    "Health Care": 4565,
    "Financials": 5363,
    "Information Technology": 5192,
    "Communication Services": 1285,
    "Utilities": 740,
    "Real Estate": 509,
}


@lru_cache(maxsize=None)
def builtin_label_set(variant: LabelVariant) -> LabelSet:
    variant = LabelVariant(variant)
    if variant == LabelVariant.ORIGINAL:
        pairs = [(gics_name, gics_name) for gics_name, _ in SECTOR_NAMES]
    elif variant == LabelVariant.ENRICHED:
        pairs = list(SECTOR_NAMES)
    else:
        raise LabelSetError("Custom label sets are loaded from file, not built in")
    return LabelSet.from_pairs(variant, pairs)


def load_label_set(path: Union[str, Path]) -> LabelSet:
    """Load a Custom label set: JSON array of {"gics_name", "display_name"} objects"""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise IoError(path, str(e)) from e
    except json.JSONDecodeError as e:
        raise LabelSetError(f"{path} is not valid JSON: {e}") from e

    if not isinstance(data, list):
        raise LabelSetError(f"{path} must contain a JSON array")
    pairs = []
    for position, entry in enumerate(data):
        if not isinstance(entry, dict) or not isinstance(entry.get("gics_name"), str) \
                or not isinstance(entry.get("display_name"), str):
            raise LabelSetError(f"{path}: entry {position} needs string gics_name and display_name")
        pairs.append((entry["gics_name"], entry["display_name"]))

    label_set = LabelSet.from_pairs(LabelVariant.CUSTOM, pairs)
    logger.info(f"Loaded custom label set with {len(label_set)} labels from {path}")
    return label_set


def save_label_set(label_set: LabelSet, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = [{"gics_name": label.gics_name, "display_name": label.display_name} for label in label_set.labels]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write("\n")


def resolve_label_set(choice: str) -> LabelSet:
    """Map 'original', 'enriched' or a file path to a label set"""
    lowered = choice.strip().lower()
    if lowered == "original":
        return builtin_label_set(LabelVariant.ORIGINAL)
    if lowered == "enriched":
        return builtin_label_set(LabelVariant.ENRICHED)
    return load_label_set(choice)
