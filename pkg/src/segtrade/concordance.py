"""Industry classification concordances.

Merchandise trade arrives under ISIC division codes and is mapped through
NACE chapters onto the national employment-survey activity codes; trade in
services arrives under EBOPS letter codes (as used by the BaTiS database)
and maps directly. Both tables are exact lookups: a code outside the
documented ranges is an error, never a guess.
"""

from __future__ import annotations

from enum import Enum

from .errors import UnmappedCodeError


class Concordance(str, Enum):
    ISIC_TO_ENPE = "isic_to_enpe"
    EBOPS_TO_ENPE = "ebops_to_enpe"


# (isic division low, isic division high, NACE chapter, survey activity code)
ISIC_TO_ENPE_RANGES = (
    (1, 3, "A", 0),
    (5, 9, "B", 65),
    (10, 12, "CA", 10),
    (13, 15, "CB", 50),
    (16, 19, "C", 60),
    (20, 20, "CE", 40),
    (21, 22, "C", 60),
    (23, 23, "CG", 20),
    (24, 25, "C", 60),
    (26, 26, "CI", 30),
    (27, 27, "CJ", 30),
    (28, 28, "CK", 30),
    (29, 33, "C", 60),
    (35, 35, "D", 67),
    (36, 39, "E", 68),
    (41, 43, "F", 69),
    (45, 47, "G", 72),
    (49, 53, "H", 76),
    (55, 56, "I", 79),
    (58, 63, "J", 76),
    (64, 66, "K", 82),
    (68, 68, "L", 85),
    (72, 75, "M", 85),
    (77, 82, "N", 85),
    (84, 84, "O", 93),
    (85, 85, "P", 93),
    (86, 88, "Q", 89),
    (90, 93, "R", 89),
    (94, 96, "S", 89),
    (97, 98, "T", 99),
    (99, 99, "U", 98),
)

# EBOPS letter code -> (BaTiS numeric id, survey activity code)
EBOPS_TO_ENPE = {
    "SC": (205, 76),
    "SD": (236, 79),
    "SE": (249, 69),
    "SF": (253, 82),
    "SG": (260, 82),
    "SH": (262, 76),
    "SJ": (268, 85),
    "SK": (287, 89),
    "SL": (291, 93),
}


def isic_to_nace(division: int) -> str:
    """NACE chapter for an ISIC division."""
    for lo, hi, nace, _ in ISIC_TO_ENPE_RANGES:
        if lo <= division <= hi:
            return nace
    raise UnmappedCodeError(_nearest_isic_message(division))


def _nearest_isic_message(division: int) -> str:
    nearest = min(ISIC_TO_ENPE_RANGES,
                  key=lambda row: min(abs(division - row[0]), abs(division - row[1])))
    span = f"{nearest[0]}" if nearest[0] == nearest[1] else f"{nearest[0]}-{nearest[1]}"
    return (f"ISIC division {division} is not covered; nearest documented "
            f"range is {span} (NACE {nearest[2]})")


def map_code(code, concordance: Concordance) -> int:
    """Map a source classification code to a survey activity code.

    ISIC divisions are integers (or digit strings); EBOPS codes are the
    two-letter BaTiS identifiers.
    """
    concordance = Concordance(concordance)
    if concordance is Concordance.ISIC_TO_ENPE:
        try:
            division = int(code)
        except (TypeError, ValueError):
            raise UnmappedCodeError(f"ISIC division must be an integer, got {code!r}")
        for lo, hi, _, target in ISIC_TO_ENPE_RANGES:
            if lo <= division <= hi:
                return target
        raise UnmappedCodeError(_nearest_isic_message(division))
    key = str(code).upper()
    if key not in EBOPS_TO_ENPE:
        known = ", ".join(sorted(EBOPS_TO_ENPE))
        raise UnmappedCodeError(f"EBOPS code {code!r} is not covered; known codes: {known}")
    return EBOPS_TO_ENPE[key][1]
