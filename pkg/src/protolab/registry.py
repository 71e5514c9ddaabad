"""Named base matrices shipped with the package.

Each entry carries the reported threshold where one exists: BEC erasure
thresholds for the ``r*`` matrices, and for the ``awgn-*`` matrices the
reported Eb/N0 threshold together with the SNR column of the comparison
table (see :func:`protolab.de_bms.snr_db_from_ebn0`).
"""

from __future__ import annotations

from dataclasses import dataclass

from .proto_core import BaseMatrix, parse_base_matrix

EX_2X4 = """
1 1 1 2
1 1 1 1
"""

R34_3X12 = """
1 1 0 0 7 4 1 1 0 0 0 0
1 2 3 0 7 1 0 0 3 1 0 0
1 5 5 3 4 0 1 2 0 1 3 3
"""

R23_4X12 = """
1 1 1 5 3 1 0 2 3 1 1 1
0 1 0 6 0 0 0 2 0 1 1 1
0 0 2 6 0 0 1 1 0 1 0 0
2 0 1 2 0 1 2 4 0 4 1 1
"""

R12_4X8 = """
1 2 2 3 4 1 1 0
0 1 0 0 5 0 0 1
1 0 0 0 3 0 4 1
1 0 1 0 6 1 0 0
"""

R12_8X16 = """
1 2 0 0 1 0 0 4 0 0 0 0 0 0 0 1
0 1 0 0 0 1 0 0 2 2 1 0 0 0 1 1
0 3 1 2 1 0 0 0 4 0 0 3 2 2 0 3
0 5 0 0 0 0 1 1 0 0 1 0 0 1 0 0
1 3 1 1 1 2 0 0 1 0 0 0 0 0 0 0
1 5 0 0 0 3 1 0 0 0 1 0 0 0 0 0
0 4 0 0 0 0 0 1 1 0 0 0 0 0 0 1
0 5 0 0 0 0 0 0 0 1 0 0 1 0 1 0
"""

R12_16X32 = """
3 1 0 0 0 0 0 0 0 0 0 0 0 0 0 2 1 0 1 0 0 0 0 0 0 1 0 0 0 0 0 0
4 0 2 0 0 0 0 0 0 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0
1 0 0 0 1 1 1 1 0 0 0 0 1 1 0 1 0 0 1 0 0 0 0 0 1 0 0 0 0 1 2 0
4 0 0 0 1 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 1 0
2 1 1 1 1 0 0 0 0 0 0 0 0 1 0 0 0 2 0 0 0 0 0 0 0 1 0 0 0 0 0 0
2 0 0 0 0 1 1 2 1 0 0 0 1 0 0 0 0 0 1 1 0 0 0 0 0 0 0 1 1 1 0 0
4 2 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 1 0 0 0 0 0
4 1 1 1 0 0 0 0 0 0 2 0 0 1 0 0 0 0 0 0 0 0 0 1 0 0 0 0 0 0 0 0
4 0 1 0 1 0 1 0 0 0 0 0 0 0 0 1 1 0 0 0 0 1 1 0 0 0 0 0 1 0 0 0
4 0 0 0 1 0 0 2 0 1 0 0 1 0 0 0 0 0 0 0 0 0 0 1 0 2 0 0 0 0 0 1
0 0 0 0 0 0 0 1 0 0 0 0 0 3 0 0 0 0 1 0 1 0 0 0 0 1 0 0 0 0 1 0
2 0 0 0 0 1 0 0 0 0 0 1 2 1 1 0 0 0 0 0 0 0 0 0 0 0 0 1 0 1 0 0
1 0 1 0 1 1 0 1 1 0 0 0 2 0 2 0 0 0 0 1 1 0 1 0 1 1 0 0 1 0 3 1
4 0 0 0 0 0 0 0 0 0 0 1 0 2 0 0 0 0 2 0 0 0 0 0 0 0 0 0 0 0 0 0
4 0 1 0 0 0 0 0 0 0 0 1 1 1 0 0 0 1 1 0 0 0 0 0 0 0 0 0 0 1 0 0
3 0 2 0 0 0 0 0 0 0 1 0 0 1 0 2 0 0 0 0 0 1 0 0 0 0 1 0 0 0 0 0
"""

AWGN_R23_4X12 = """
2 0 0 1 7 0 1 0 0 0 1 1
0 0 1 1 7 0 0 1 2 0 0 1
4 1 1 1 5 0 1 0 0 0 1 3
5 1 1 6 1 3 1 1 1 3 0 1
"""

AWGN_R34_3X12 = """
0 0 7 0 2 1 0 1 0 2 3 0
2 3 7 2 2 3 1 3 2 3 5 3
1 0 8 1 0 2 1 1 1 4 0 0
"""

AWGN_R12_16X32 = """
0 1 0 0 1 0 2 1 0 0 0 0 2 0 2 0 1 1 0 2 1 0 0 0 2 0 2 0 0 0 0 0
0 0 0 1 0 0 0 0 0 0 0 0 0 0 0 1 0 4 0 1 0 0 0 0 0 1 0 0 0 0 0 0
0 0 1 2 1 0 0 0 2 0 0 0 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0
0 0 0 1 1 0 2 0 1 0 0 0 1 0 1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 0 2 2
1 0 1 0 0 0 0 0 0 0 1 0 1 0 0 0 1 3 0 1 1 0 0 0 0 0 0 0 0 0 0 0
0 0 1 1 0 0 0 0 1 2 0 0 0 0 0 0 0 3 1 0 0 1 0 0 0 1 0 0 1 1 1 0
1 0 0 0 0 0 0 0 0 0 0 3 1 0 0 0 0 1 0 0 0 2 1 0 0 1 0 0 0 0 0 0
0 0 2 0 0 0 0 1 0 0 0 0 0 0 0 0 1 4 0 0 0 0 0 0 0 0 0 0 0 0 0 0
0 0 2 0 0 0 0 1 0 1 1 0 0 1 0 0 2 0 0 0 0 0 0 1 0 0 1 2 0 0 2 1
0 0 2 1 0 1 0 1 0 0 0 0 0 1 0 1 0 2 0 0 0 0 0 0 0 0 0 0 0 0 0 0
0 0 1 1 0 0 2 0 0 0 0 0 0 0 0 0 0 4 0 0 0 0 0 0 0 0 0 0 0 0 0 1
0 0 0 0 0 0 0 1 0 0 0 0 1 0 0 0 0 4 0 1 0 0 0 2 0 0 0 0 0 0 0 1
0 0 0 0 1 0 0 0 1 0 0 0 0 0 1 0 0 1 2 1 0 0 1 0 1 0 0 0 2 1 0 0
0 0 2 0 0 1 2 0 0 0 0 0 0 0 2 0 0 1 0 0 0 0 0 1 0 0 0 0 0 0 0 0
1 0 1 2 2 0 0 0 0 0 0 0 0 0 0 1 0 4 0 0 0 0 0 0 0 0 0 0 0 0 0 0
0 1 0 0 0 0 0 1 1 0 0 0 1 0 0 0 0 1 2 0 0 0 0 0 0 0 0 1 0 0 0 2
"""



@dataclass(frozen=True)
class RegistryEntry:
    name: str
    text: str
    description: str
    bec_threshold: float | None = None
    ebn0_threshold_db: float | None = None
    snr_threshold_db: float | None = None
    lift_q: int | None = None
    blocklength: int | None = None

    @property
    def matrix(self) -> BaseMatrix:
        return parse_base_matrix(self.text)


REGISTRY: dict[str, RegistryEntry] = {
    e.name: e
    for e in [
        RegistryEntry("ex-2x4", EX_2X4, "small example with a degree-2 cycle"),
        RegistryEntry("r34-3x12", R34_3X12, "BEC-optimized rate-3/4", 0.238, lift_q=61, blocklength=44652),
        RegistryEntry("r23-4x12", R23_4X12, "BEC-optimized rate-2/3", 0.32, lift_q=61, blocklength=44652),
        RegistryEntry("r12-4x8", R12_4X8, "BEC-optimized rate-1/2", 0.479),
        RegistryEntry("r12-8x16", R12_8X16, "BEC-optimized rate-1/2", 0.486),
        # also quoted elsewhere as 0.4952
        RegistryEntry("r12-16x32", R12_16X32, "BEC-optimized rate-1/2", 0.4953, lift_q=173, blocklength=957728),
        RegistryEntry(
            "awgn-r23-4x12", AWGN_R23_4X12, "BIAWGN-optimized rate-2/3",
            ebn0_threshold_db=1.18, snr_threshold_db=2.429, lift_q=67, blocklength=53868,
        ),
        RegistryEntry(
            "awgn-r34-3x12", AWGN_R34_3X12, "BIAWGN-optimized rate-3/4",
            ebn0_threshold_db=1.79, snr_threshold_db=3.551, lift_q=71, blocklength=60492,
        ),
        RegistryEntry(
            "awgn-r12-16x32", AWGN_R12_16X32, "BIAWGN-optimized rate-1/2",
            ebn0_threshold_db=0.3, snr_threshold_db=0.3, lift_q=173, blocklength=957728,
        ),
    ]
}


def builtin(name: str) -> BaseMatrix:
    """Return the named built-in base matrix."""
    try:
        return REGISTRY[name].matrix
    except KeyError:
        raise KeyError(f"unknown built-in protograph {name!r}; known: {', '.join(REGISTRY)}") from None
