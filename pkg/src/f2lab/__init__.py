"""f2lab: exact tools for multilinear polynomials over F2 and structured randomness sources.

Modules:
    f2poly      polynomial arithmetic, truth tables, bias/correlation, derivatives
    sources     d-local maps, bit-fixing sources, affine subspaces, exact distributions
    serialize   lossless JSON descriptions of sources
    polysys     polynomial systems: solving, counting bounds, light solutions, rank checks
    subspace    monochromatic low-column-weight subspace growth and verification
    reduction   exact decomposition of local sources into bit-fixing mixtures, debiasing
    experiments family censuses, extractor searches, surveys, evaluation codes
    barrier     clique encodings, pair-sum uniqueness, subspace-evasiveness scans
    cli         the `f2lab` command-line interface
    config      resource caps shared by every enumeration
"""

from __future__ import annotations

__version__ = "0.1.0"
