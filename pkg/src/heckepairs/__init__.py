"""Exact computations with Hecke pairs of semidirect products.

The package works with pairs (G, H) = (N x| Q, M x| R): double-coset
enumeration and the associated *-algebra, stabilizer-index verification,
finite stages of the completion of H, and the concrete matrix, quadratic
and Heisenberg families, all over exact rational arithmetic.
"""

from .arith import (
    INFINITE_VALUATION,
    Lattice,
    Mat2,
    QuadInt,
    ResidueRing,
    hnf,
    lattice_index,
    lattice_intersect,
    lattice_sum,
    quad_pow_mod,
    smith_invariants,
    transform_lattice,
    val_p,
)
from .cosets import (
    DoubleCoset,
    DoubleCosetCache,
    HeckeElement,
    canonical_key,
    convolve,
    delta,
    double_coset,
    involution,
    l_of,
    left_coset_reps,
)
from .families import (
    HeisPoint,
    OmegaVerdict,
    QuadUnitData,
    TriangularSplit,
    fundamental_unit,
    heis_conj_meet_index,
    heis_orbit,
    omega_membership,
    quad_unit_data,
    slpm_surjectivity,
    split_global,
    split_padic,
    unit_image_gap,
    unit_order_mod,
)
from .grouppair import (
    GElem,
    PairDescriptor,
    ResidueSubgroup,
    StabDescriptor,
    downward_directed_report,
    hecke_indices_report,
    index_m_cap_conj,
    index_r_cap_conj,
    index_r_coset_stab,
    m_cap_conj,
    reduced_stage_report,
    stabilizer_identities_report,
)
from .tower import (
    ConnectingMap,
    CosetFamily,
    EnvelopeLattice,
    TowerStage,
    build_stage,
    core_lattice,
    core_residue_subgroup,
    make_coset_family,
    make_envelope,
    stage_level,
    verify_stage_invariants,
)

__version__ = "0.1.0"
