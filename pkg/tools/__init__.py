from .orbits import NilpotentOrbit, Partition, induce_orbit, is_simple, partitions, richardson_orbit, standard_nilpotent
from .roots import LeviSubgroup, ParabolicSubgroup, levis_of, parabolics_of
from .richardson import adjacency, dual_parabolic, epsilon_count, orbit_levi, richardson_map, richardson_set, richardson_table
from .localfield import Place, conjugator_from_X, iwasawa, r_family, r_value, solve_in_N, u13_logdet
from .gmfam import GMFamily, OrthogonalFamily, gm_value, hull_indicator, hull_volume, splitting_terms
from .zeta import ZetaBackend, c_constant, maj_bound, parse_places, vol_levi, z_jet, zeta_star
from .orbital import (
    UnitFunctionSpec,
    arthur_j,
    coefficient_a,
    descent_check,
    development,
    euler_lattice_value,
    global_weighted_T,
    j_numeric_padic,
    j_rectangular,
    levi_factorisation,
    weight_at_point,
)
