from .dyadic import (
    SpaceTimeField,
    airy_l6_ratio,
    check_linear_fs_bound,
    chi,
    eta,
    eta0,
    free_evolution_field,
    fs_norm,
    ns_norm,
    project_Pk,
    psi,
    xk_block_norm,
    xk_profile,
)
from .interactions import (
    BlockFunction,
    brute_force_J,
    check_J_bound,
    convolution_J,
    critical_regularity,
    J_bound,
    resonance,
    sweep_J_bounds,
)
