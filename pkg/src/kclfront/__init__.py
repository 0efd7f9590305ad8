"""Propagation of curves and surfaces via kinematical conservation laws."""

__version__ = "0.1.0"

from .closure import Closure, init_closure, recover_m, update_m
from .kcl2d import (ConservedPair, KclState2, KinkRecord, conserved_integral,
                    detect_kinks, evolve, from_conserved, kcl_flux, kink_speed,
                    reconstruct_front, step, to_conserved)
from .kcl3d import (KclState3, evolve3, init_closure3, normal3, ray_step3,
                    reconstruct_surface, solenoidal_residual, step3)
from .ray_tracer import (Front2, RayPoint, SpeedField2, check_ray_kcl_consistency,
                         constant_field, huygens_step, radial_field, trace_rays)
from .scalar_claw import (Grid1, ScalarClaw, euler_char_speeds, evolve_scalar,
                          lax_admissible, rh_speed)

__all__ = [
    "Closure", "ConservedPair", "Front2", "Grid1", "KclState2", "KclState3",
    "KinkRecord", "RayPoint", "ScalarClaw", "SpeedField2",
    "check_ray_kcl_consistency", "conserved_integral", "constant_field",
    "detect_kinks", "euler_char_speeds", "evolve", "evolve3", "evolve_scalar",
    "from_conserved", "huygens_step", "init_closure", "init_closure3",
    "kcl_flux", "kink_speed", "lax_admissible", "normal3", "radial_field",
    "ray_step3", "reconstruct_front", "reconstruct_surface", "recover_m",
    "rh_speed", "solenoidal_residual", "step", "step3", "to_conserved",
    "trace_rays", "update_m",
]
