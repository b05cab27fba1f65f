"""Travelling-wavefront existence domains for delayed reaction-diffusion
models: characteristic roots, critical speed curves, domain atlases and
numerically resolved monotone front profiles."""

from .models import (ModelSpec, Linearization, ModelClass, ModelError,
                     HypothesisVerdict, build_model, kpp_fisher, nicholson,
                     mackey_glass, custom, linearization, check_subtangency,
                     check_hypotheses)
from .charspec import (CharFunction, RootSet, Side, real_roots,
                       complex_roots_in_strip, rootset, verify_root_laws)
from .speeds import (AsymptoticConstants, CriticalSpeedResult, SpeedCurve,
                     omega_const, critical_speed_zero, critical_speed_kappa,
                     h_star_intersection, h_star_newton, speed_curve,
                     kappa_finite_onset)
from .atlas import (DomainAtlas, PointClass, NicholsonConstants,
                    classify_point, trace_atlas, kpp_upper_boundary,
                    nicholson_boundaries, nicholson_nu0, nicholson_constants,
                    beta_kappa_minus, c_kappa_minus, delay_threshold)
from .profile import (ProfileOptions, WaveProfile, ExponentFit, Verdict,
                      VerdictResult, solve_profile, residual, check_monotone,
                      estimate_exponents, sign_changes, lyapunov_vminus,
                      vminus_trace, oscillation_verdict)
from .numutil import NumericalError

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
