"""Waveguide-coupled photonic crystal cavities: composition, dynamics, fitting and tuning."""

__version__ = "0.1.0"

from .errors import (CavityNetError, ConfigError, DegenerateSystemError, InvalidParameterError,
                     ModeConflictError, NoResonanceError, PortMismatchError, SingularLoopError,
                     StallError)
from .network import (CavityParams, DeviceConfig, EffectiveParams, effective_params,
                      effective_params_from_rates)
from .dynamics import Spectrum, evolve, probe_grid, reflection, steady_state
from .hybridization import (EmitterParams, cavity2_sweep, diagonalize, effective_hamiltonian,
                            emitter_lifetime)
from .purcell import (EmitterRadiativeBudget, cavity_cavity_cooperativity, cooperativity,
                      purcell_factor)
from .fitting import FitResult, fit_lorentzian, fit_two_cavity_stack
from .tuning import (ControllerConfig, TuningPlant, apply_pulse, kappa_vs_theta,
                     tune_to_target)
