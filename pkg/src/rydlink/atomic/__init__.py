from .scheme import (
    DipoleLink,
    DriveField,
    Level,
    LevelScheme,
    RFTransition,
    ThermalEnsemble,
    default_scheme,
    rf_drives,
)
from .lindblad import SteadyState, build_liouvillian, steady_state
from .doppler import doppler_average, probe_susceptibility, transit_broadening, transmission
