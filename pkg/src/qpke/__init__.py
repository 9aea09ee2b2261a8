"""Simulation of quantum public-key encryption and its security notions at desk scale."""
from . import analysis, core, games, qsim, reductions, symmetric
from .core import Adversary, AdversaryView, AttackModel, AttackModelPolicy, Ciphertext, Scheme
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    InconsistentMeasurementError,
    InvalidStateError,
    OverlapViolation,
    PolicyViolation,
    QPKEError,
    ShapeError,
    TransformError,
)
from .games import GameReport, run_ind, run_nm, run_ow, run_sem_c, run_sem_q
from .schemes import BrokenScheme, PermScheme, ToyGMScheme

__version__ = "0.1.0"
