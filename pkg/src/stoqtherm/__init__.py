"""Conversions between stoquastic ground states, Gibbs distributions, Boltzmann machines and samplers."""

from .hamcore import (
    ClassicalHamiltonian,
    ClassicalTerm,
    Distribution,
    LocalHamiltonian,
    LocalTerm,
    ground_space,
    gibbs_distribution,
)
from .hbm import HyperBoltzmannMachine, Hyperedge
from .pseq import PSequence, sff_sequence, trotter_sequence
from .boltzmann import BoltzmannMachine, DeepBoltzmannMachine, IsingModel

__version__ = "0.1.0"
