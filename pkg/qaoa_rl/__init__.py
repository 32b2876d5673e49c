"""RL-assisted QAOA schedules for transverse-field Ising chains."""

__version__ = "0.1.0"
