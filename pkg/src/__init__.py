"""DSII - Banco de trabajo numérico para el scattering de Davey-Stewartson II."""

__version__ = "0.1.0"
