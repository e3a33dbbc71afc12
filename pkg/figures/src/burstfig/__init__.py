"""Figure rendering over burstnet's CSV outputs; no model computation here."""

from .reader import SchemaError, Table, read_table
from .render import KINDS, EmptyInputError, FigureRecipe, render

__all__ = ["EmptyInputError", "FigureRecipe", "KINDS", "SchemaError", "Table",
           "read_table", "render"]

__version__ = "0.1.0"
