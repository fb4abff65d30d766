"""Figure rendering for V x A sweep data.

Consumes only the public CSV outputs of the sweep tool; performs no
numeric work beyond reading and plotting the columns.
"""

from isoplots.figspec import FigureSpec, SeriesSpec, load_series, parse_spec
from isoplots.render import render

__all__ = ["FigureSpec", "SeriesSpec", "load_series", "parse_spec", "render"]
