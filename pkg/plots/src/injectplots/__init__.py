from .figures import (
    EmptySeriesError,
    FigureSpec,
    MissingColumnError,
    load_rows,
    render,
)

__version__ = "0.1.0"
