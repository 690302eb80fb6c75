"""GUE sudden-quench work statistics, Loschmidt echo and form factors."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .analytic import (  # noqa: E402
    CurveSeries,
    chi,
    connected_ff,
    echo_plateau,
    form_factor,
    frame_potential_1,
    loschmidt_echo,
    mean_work,
    work_pdf,
    work_variance,
    z_avg,
)
from .ensemble import make_quench, sample_gue  # noqa: E402
from .specfun import ScaledValue, hermite_fn, laguerre, laguerre_row  # noqa: E402

__all__ = [
    "__version__",
    "BACKEND",
    "CurveSeries",
    "ScaledValue",
    "chi",
    "connected_ff",
    "echo_plateau",
    "form_factor",
    "frame_potential_1",
    "hermite_fn",
    "laguerre",
    "laguerre_row",
    "loschmidt_echo",
    "make_quench",
    "mean_work",
    "sample_gue",
    "work_pdf",
    "work_variance",
    "z_avg",
]
