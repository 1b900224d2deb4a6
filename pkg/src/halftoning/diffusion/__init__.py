from .engine import (
    HalftoneResult,
    rescale,
    run_floyd_steinberg_direct,
    run_scheme,
    sigma_delta_1d,
    sign,
)
from .schemes import (
    FIRST_ORDER,
    H2,
    H3,
    Direction,
    FeedbackFilter,
    OrderCertificate,
    SchemeEntry,
    SchemeError,
    SchemeSpec,
    builtin_schemes,
    expand_scheme,
    format_extended,
    load_scheme_json,
    make_scheme,
    resolve_scheme,
    scheme_from_dict,
    scheme_to_dict,
    verify_order,
)

__all__ = [
    "FIRST_ORDER",
    "H2",
    "H3",
    "Direction",
    "FeedbackFilter",
    "HalftoneResult",
    "OrderCertificate",
    "SchemeEntry",
    "SchemeError",
    "SchemeSpec",
    "builtin_schemes",
    "expand_scheme",
    "format_extended",
    "load_scheme_json",
    "make_scheme",
    "rescale",
    "resolve_scheme",
    "run_floyd_steinberg_direct",
    "run_scheme",
    "scheme_from_dict",
    "scheme_to_dict",
    "sigma_delta_1d",
    "sign",
    "verify_order",
]
