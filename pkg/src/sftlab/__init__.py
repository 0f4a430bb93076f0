"""Numerical thermodynamic formalism for subshifts of finite type."""

__version__ = "0.1.0"

from .sft import Sft, PeriodicOrbit, new_sft, enumerate_words, periodic_orbits  # noqa: E402
from .observables import (  # noqa: E402
    BlockSystem,
    LocallyConstantFn,
    birkhoff_sum,
    evaluate,
    recode_to_blocks,
)
from .spectral import (  # noqa: E402
    GibbsChain,
    RpfData,
    TransferMatrix,
    gibbs_chain,
    gibbs_ratio_check,
    pressure_curve,
    rpf_solve,
    spectral_gap,
    transfer_matrix,
)

__all__ = [
    "Sft", "PeriodicOrbit", "new_sft", "enumerate_words", "periodic_orbits",
    "BlockSystem", "LocallyConstantFn", "birkhoff_sum", "evaluate", "recode_to_blocks",
    "GibbsChain", "RpfData", "TransferMatrix", "gibbs_chain", "gibbs_ratio_check",
    "pressure_curve", "rpf_solve", "spectral_gap", "transfer_matrix",
]
