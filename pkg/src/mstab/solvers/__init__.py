from ._common import HistoryPoint, SolveReport, SolverConfig, Status
from .idrstab import (
    IterationState,
    arnoldi_init,
    bicg_projection,
    generate_cut_space,
    idrstab_solve,
    level_iteration,
    mstab_solve,
    poly_combination,
)
from .sridr import sridr_solve
from .baselines import bicg_solve, bicgstab_solve, gmres_solve
