"""Binary sparse coding QUBO toolkit.

Builds quadratic unconstrained binary optimization problems from image
patches and a learned dictionary, samples them with interchangeable
solvers (simulated annealing, a software non-equilibrium Boltzmann
machine, exact enumeration), and runs iterative improvement protocols
(iterated warm starting, chained reverse-anneal batches).
"""

__version__ = "0.1.0"

from scqubo.qubo import (
    IsingProblem,
    QuboProblem,
    SampleSet,
    delta_energy,
    energy,
    from_ising,
    load_qubo,
    save_qubo,
    to_ising,
)
from scqubo.coding import (
    Dictionary,
    ImagePatch,
    SparseCode,
    build_qubo,
    metrics,
    objective,
    patch_image,
    reconstruct,
    sparse_code,
    unpatch,
)

__all__ = [
    "QuboProblem",
    "IsingProblem",
    "SampleSet",
    "energy",
    "delta_energy",
    "to_ising",
    "from_ising",
    "save_qubo",
    "load_qubo",
    "Dictionary",
    "ImagePatch",
    "SparseCode",
    "patch_image",
    "unpatch",
    "build_qubo",
    "objective",
    "sparse_code",
    "reconstruct",
    "metrics",
]
