"""Diffusion models that learn evolutionary multi-objective search.

Recorded NSGA-II runs on benchmark problems, read backwards, serve as the
forward-diffusion training signal for per-step Gaussian noise models with
mutual-information attention. Reverse diffusion then generates approximate
Pareto sets for new problems under a strict objective-evaluation budget.
"""

from .attention import (
    AttentionWeights,
    apply_attention,
    compute_attention,
    default_bins,
    mutual_information,
    nmi_matrix,
    nmi_signature,
    normalized_mi,
)
from .diffusion import (
    AffineTransform,
    NoiseModel,
    PretrainedLibrary,
    StepModel,
    check_schedule,
    estimate_step,
    fit_transform,
    forward_noising,
    match_prompt,
    reverse_step,
    sample_pareto_set,
    train_forward,
)
from .metrics import (
    FeLedger,
    ParetoArchive,
    dominates,
    igd,
    nondominated_filter,
    nondominated_mask,
)
from .moea import (
    EvolutionaryTrajectory,
    crowding_distance,
    fast_nondominated_sort,
    nsga2_run,
    vary,
)
from .problems import (
    MopInstance,
    Population,
    evaluate,
    make_problem,
    random_population,
    sample_reference_front,
)

__version__ = "0.1.0"
