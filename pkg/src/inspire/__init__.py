"""Latent-space retrieval toolkit for generative image models.

The package searches the latent space of a (toy) generator for the point
whose rendering best matches a target image under a weighted composite
criterion.  It ships deterministic feature statistics, gradient and
derivative-free optimizers, a benchmark harness, an interactive evolution
loop, and an HTTP service for driving that loop from a browser.
"""

from inspire.images import (
    CodecError,
    DimensionError,
    GradCheckReport,
    ImageBuffer,
    circular_shift,
    decode_png,
    downscale_average,
    encode_png,
    finite_difference_gradient,
    gradient_check,
)
from inspire.generators import (
    CapabilityError,
    GeneratorRegistry,
    LatentPoint,
    SmoothnessDiscriminator,
    default_registry,
    discriminator_score,
    discriminator_vjp,
    generate,
    generator_vjp,
    make_toy,
)
from inspire.criteria import (
    CriterionWeights,
    FeatureStackConfig,
    LayerStatistics,
    classification_loss,
    extract_features,
    feature_loss,
    norm_penalty,
    pixel_loss,
    realism_penalty,
    total_criterion,
    total_criterion_gradient,
)
from inspire.optimizers import (
    BudgetLedger,
    DeConfig,
    EsConfig,
    GradientMethodConfig,
    NonDifferentiableProblemError,
    NonFiniteGradientError,
    QuadraticProblem,
    RetrievalProblem,
    RunTrace,
    apply_conditioning,
    gradient_update,
    mutate_coordinates,
    rate_crossover,
    run_de,
    run_es,
    run_gradient_method,
    run_optimizer,
    run_random_search,
    two_point_crossover,
)
from inspire.hevol import (
    HevolConfig,
    HevolSession,
    SelectionBallot,
    auto_oracle_select,
    propose_batch,
    record_selection,
    replay_session,
    session_best,
    start_session,
)
from inspire.harness import (
    ExperimentSpec,
    Report,
    emit_report,
    make_target,
    run_experiment,
    units_grid,
)

__version__ = "0.1.0"
