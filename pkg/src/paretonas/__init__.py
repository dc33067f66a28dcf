"""Multi-objective evolutionary search over bitstring-encoded subnetworks of
a segmentation supernet: genome codecs, an analytical cost model, an elitist
NSGA-II loop, pluggable accuracy evaluators, and Pareto-front metrics."""

from .archive import (
    GenerationRecord,
    RunArchive,
    RunWriter,
    load_archive,
    load_checkpoint,
    load_records,
    load_run_config,
)
from .config import EvaluatorSpec, SearchConfig, StopRule
from .cost import (
    CostModel,
    CostReport,
    LayerGraph,
    LayerKind,
    LayerRecord,
    ThroughputModel,
    build_layer_graph,
    cost_report,
    count_flops,
    count_params,
    latency_proxy,
)
from .engine import EvolutionEngine, evolve
from .errors import (
    CheckpointError,
    CodecError,
    ConfigError,
    EvaluationError,
    MissingEntryError,
    TransportError,
)
from .evaluators import (
    EvalRequest,
    EvalResponse,
    Evaluator,
    ExternalEvaluator,
    SurrogateConstants,
    SyntheticEvaluator,
    TableEvaluator,
    hash_noise,
    surrogate_error,
)
from .genome import (
    Genome,
    MobileNetV2Arch,
    Space,
    XceptionArch,
    bit_labels,
    decode,
    decode_mobilenetv2,
    decode_xception,
    encode,
    encode_mobilenetv2,
    encode_xception,
    genome_from_int,
    parse_genome,
    space_cardinality,
    supernet_genome,
)
from .nsga2 import (
    Individual,
    Population,
    crossover,
    crowding_distance,
    fast_nondominated_sort,
    mutate,
    random_genome,
    seed_population,
    tournament_select,
)
from .pareto import (
    ParetoFront,
    dominates,
    extract_front,
    gene_frequency,
    hyperarea_difference,
    hypervolume_2d,
    labeled_gene_frequency,
)

__version__ = "0.1.0"
