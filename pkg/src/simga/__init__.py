"""SimRank-based global aggregation for heterophilous node classification.

Subpackage map:
  graph    CSR graph container, edge-list loader, homophily, transition matrix
  data     dataset bundles, text-format loaders, synthetic generators
  simrank  exact / power-series / local-push SimRank, top-k pruning, aggregation
  walks    random-walk oracles (tour enumeration, meeting probabilities, walk series)
  nn       dense MLP stack with hand-derived gradients, Adam, gradient checking
  model    the similarity-aggregation classifier, training loop, diagnostics
  verify   executable equivalence suites
  bench    scaling-ladder benchmark
  cli      command-line entry point (`simga`)
"""

from .data import DatasetBundle, gen_structural_heterophily, gen_twin_graph, load_bundle
from .errors import (
    DivergenceError,
    GuardError,
    InputFormatError,
    NumericError,
    ParameterError,
    SimgaError,
)
from .graph import (
    Graph,
    TransitionMatrix,
    build_graph,
    load_edge_list,
    node_homophily,
    random_connected_graph,
    random_graph,
    transition,
)
from .model import (
    GroupingReport,
    HyperParams,
    SimgaParams,
    TrainReport,
    aggregate,
    embed,
    evaluate,
    fit,
    forward,
    grouping_report,
    load_checkpoint,
    precompute_similarity,
    save_checkpoint,
)
from .simrank import (
    RawPushMatrix,
    SimMatrix,
    SparseSim,
    class_score_histogram,
    dump_sparse_sim,
    load_sparse_sim,
    simrank_fixedpoint,
    simrank_localpush,
    simrank_power_series,
    simrank_production,
    sparse_aggregate,
    topk_from_push,
    topk_prune,
)
from .walks import (
    WalkDistribution,
    enumerate_tours,
    meeting_probability,
    simrank_series,
    walk_distribution,
)

__version__ = "0.1.0"
