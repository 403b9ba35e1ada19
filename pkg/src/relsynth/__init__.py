"""relsynth: synthetic relational database generation.

A relational database is viewed as a directed heterogeneous graph (one node
per row, one edge per foreign-key reference).  Generation happens in two
steps: a degree-preserving random graph gives the key structure, and a
graph-conditional Gaussian diffusion model generates all row attributes
jointly.  A fidelity suite scores synthetic output against the real data.
"""

from relsynth.schema import (
    ColumnSpec,
    TableSchema,
    DatabaseSchema,
    Table,
    Database,
    Link,
    SchemaError,
    DataError,
    load_schema,
    load_database,
    export_database,
    root_tables,
)
from relsynth.graph import (
    HeteroGraph,
    Subgraph,
    rdb_to_graph,
    graph_to_rdb,
    k_hop_subgraph,
)
from relsynth.structure import (
    DegreeModel,
    fit_degree_model,
    sample_structure,
    cardinality_check,
)
from relsynth.codec import (
    CategoricalCodec,
    NumericalCodec,
    TableCodec,
    fit_codecs,
    encode_features,
    decode_features,
)
from relsynth.schedule import NoiseSchedule, make_cosine_schedule, forward_sample
from relsynth.denoiser import DenoiserParams, init_params, predict_noise, gradients
from relsynth.diffusion import (
    DiffusionConfig,
    DiffusionTrainer,
    NumericalError,
    reverse_step,
    sample_features,
)
from relsynth.metrics import (
    FidelityReport,
    ks_complement,
    tv_complement,
    cardinality_metric,
    column_shapes,
    pair_trend_score,
    intra_table_trends,
    inter_table_trends,
    evaluate_fidelity,
)
from relsynth.pipeline import RunConfig, train_pipeline, sample_pipeline, evaluate_pipeline, end2end

__version__ = "0.1.0"
