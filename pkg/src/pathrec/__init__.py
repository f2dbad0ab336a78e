"""Interactive graph-walking recommender with a learned ask/recommend policy.

The package walks a user-item-attribute graph during a conversation: each
turn it either asks the user about one candidate attribute (chosen by
weighted entropy over the current candidate items) or recommends the top-k
scored items.  The ask-or-recommend decision is a two-action deep Q-network;
item scoring is a pairwise-trained embedding model.  Sessions run against a
scripted, item-anchored user for training and batch evaluation, against a
terminal prompt, or over HTTP for a browser client.
"""

from .graph import HeteroGraph, Relation, VertexKind, build_graph, candidate_items
from .data import (
    InteractionSplit,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    prune_rare_attributes,
    save_dataset,
    split_interactions,
)
from .embeddings import (
    EmbeddingTable,
    TrainConfig,
    TrainingCorpus,
    collect_training_corpus,
    load_embeddings,
    pairwise_loss,
    save_embeddings,
    score_attr_affinity,
    score_item,
    sgd_epoch,
    train_embeddings,
)
from .session import (
    SessionState,
    apply_accept_attribute,
    apply_reject_attribute,
    apply_reject_items,
    init_session,
    rank_attributes,
    rank_items,
    weighted_entropy,
)
from .policy import (
    Action,
    DqnConfig,
    QNetwork,
    ReplayBuffer,
    encode_state,
    load_policy,
    q_values,
    save_policy,
    select_action,
    sync_target,
    td_update,
)
from .engine import (
    AbsGreedyPolicy,
    EpisodeLog,
    EpisodeSpec,
    MaxEntropyPolicy,
    ScprPolicy,
    SimulatedUser,
    build_eval_specs,
    evaluate_policy,
    run_episode,
    train_policy,
    write_episode_logs,
)
from .metrics import (
    MetricReport,
    average_turns,
    build_report,
    relative_sr,
    sr_curve,
    success_rate_at,
    write_report_csv,
    write_report_json,
)

__version__ = "0.1.0"
