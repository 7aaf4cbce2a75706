"""Goal-conditioned hierarchical RL with latent landmark graphs."""

from .agent import (
    Agent,
    Decision,
    Episode,
    EpisodeStore,
    MixSchedule,
    TransitionBatch,
    choose_policy,
    her_relabel,
    intrinsic_reward,
    update_p,
)
from .config import ConfigError, RunConfig, load_config, parse_config, serialize_config
from .landmarks import (
    CountTable,
    IncrementalNovelty,
    Landmark,
    LandmarkGraph,
    NoveltyIndex,
    build_graph,
    edge_utility,
    farthest_point_sample,
    novelty,
    propagate_utility,
    rebuild_occupancy,
    record_episode,
    select_subgoal,
    utility_softmax,
)
from .mazes import BUILTIN_MAZES, Maze, MazeSpec, Observation, StepResult, make_maze
from .nets import Adam, Mlp, numerical_gradients
from .policies import (
    SoftQPolicy,
    StudentPolicy,
    Uvfa,
    make_action_set,
    pseudo_discount,
    soft_value,
    softmax,
)
from .representation import (
    ReprFn,
    TripletBuffer,
    TripletRecord,
    contrastive_loss,
    contrastive_loss_grads,
    stability_loss,
    topk_stable,
    update_representation,
)
from .run import build_env, dump, evaluate, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"
