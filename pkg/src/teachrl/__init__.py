"""Goal-conditioned RL toolkit: a temporal-variance curriculum teacher over a
from-scratch DDPG+HER student, with 2-D maze environments, baseline curricula,
and numerical checks of the variance-KL connection behind the method."""

from .agent import DdpgAgent
from .config import ConfigError, RunConfig, load_config, parse_config
from .goal_mdp import (
    MazeEnv,
    MazeSpec,
    MultiGoalSpec,
    PointReachEnv,
    load_layout,
    load_maze_layout,
    maze_step,
    reward,
    sample_goal_space,
)
from .her import Batch, EpisodeRecord, ReplayBuffer
from .klcheck import (
    PerturbationScenario,
    SoftPolicyInstance,
    approximation_report,
    exact_kl,
    partition_ratio_check,
    softmax_policy,
    variance_kl_approx,
)
from .neural import Mlp, NumericsError, adam_step, init_mlp, mlp_backward, mlp_forward, polyak_update
from .teacher import (
    ConfidenceHistory,
    CurriculumDistribution,
    Teacher,
    TeacherConfig,
    learning_progress,
    procurl_score,
    sample_goal,
    space_score,
    temporal_variance,
    vds_score,
)
from .training import MetricsRow, TrainingAborted, build_env, evaluate, train

__version__ = "0.1.0"
