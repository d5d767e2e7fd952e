"""decteam: exact solver and verification toolkit for finite decentralized
team decision problems with asymmetric information.

The package models finite-horizon dynamic teams in which each agent acts on a
mix of common and private observations.  It provides

* exact reference semantics (trajectory distributions, expected utility),
* verification of candidate private-information compressions,
* common-belief Bayes filtering and a backward-induction team solver,
* brute-force oracles and a randomization-device policy transfer,
* discounted infinite-horizon value iteration on belief point sets,
* builders for classic problem families (source coding, delayed sharing,
  remote/local control),

plus a small HTTP service and a command-line client around all of it.
"""

__version__ = "0.1.0"

from .errors import (
    EmptyPointSet,
    InconsistentObservation,
    NonTeamUtility,
    SizeGuardError,
    SpecFormatError,
    ZeroProbabilityConditioning,
)
from .model import (
    AgentHistory,
    HistoryPolicy,
    OpenLoopPolicy,
    StagePatchedPolicy,
    TeamModel,
    Trajectory,
    UniformPolicy,
    enumerate_histories,
    expected_utility,
    trajectory_distribution,
    validate_model,
)
