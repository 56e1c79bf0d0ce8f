"""varl: soft actor-critic with gated behavior-cloning on advisor-suggested
actions, plus the experiment harness around it."""

from .buffers import GuidanceBuffer, GuidancePair, ReplayBuffer, Transition
from .nets import Adam, DenseNet, polyak_update
from .sac import SacAgent
from .shaping import GateResult, ShapingConfig, actor_update, bc_loss_and_grads
from .shaping import gate_continuous, gate_discrete, shaping_loss_and_grads
from .spaces import Box, Discrete

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Box",
    "DenseNet",
    "Discrete",
    "GateResult",
    "GuidanceBuffer",
    "GuidancePair",
    "ReplayBuffer",
    "SacAgent",
    "ShapingConfig",
    "Transition",
    "actor_update",
    "bc_loss_and_grads",
    "gate_continuous",
    "gate_discrete",
    "polyak_update",
    "shaping_loss_and_grads",
    "__version__",
]
