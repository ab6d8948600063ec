"""Session-based next-item recommendation engine.

Sessions are encoded as directed item-transition graphs, node vectors are
learned with gated message passing, and candidates are scored against a
hybrid session embedding.  An optional adaptive weighting path emphasises
items by their similarity to the session's last item and their proximity
to the session's end, and item side information can be fused into the
local or global representation.
"""

__version__ = "0.1.0"

from sbrec.model import HyperParams
from sbrec.training import TrainConfig

__all__ = ["HyperParams", "TrainConfig", "__version__"]
