"""Feature-budgeted random forests.

Greedy minimax cost-weighted-impurity trees, grown on bootstrap samples and
added to a forest while the average feature-acquisition cost on validation
data stays within a budget.
"""

from .dataio import Dataset, load_costs, load_csv, load_model, save_model
from .errors import DataError, EmptyForestError, ModelFormatError, ModelVersionError
from .forest import BudgetConfig, Forest, bootstrap, grow_forest
from .impurity import ImpuritySpec, impurity, impurity_batch
from .oracle import SmallInstance, check_bound, opt_max_cost
from .stumps import ExhaustiveStumps, FixedStumps, RandomStumps, Stump, StumpBudgetPolicy
from .tree import Leaf, Internal, Tree, classify, example_cost, grow_tree, max_cost, risk

__version__ = "0.1.0"

__all__ = [
    "BudgetConfig", "DataError", "Dataset", "EmptyForestError", "ExhaustiveStumps",
    "FixedStumps", "Forest", "ImpuritySpec", "Internal", "Leaf", "ModelFormatError",
    "ModelVersionError", "RandomStumps", "SmallInstance", "Stump", "StumpBudgetPolicy", "Tree",
    "bootstrap", "check_bound", "classify", "example_cost", "grow_forest", "grow_tree",
    "impurity", "impurity_batch", "load_costs", "load_csv", "load_model", "max_cost",
    "opt_max_cost", "risk", "save_model",
]
