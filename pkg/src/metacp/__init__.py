"""MetaCP: a data-centric toolchain for designing and verifying security protocols.

The PSV XML database is the single source of truth; this package parses
and canonically serializes it, checks that every role can actually run
the protocol (executability), and compiles the result into a Tamarin
multiset-rewriting theory through a plugin backend. A small HTTP service
exposes the same pipeline to the graphical designer.
"""

__version__ = "0.1.0"

from .terms import (  # noqa: F401
    Apply,
    Const,
    FunctionSymbol,
    ModelError,
    Sort,
    SortMismatch,
    Term,
    TupleTerm,
    Var,
    Visibility,
    subterms,
    substitute,
)
from .theories import BundleName, Equation, Orientation, normalize  # noqa: F401
from .protocol import (  # noqa: F401
    AgreementGoal,
    Delivery,
    KeyKind,
    LongTermKey,
    MessageStep,
    ProtocolSpec,
    Role,
    SecrecyGoal,
)
