"""Mode-based network coding over broadcast erasure channels.

Submodules: ``field`` (GF(2^w)), ``buffer`` (receiver storage), ``coder``
(sender), ``simulator``, ``analysis`` (closed-form rates), ``fairness`` and
``cli``.
"""

from .analysis import AnalysisReport, compare_correlation_models, max_correlation_gap, run_rate_calc
from .buffer import CodedPacket, ReceiverBuffer
from .coder import ModeVector, encode_full, encode_simplified
from .errors import KdiffError, ValidationError
from .fairness import run_fairness
from .field import FieldSpec, field_for_receivers, gf
from .simulator import SimConfig, SimStats, run, simulate

__version__ = "0.1.0"
