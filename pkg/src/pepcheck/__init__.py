"""Convert BPMN process models to PRISM MDPs and check them.

Typical use::

    from pepcheck import parse_file, build_mdp, analyze
    result = analyze(build_mdp(parse_file("model.bpmn")))
"""

from .bpmn_xml import parse, parse_file, serialize
from .converter import convert_to_event_based, deduplicate_processes, merge_diagrams
from .differentiator import Dialect, classify_dialect
from .engine import analyze, check_deadlock_free, expected_reward, reach_probability
from .errors import (AmbiguousDialect, EmitError, GenerationError, NonConvergence, ParseError,
                     PepError, SpliceError, StateSpaceLimitExceeded, UnlinkedSignal,
                     ValidationError)
from .generator import compose_modules, generate_module
from .model import (Diagram, EventLink, FlowNode, MessageFlow, NodeKind, Pool, ProcessModel,
                    SequenceFlow, Timeline, validate)
from .pipeline import build_baseline_mdp, build_mdp, compile_baseline, compile_model, prepare
from .prism import emit_model, emit_properties, read_model

__version__ = "0.1.0"
