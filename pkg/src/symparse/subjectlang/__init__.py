from .syntax import (
    FunctionDef, LoopInfo, MiniSyntaxError, SubjectProgram, UnresolvedName,
    UnstructuredControlFlow, list_loops, parse_subject,
)
from .concrete import ConcreteRunner, ParseVerdict, run_concrete
from .manifest import Manifest, ManifestError, load_manifest, parse_manifest

__all__ = [
    "FunctionDef", "LoopInfo", "MiniSyntaxError", "SubjectProgram",
    "UnresolvedName", "UnstructuredControlFlow", "list_loops", "parse_subject",
    "ConcreteRunner", "ParseVerdict", "run_concrete",
    "Manifest", "ManifestError", "load_manifest", "parse_manifest",
]
