"""sewkit: parametric sewing patterns, tokenization, assembly, drape and evaluation."""

from .assembly import AssemblyOptions, GarmentMesh, assemble_garment, merge_patterns
from .body import BodyTrack, Capsule, default_body
from .errors import SewError
from .kernels import BACKEND
from .metrics import EvalOptions, EvalReport, chamfer, edge_accuracy, evaluate_dir, f_shape_l2, panel_accuracy, shape_l2
from .model import EdgeSpec, Panel, Placement, SewingPattern, Stitch, ValidationReport
from .pattern_io import PatternDocument, export_obj, export_svg, parse_pattern, read_pattern, serialize_pattern
from .sim import DrapeReport, SimParams, drape, initialize_outside, shrink_waist, step
from .tokens import TokenSpec, decode_pattern, encode_pattern
from .validation import validate_pattern

__version__ = "0.1.0"

__all__ = [
    "AssemblyOptions", "BACKEND", "BodyTrack", "Capsule", "DrapeReport", "EdgeSpec", "EvalOptions", "EvalReport",
    "GarmentMesh", "Panel", "PatternDocument", "Placement", "SewError", "SewingPattern", "SimParams", "Stitch",
    "TokenSpec", "ValidationReport", "assemble_garment", "chamfer", "decode_pattern", "default_body", "drape",
    "edge_accuracy", "encode_pattern", "evaluate_dir", "export_obj", "export_svg", "f_shape_l2", "initialize_outside",
    "merge_patterns", "panel_accuracy", "parse_pattern", "read_pattern", "serialize_pattern", "shape_l2",
    "shrink_waist", "step", "validate_pattern",
]
