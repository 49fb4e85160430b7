"""Layout curation, judging and evaluation toolkit.

Layouts, pairs and partitions are plain dicts in the same JSON shape the CLI
reads and writes.
"""

import json as _json

from . import _designsense as _core
from ._designsense import (
    DomainError,
    Error,
    IntegrityError,
    InvalidGeometry,
    ParseError,
    ProtocolError,
    TransportError,
    format_percent,
    iou,
)

__all__ = [
    "DomainError", "Error", "IntegrityError", "InvalidGeometry", "ParseError", "ProtocolError",
    "TransportError", "agreement_rates", "apply_variant", "ari", "best_of_n", "binary_accuracy",
    "cluster_layouts", "evaluate", "format_percent", "group_heuristic", "heuristic_score", "iou",
    "judge_pair", "layout_similarity", "normalize_layout", "perturb_layout", "refine_layout",
    "render_pair", "render_svg", "run_pipeline", "synthetic_corpus", "validate_layout",
]


def _dump(obj):
    return _json.dumps(obj)


def normalize_layout(layout):
    """Parse and re-serialize a layout, filling defaults."""
    return _json.loads(_core.normalize_layout(_dump(layout)))


def validate_layout(layout, snap_tolerance=0.01):
    return _json.loads(_core.validate_layout(_dump(layout), snap_tolerance))


def apply_variant(width_px, height_px, variant):
    return tuple(_core.apply_variant(width_px, height_px, variant))


def perturb_layout(layout, seed=0, fraction=0.7):
    return _json.loads(_core.perturb_layout(_dump(layout), seed, fraction))


def group_heuristic(layout, gap_threshold=0.02):
    return _json.loads(_core.group_heuristic(_dump(layout), gap_threshold))


def ari(a, b):
    return _core.ari(_dump(a), _dump(b))


def layout_similarity(a, b):
    return _core.layout_similarity(_dump(a), _dump(b))


def cluster_layouts(layouts, tau=0.6):
    return _json.loads(_core.cluster_layouts(_dump(list(layouts)), tau))


def refine_layout(layout, snap_tolerance=0.01, max_iterations=200, step_damping=0.5):
    return _json.loads(_core.refine_layout(_dump(layout), snap_tolerance, max_iterations, step_damping))


def heuristic_score(layout):
    return _core.heuristic_score(_dump(layout))


def judge_pair(pair, debias=False):
    return _json.loads(_core.judge_pair(_dump(pair), debias))


def best_of_n(layouts):
    """Layout id of the heuristic-judge tournament winner."""
    return _core.best_of_n(_dump(list(layouts)))


def evaluate(preds, golds, fixed_classes=False):
    return _json.loads(_core.evaluate(list(preds), list(golds), fixed_classes))


def binary_accuracy(preds, golds):
    return _json.loads(_core.binary_accuracy(list(preds), list(golds)))


def agreement_rates(items):
    return _json.loads(_core.agreement_rates([list(i) for i in items]))


def render_svg(layout):
    return _core.render_svg(_dump(layout))


def render_pair(pair):
    return _core.render_pair(_dump(pair))


def synthetic_corpus(n, seed=0):
    return _json.loads(_core.synthetic_corpus(n, seed))


def run_pipeline(config):
    return _json.loads(_core.run_pipeline(_dump(config)))
