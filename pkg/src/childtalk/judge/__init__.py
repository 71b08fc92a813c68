"""LLM-judge annotation: prompts, verdict parsing, backends, orchestration."""
from .annotate import (
    Annotation,
    AnnotationStats,
    Annotator,
    JudgeConfig,
    VerdictCache,
    annotate,
    read_annotations_jsonl,
    write_annotations_jsonl,
)
from .backends import BackendUnavailable, HTTPBackend, JudgeBackend, MockBackend, make_backend
from .mock import display_text, mock_ei, mock_judge, mock_pt
from .prompts import (
    EmptyBatch,
    parse_age_reply,
    parse_ei_response,
    parse_pt_response,
    render_age_prompt,
    render_ei_output,
    render_ei_prompt,
    render_pt_output,
    render_pt_prompt,
)
from .taxonomy import (
    PT_ORDER,
    REFERENCE_PT,
    EIScore,
    FormatViolation,
    PTKind,
    PTLabel,
    PTType,
    ScoreOutOfRange,
)
