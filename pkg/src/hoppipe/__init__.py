"""hoppipe: a three-step multi-hop QA pipeline.

Step 1 scores every sentence of every paragraph independently; step 2
packs the best sentences (with titles and first sentences) into a
512-piece QA context and decodes an answer; step 3 rescores sentences
conditioned on that answer and picks the best two-paragraph support set.
Neural scoring is delegated to pluggable backends; deterministic lexical
and stub backends keep the whole pipeline runnable offline.
"""

from .answer import (
    AnswerKind,
    AnswerPrediction,
    FileSpanBackend,
    HttpSpanBackend,
    OracleSpanBackend,
    RandomSpanBackend,
    SpanLogits,
    decode_answer,
)
from .backends import (
    BackendProtocolError,
    HttpScorerBackend,
    LexicalOverlapBackend,
    ScoreRequest,
    TransportError,
    lexical_overlap_score,
)
from .context import ContextAssemblyError, QAContext, assemble_qa_context
from .corpus import (
    DatasetParseError,
    DatasetValidationError,
    Paragraph,
    QuestionRecord,
    SentenceRef,
    Setting,
    Violation,
    dump_dataset,
    load_dataset,
    load_para_scores,
    validate_record,
)
from .metrics import (
    CoverageReport,
    EvalReport,
    answer_scores,
    coverage_rank,
    coverage_report,
    evaluate_predictions,
    joint_scores,
    load_predictions,
    normalize_answer,
    support_scores,
    top_n_at,
)
from .pipeline import (
    RunManifest,
    RunResult,
    run_fullwiki_filter,
    run_pipeline,
    write_predictions,
)
from .scoring import (
    ScoreCache,
    ScoreTable,
    ScorerVariant,
    SentenceScore,
    TrainingBatch,
    TrainingInstance,
    build_training_instances,
    pack_training_batches,
    read_score_tables,
    score_sentences,
    write_score_tables,
)
from .support import SupportSet, brute_force_support, select_support
from .tokenization import (
    TokenSequence,
    Vocabulary,
    default_vocabulary,
    encode_scoring_input,
    tokenize,
    tokenize_with_offsets,
)

__version__ = "0.1.0"
