"""
Plate-read metrics, manifest loading, the evaluation harness and the stage-ablation grid.
"""

from platelab.evaluation.dataset import EvalRecord, load_manifest
from platelab.evaluation.harness import (ABLATION_CONFIGS, TABLE_COLUMNS, AblationResult, MetricsReport, run_ablation,
                                         run_eval, summarise)
from platelab.evaluation.metrics import CharCounts, alignment_markup, char_counts, char_prf, levenshtein, similarity
from platelab.evaluation.report import (ablation_frame, format_table, report_to_frame, write_report, write_table,
                                        zero_time)
