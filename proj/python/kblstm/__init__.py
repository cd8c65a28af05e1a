# Copyright 2026 The KBLSTM Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Knowledge-aware BiLSTM sequence tagging."""

from kblstm._core import (
    ConfigError,
    DimensionError,
    Error,
    InputError,
    NumericError,
    SamplingError,
    StateError,
    UsageError,
    VocabularyError,
    attention_weights,
    block_kb_gen,
    crf_marginals,
    evaluate_files,
    grad_audit,
    kb_eval,
    kb_train,
    log_partition,
    sequence_score,
    synth_gen,
    tag,
    train_typer,
    validate,
    viterbi,
    wilcoxon_rank_sum,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "Error",
    "InputError",
    "NumericError",
    "SamplingError",
    "StateError",
    "UsageError",
    "VocabularyError",
    "attention_weights",
    "block_kb_gen",
    "crf_marginals",
    "evaluate_files",
    "grad_audit",
    "kb_eval",
    "kb_train",
    "log_partition",
    "sequence_score",
    "synth_gen",
    "tag",
    "train_typer",
    "validate",
    "viterbi",
    "wilcoxon_rank_sum",
]
