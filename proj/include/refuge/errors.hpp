// Copyright 2026 The refuge-eval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace refuge {

/// Base class for every validation error raised by the toolkit. The CLI maps
/// these to exit code 2; anything else escaping to main is an internal error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define REFUGE_DEFINE_ERROR(Name)                       \
    struct Name : Error {                               \
        using Error::Error;                             \
    }

// Mask / BMP codec
REFUGE_DEFINE_ERROR(MalformedHeader);
REFUGE_DEFINE_ERROR(UnsupportedEncoding);
REFUGE_DEFINE_ERROR(StrictValueViolation);

// Metrics and evaluation
REFUGE_DEFINE_ERROR(DimensionMismatch);
REFUGE_DEFINE_ERROR(MissingPrediction);
REFUGE_DEFINE_ERROR(InvalidGroundTruth);
REFUGE_DEFINE_ERROR(DegenerateLabels);
REFUGE_DEFINE_ERROR(IdMismatch);
REFUGE_DEFINE_ERROR(DuplicateId);
REFUGE_DEFINE_ERROR(NonFiniteValue);

// Ranking
REFUGE_DEFINE_ERROR(BadWeights);
REFUGE_DEFINE_ERROR(IncompleteRow);

// Ensemble
REFUGE_DEFINE_ERROR(TooFewMasks);
REFUGE_DEFINE_ERROR(LabelConflict);

// Statistics
REFUGE_DEFINE_ERROR(LengthMismatch);
REFUGE_DEFINE_ERROR(EmptySample);
REFUGE_DEFINE_ERROR(TooFewGroups);
REFUGE_DEFINE_ERROR(EmptyGroup);

// Synthetic cohorts
REFUGE_DEFINE_ERROR(OutOfBounds);
REFUGE_DEFINE_ERROR(InfeasibleConfig);

// File/CLI plumbing
REFUGE_DEFINE_ERROR(IoError);
REFUGE_DEFINE_ERROR(SchemaError);

#undef REFUGE_DEFINE_ERROR

}  // namespace refuge
