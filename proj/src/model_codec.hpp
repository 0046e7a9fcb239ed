#pragma once

#include "binary_io.hpp"
#include "sitpose/learners.hpp"

namespace sitpose::detail {

/// Model body without magic, version, tag or checksum.
void encode_model_body(ByteWriter& w, const TrainedModel& model);
TrainedModel decode_model_body(ByteReader& r, LearnerKind kind);

}  // namespace sitpose::detail
