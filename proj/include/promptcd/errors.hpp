// Copyright 2026 PromptCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace promptcd {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad configuration, malformed spec/dataset files, invalid CLI usage. Maps to exit code 2.
struct config_error : error {
    using error::error;
};

/// Backend failure: transport errors, exhausted retries, server-side faults. Maps to exit code 3.
struct backend_error : error {
    using error::error;
};

/// The logit server violated the wire protocol (malformed JSON, dimension mismatch).
struct protocol_error : backend_error {
    using backend_error::backend_error;
};

} // namespace promptcd
